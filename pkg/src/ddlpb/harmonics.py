"""Real orthonormal spherical harmonics.

The basis is real-valued, orthonormal under the surface integral over the
unit sphere, and carries no Condon-Shortley phase:

    Y_{l,0}  = Pb_l^0(cos th)
    Y_{l,m}  = sqrt(2) Pb_l^m(cos th) cos(m ph)   (m > 0)
    Y_{l,-m} = sqrt(2) Pb_l^m(cos th) sin(m ph)   (m > 0)

where Pb is the fully normalized associated Legendre function, including
the sqrt((2l+1)(l-m)!/(4 pi (l+m)!)) factor.  Pb is evaluated through the
normalized three-term recurrence, stable well beyond l = 50.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["HarmonicIndex", "n_harmonics", "real_sph_harm", "ylm_table"]

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class HarmonicIndex:
    """Degree/order pair (l, m) with |m| <= l."""

    degree: int
    order: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        if abs(self.order) > self.degree:
            raise ValueError(
                f"order must satisfy |m| <= l, got l={self.degree}, m={self.order}"
            )

    @property
    def flat(self) -> int:
        """Linear index l^2 + l + m, bijective onto 0..(lmax+1)^2-1."""
        return self.degree * self.degree + self.degree + self.order

    @classmethod
    def from_flat(cls, index: int) -> "HarmonicIndex":
        if index < 0:
            raise ValueError(f"flat index must be >= 0, got {index}")
        degree = int(np.floor(np.sqrt(index)))
        order = index - degree * degree - degree
        return cls(degree, order)


def n_harmonics(lmax: int) -> int:
    """Number of basis functions with degree <= lmax."""
    return (lmax + 1) * (lmax + 1)


def _check_unit(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[-1] != 3:
        raise ValueError(f"expected 3-vectors, got shape {points.shape}")
    norms = np.linalg.norm(points, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"points must lie on the unit sphere (|norm-1| = {worst:.3e})")
    return points


def ylm_table(lmax: int, points) -> np.ndarray:
    """Evaluate all Y_{l,m} with l <= lmax at unit vectors.

    Parameters
    ----------
    lmax : int
        Maximum degree.
    points : array_like, shape (n, 3) or (3,)
        Unit vectors.

    Returns
    -------
    ndarray, shape (n, (lmax+1)**2)
        Columns ordered by the flat index l^2 + l + m.
    """
    if lmax < 0:
        raise ValueError(f"lmax must be >= 0, got {lmax}")
    pts = _check_unit(points)
    n = pts.shape[0]
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    sin_theta = np.hypot(x, y)

    # Azimuthal factors; at the poles Pb_l^m vanishes for m > 0, so the
    # placeholder phi = 0 never contributes.
    safe = np.where(sin_theta > 1e-300, sin_theta, 1.0)
    cos_phi = np.where(sin_theta > 1e-300, x / safe, 1.0)
    sin_phi = np.where(sin_theta > 1e-300, y / safe, 0.0)

    out = np.empty((n, n_harmonics(lmax)))
    sqrt2 = np.sqrt(2.0)

    pmm = np.full(n, np.sqrt(1.0 / (4.0 * np.pi)))  # Pb_m^m, starting at m=0
    cos_m = np.ones(n)
    sin_m = np.zeros(n)

    for m in range(lmax + 1):
        if m > 0:
            pmm = pmm * (np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_theta)
            cos_m, sin_m = (
                cos_m * cos_phi - sin_m * sin_phi,
                sin_m * cos_phi + cos_m * sin_phi,
            )
        p_prev2 = np.zeros(n)
        p = pmm
        for ell in range(m, lmax + 1):
            if ell == m + 1:
                p_prev2, p = p, np.sqrt(2.0 * m + 3.0) * z * p
            elif ell > m + 1:
                a = np.sqrt(
                    (2.0 * ell - 1.0) * (2.0 * ell + 1.0) / ((ell - m) * (ell + m))
                )
                b = np.sqrt(
                    (2.0 * ell + 1.0)
                    * (ell + m - 1.0)
                    * (ell - m - 1.0)
                    / ((ell - m) * (ell + m) * (2.0 * ell - 3.0))
                )
                p_prev2, p = p, a * z * p - b * p_prev2
            base = ell * ell + ell
            if m == 0:
                out[:, base] = p
            else:
                out[:, base + m] = sqrt2 * p * cos_m
                out[:, base - m] = sqrt2 * p * sin_m
    return out


def real_sph_harm(idx: HarmonicIndex, s) -> float:
    """Real orthonormal spherical harmonic Y_l^m evaluated at a unit vector."""
    table = ylm_table(idx.degree, s)
    return float(table[0, idx.flat])
