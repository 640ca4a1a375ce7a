"""Exact per-mode analysis of the interfacial iteration on a single ball.

On a ball of radius R every operator in the interior-exterior iteration is
diagonal in spherical harmonics, with degree-l eigenvalues

    interior Laplace flux   lam_r(l) = eps1 * l / R
    exterior screened flux  lam_c(l) = eps2 * kappa * (-k_l'/k_l)(kappa R)
    interior screened flux  lam_e(l) = eps2 * kappa * (i_l'/i_l)(kappa R)
    single layer            s(l)    = kappa R^2 i_l(kappa R) k_l(kappa R)

and the preconditioned iteration contracts mode l with factor
|1 - alpha * mu(l)| where mu(l) = (lam_r + lam_c)/(lam_e + lam_c).  The
Wronskian of the modified spherical Bessel pair gives the exact identity
s(l) * (lam_e(l) + lam_c(l)) = eps2, so mu is also the spectrum of the
single-layer-preconditioned interface operator.

This module is the analytic ground truth against which the discrete
pipeline is validated: eigenvalues, the spectral-equivalence constants,
optimal stepping parameters, a scalar per-mode Richardson oracle, and the
closed-form Born-ion reaction potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_i_ratio, bessel_k_ratio, log_deriv_i, log_deriv_k

__all__ = [
    "PhysicalParams",
    "ModeSpectrum",
    "ModeTrace",
    "dtn_laplace_eig",
    "dtn_hsp_exterior_eig",
    "dtn_hsp_interior_eig",
    "single_layer_eig",
    "single_layer_eigs",
    "mode_spectrum",
    "spectral_bounds",
    "sobolev_ball_bound",
    "sobolev_mode_ratio",
    "optimal_alpha",
    "practical_alpha",
    "convergence_radius",
    "mode_richardson",
    "born_ion_reaction",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Dielectric constants and inverse screening length (1/Angstrom).

    kappa = 0 is rejected; the constant-coefficient exterior problem
    changes character there.  Very small kappa covers the limit numerically.
    """

    eps1: float = 1.0
    eps2: float = 78.54
    kappa: float = 0.104

    def __post_init__(self):
        if not self.eps1 > 0:
            raise ValueError(f"eps1 must be > 0, got {self.eps1}")
        if not self.eps2 > 0:
            raise ValueError(f"eps2 must be > 0, got {self.eps2}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")


def _check_radius(radius: float) -> float:
    radius = float(radius)
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    return radius


def dtn_laplace_eig(ell: int, radius: float, params: PhysicalParams) -> float:
    """Degree-l eigenvalue eps1*l/R of the interior Laplace flux map."""
    if ell < 0:
        raise ValueError(f"degree must be >= 0, got {ell}")
    return params.eps1 * ell / _check_radius(radius)


def dtn_hsp_exterior_eig(ell: int, radius: float, params: PhysicalParams) -> float:
    """Degree-l eigenvalue of the exterior screened flux map.

    Equals eps2*kappa*(-k_l'/k_l)(kappa R) >= eps2*(l+1)/R.
    """
    radius = _check_radius(radius)
    return params.eps2 * params.kappa * log_deriv_k(ell, params.kappa * radius)


def dtn_hsp_interior_eig(ell: int, radius: float, params: PhysicalParams) -> float:
    """Degree-l eigenvalue of the interior screened flux map, > 0.

    Equals eps2*kappa*(i_l'/i_l)(kappa R).
    """
    radius = _check_radius(radius)
    return params.eps2 * params.kappa * log_deriv_i(ell, params.kappa * radius)


def single_layer_eigs(lmax: int, radius: float, kappa: float) -> np.ndarray:
    """Eigenvalues kappa R^2 i_l(kappa R) k_l(kappa R), l = 0..lmax.

    Built from neighbor ratios so the result never over/underflows.
    """
    radius = _check_radius(radius)
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    x = kappa * radius
    vals = np.empty(lmax + 1)
    # s_0 = kappa R^2 (e^-x sinh x / x)(e^x k_0) with exponentials cancelled
    vals[0] = kappa * radius * radius * (-math.expm1(-2.0 * x)) / (2.0 * x * x)
    for ell in range(1, lmax + 1):
        vals[ell] = vals[ell - 1] * bessel_i_ratio(ell, x) / bessel_k_ratio(ell, x)
    return vals


def single_layer_eig(ell: int, radius: float, kappa: float) -> float:
    """Degree-l eigenvalue of the screened single-layer operator on a sphere."""
    if ell < 0:
        raise ValueError(f"degree must be >= 0, got {ell}")
    return float(single_layer_eigs(ell, radius, kappa)[ell])


@dataclass(frozen=True)
class ModeSpectrum:
    """Per-degree eigenvalue triples and preconditioned values on one ball."""

    radius: float
    params: PhysicalParams
    ells: np.ndarray
    lam_r: np.ndarray
    lam_c: np.ndarray
    lam_e: np.ndarray

    @property
    def mu(self) -> np.ndarray:
        """Preconditioned spectrum (lam_r + lam_c)/(lam_e + lam_c)."""
        return (self.lam_r + self.lam_c) / (self.lam_e + self.lam_c)


def mode_spectrum(radius: float, params: PhysicalParams, lmax: int = 50) -> ModeSpectrum:
    """Eigenvalue triples for degrees 0..lmax on a ball of the given radius."""
    radius = _check_radius(radius)
    ells = np.arange(lmax + 1)
    lam_r = params.eps1 * ells / radius
    lam_c = np.array([dtn_hsp_exterior_eig(l, radius, params) for l in ells])
    lam_e = np.array([dtn_hsp_interior_eig(l, radius, params) for l in ells])
    return ModeSpectrum(radius=radius, params=params, ells=ells,
                        lam_r=lam_r, lam_c=lam_c, lam_e=lam_e)


def spectral_bounds(params: PhysicalParams, c_sobolev: float) -> tuple[float, float]:
    """Spectral-equivalence constants (C1, C2).

    C1 = min(eps1/eps2, 1/(1 + C_S)),  C2 = max(1, eps1/eps2).
    """
    if not c_sobolev > 0:
        raise ValueError(f"C_S must be > 0, got {c_sobolev}")
    ratio = params.eps1 / params.eps2
    return min(ratio, 1.0 / (1.0 + c_sobolev)), max(1.0, ratio)


def sobolev_ball_bound(radius: float) -> float:
    """Interior-exterior Sobolev constant bound R^3/3 for a ball."""
    return _check_radius(radius) ** 3 / 3.0


def sobolev_mode_ratio(ell: int, radius: float) -> float:
    """Per-mode ratio R^3/((2l+3)(l+1)); its maximum over l sits at l=0."""
    if ell < 0:
        raise ValueError(f"degree must be >= 0, got {ell}")
    radius = _check_radius(radius)
    return radius**3 / ((2 * ell + 3) * (ell + 1))


def optimal_alpha(c1: float, c2: float) -> float:
    """Optimal stepping parameter 2/(C1 + C2) for a spectrum in [C1, C2]."""
    if not 0 < c1 <= c2:
        raise ValueError(f"need 0 < C1 <= C2, got C1={c1}, C2={c2}")
    return 2.0 / (c1 + c2)


def practical_alpha(params: PhysicalParams) -> float:
    """Practical optimal step, dropping the hard-to-estimate 1/(1+C_S) term.

    For eps2 >= eps1 this is 2/(eps1/eps2 + 1); for eps2 < eps1 the
    ratio-mirrored reciprocal (eps1/eps2 + 1)/(2 eps1/eps2).  Evaluates to
    4/3, 1, 3/4 at eps2 = 2, 1, 0.5 with eps1 = 1, and approaches 2 for
    large eps2.
    """
    ratio = params.eps1 / params.eps2
    if ratio <= 1.0:
        return 2.0 / (ratio + 1.0)
    return (ratio + 1.0) / (2.0 * ratio)


def convergence_radius(alpha: float, spectrum: ModeSpectrum) -> float:
    """Contraction factor max_l |1 - alpha mu(l)|; iteration converges iff < 1."""
    mu = spectrum.mu
    if mu.size == 0:
        raise ValueError("spectrum is empty")
    return float(np.max(np.abs(1.0 - alpha * mu)))


@dataclass
class ModeTrace:
    """Per-mode error history of the scalar Richardson recurrence."""

    alpha: float
    mu: np.ndarray
    ratios: np.ndarray
    fixed_point: np.ndarray
    errors: np.ndarray  # (n_ite + 1, n_modes), errors[k] = |g^k - g*|
    n_ite: int
    converged: bool
    diverged: bool


def mode_richardson(
    spectrum: ModeSpectrum,
    g0,
    alpha: float,
    tol: float = 1e-10,
    kmax: int = 500,
    source=None,
) -> ModeTrace:
    """Run g^{k+1} = (1 - alpha mu) g^k + alpha*source per degree.

    Errors are measured against the per-mode fixed point source/mu and decay
    geometrically with ratio |1 - alpha mu(l)|.  ``converged`` means the max
    error dropped below tol relative to its initial value; ``diverged``
    means it grew past 10x the initial value (or went non-finite).  Mode
    errors evolve monotonically, so growth past the threshold is an
    unambiguous divergence signal.
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    mu = spectrum.mu
    g = np.array(g0, dtype=float)
    if g.shape != mu.shape:
        raise ValueError(f"g0 shape {g.shape} does not match spectrum {mu.shape}")
    src = np.zeros_like(mu) if source is None else np.asarray(source, dtype=float)
    gstar = src / mu
    errors = [np.abs(g - gstar)]
    e0 = max(float(errors[0].max()), 1e-300)
    converged = diverged = False
    n_ite = 0
    for _ in range(kmax):
        g = (1.0 - alpha * mu) * g + alpha * src
        err = np.abs(g - gstar)
        errors.append(err)
        n_ite += 1
        emax = float(err.max())
        if not math.isfinite(emax) or emax > 10.0 * e0:
            diverged = True
            break
        if emax <= tol * e0:
            converged = True
            break
    return ModeTrace(
        alpha=alpha,
        mu=mu,
        ratios=np.abs(1.0 - alpha * mu),
        fixed_point=gstar,
        errors=np.array(errors),
        n_ite=n_ite,
        converged=converged,
        diverged=diverged,
    )


def born_ion_reaction(charge: float, radius: float, params: PhysicalParams) -> float:
    """Reaction potential at the center of a ball with a centered point charge.

    psi_r(0) = (q/R) (1/(eps2 (1 + kappa R)) - 1/eps1), from matching the
    interior Coulomb-plus-constant solution to the decaying screened
    exterior across the sphere.
    """
    radius = _check_radius(radius)
    kr = params.kappa * radius
    return (charge / radius) * (1.0 / (params.eps2 * (1.0 + kr)) - 1.0 / params.eps1)
