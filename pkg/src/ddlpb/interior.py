"""Coupled per-ball spectral solvers for the two interior problems.

Both the Laplace problem and the homogeneous screened Poisson (HSP)
problem on the union of balls are solved by one spherical-harmonic
expansion per ball,

    u_j(r s) = sum_{l,m} c^j_{lm} rad_l(r) Y_l^m(s),
    rad_l(r) = (r/R_j)^l            (Laplace)
             = i_l(kappa r)/i_l(kappa R_j)   (HSP),

with boundary conditions collocated at the Lebedev points of sphere j:
the Dirichlet datum at exposed points, and continuity with the smallest
containing ball's expansion at buried points.  Coefficients are recovered
from point values by the discrete projection c = 4 pi sum_n w_n u(s_n)
Y(s_n), which is exact for band-limited data when the grid precision is
at least twice the truncation degree.

The coupled linear system is solved matrix-free by restarted GMRES
(restart 30, at most ~500 inner iterations, relative residual 1e-8), with
a damped fixed-point fallback if the Krylov iteration stagnates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .bessel import bessel_i_all, log_deriv_i
from .cavity import SurfaceGrid
from .harmonics import n_harmonics, ylm_table

__all__ = [
    "BallExpansion",
    "BoundaryDatum",
    "InnerSolveError",
    "solve_laplace_cavity",
    "solve_hsp_cavity",
    "neumann_trace",
    "evaluate_at",
]

FOUR_PI = 4.0 * np.pi
INNER_RTOL = 1e-8
GMRES_RESTART = 30
GMRES_MAXITER = 17  # restart cycles; ~500 inner iterations
FALLBACK_MAXITER = 2000
_TINY_R = 1e-14


class InnerSolveError(RuntimeError):
    """Coupled solve failed to reach the target residual.

    Carries the achieved relative residual in ``residual``.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _degree_of_flat(lmax: int) -> np.ndarray:
    """Degree l for each flat index l^2+l+m."""
    return np.repeat(np.arange(lmax + 1), 2 * np.arange(lmax + 1) + 1)


@dataclass(eq=False)
class BallExpansion:
    """Per-ball spherical-harmonic coefficients of an interior solution."""

    coef: np.ndarray  # (n_atoms, (lmax+1)^2)
    kind: str  # 'laplace' | 'hsp'
    centers: np.ndarray  # (n_atoms, 3)
    radii: np.ndarray
    lmax: int
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in ("laplace", "hsp"):
            raise ValueError(f"kind must be 'laplace' or 'hsp', got {self.kind!r}")
        if self.kind == "hsp" and not (self.kappa and self.kappa > 0):
            raise ValueError("hsp expansion needs kappa > 0")
        if self.coef.shape[1] != n_harmonics(self.lmax):
            raise ValueError(
                f"coefficient count {self.coef.shape[1]} != (lmax+1)^2 = {n_harmonics(self.lmax)}"
            )


@dataclass(eq=False)
class BoundaryDatum:
    """Interface function as per-ball coefficients, evaluable on each sphere."""

    coef: np.ndarray  # (n_atoms, (lmax+1)^2)
    lmax: int

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)
        if self.coef.ndim != 2 or self.coef.shape[1] != n_harmonics(self.lmax):
            raise ValueError(
                f"coefficient array must be (n_atoms, {n_harmonics(self.lmax)}), "
                f"got {self.coef.shape}"
            )

    def values_on_grid(self, surface: SurfaceGrid) -> np.ndarray:
        """Values at every Lebedev point of every sphere, shape (M, N)."""
        return self.coef @ surface.ylm(self.lmax).T

    def values_exposed(self, surface: SurfaceGrid) -> np.ndarray:
        """Values at exposed points, flat in the canonical row-major order."""
        return self.values_on_grid(surface)[surface.exposed_index]

    @classmethod
    def from_exposed_values(cls, surface: SurfaceGrid, values, lmax: int,
                            fill=None) -> "BoundaryDatum":
        """Project exposed-point values onto per-ball harmonics.

        ``fill`` (shape (M, N)) supplies values at buried points; zeros by
        default.  On a full sphere the projection inverts evaluation exactly
        for band-limited data.
        """
        grid_vals = np.zeros_like(surface.exposed, dtype=float) if fill is None \
            else np.array(fill, dtype=float)
        grid_vals[surface.exposed_index] = np.asarray(values, dtype=float)
        ylm = surface.ylm(lmax)
        coef = FOUR_PI * (grid_vals * surface.weights) @ ylm
        return cls(coef=coef, lmax=lmax)


def _radial_ratio(kind: str, r: np.ndarray, radius: float, lmax: int,
                  kappa: float | None) -> np.ndarray:
    """rad_l(r)/rad_l(R) for one ball, shape (len(r), lmax+1); r <= R."""
    out = np.empty((len(r), lmax + 1))
    if kind == "laplace":
        ratio = r / radius
        out[:] = ratio[:, None] ** np.arange(lmax + 1)[None, :]
    else:
        ref = bessel_i_all(lmax, kappa * radius, scaled=True)
        for b, rb in enumerate(r):
            if rb <= _TINY_R:
                row = np.zeros(lmax + 1)
                row[0] = np.exp(-kappa * radius) / ref[0]
            else:
                num = bessel_i_all(lmax, kappa * rb, scaled=True)
                row = num / ref * np.exp(kappa * (rb - radius))
            out[b] = row
    return out


class _CoupledSystem:
    """Matrix-free operator X -> X - Project(CouplingEval(X)) for one kind."""

    def __init__(self, surface: SurfaceGrid, lmax: int, kind: str,
                 kappa: float | None):
        if surface.grid.precision < 2 * lmax:
            raise ValueError(
                f"Lebedev precision {surface.grid.precision} < 2*lmax = {2 * lmax}; "
                "coefficient projection would alias"
            )
        self.surface = surface
        self.lmax = lmax
        self.kind = kind
        self.kappa = kappa
        self.nlm = n_harmonics(lmax)
        self.m = surface.n_atoms
        self.ylm = surface.ylm(lmax)
        self.ylm_w = surface.weights[:, None] * self.ylm
        self.deg = _degree_of_flat(lmax)

        bj, bn = np.nonzero(~surface.exposed)
        self.bj, self.bn = bj, bn
        self.cont = surface.container[bj, bn]
        if len(bj):
            centers = surface.centers
            radii = surface.radii
            vec = surface.positions[bj, bn] - centers[self.cont]
            r = np.linalg.norm(vec, axis=1)
            shat = np.where(r[:, None] > _TINY_R, vec / np.maximum(r, _TINY_R)[:, None],
                            np.array([0.0, 0.0, 1.0]))
            ybur = ylm_table(lmax, shat)
            basis = np.empty((len(bj), self.nlm))
            for i in np.unique(self.cont):
                rows = np.nonzero(self.cont == i)[0]
                rad = _radial_ratio(kind, r[rows], radii[i], lmax, kappa)
                basis[rows] = rad[:, self.deg] * ybur[rows]
            self.basis = basis
        else:
            self.basis = np.empty((0, self.nlm))

    def _project(self, grid_vals: np.ndarray) -> np.ndarray:
        return FOUR_PI * grid_vals @ self.ylm_w

    def _coupling(self, coef: np.ndarray) -> np.ndarray:
        vals = np.zeros((self.m, self.surface.grid.order))
        if len(self.bj):
            vals[self.bj, self.bn] = np.einsum(
                "bl,bl->b", self.basis, coef[self.cont]
            )
        return vals

    def matvec(self, flat: np.ndarray) -> np.ndarray:
        coef = flat.reshape(self.m, self.nlm)
        return (coef - self._project(self._coupling(coef))).ravel()

    def rhs(self, exposed_values: np.ndarray) -> np.ndarray:
        vals = np.zeros((self.m, self.surface.grid.order))
        vals[self.surface.exposed_index] = exposed_values
        return self._project(vals).ravel()

    def solve(self, exposed_values: np.ndarray, x0=None) -> np.ndarray:
        b = self.rhs(exposed_values)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros((self.m, self.nlm))
        n = self.m * self.nlm
        op = LinearOperator((n, n), matvec=self.matvec)
        x, _ = gmres(op, b, x0=None if x0 is None else x0.ravel(),
                     rtol=INNER_RTOL, atol=0.0,
                     restart=GMRES_RESTART, maxiter=GMRES_MAXITER)
        res = np.linalg.norm(self.matvec(x) - b) / bnorm
        if res > INNER_RTOL:
            # damped fixed point on x = Project(Coupling(x)) + b
            for _ in range(FALLBACK_MAXITER):
                x = x - 0.5 * (self.matvec(x) - b)
                res = np.linalg.norm(self.matvec(x) - b) / bnorm
                if res <= INNER_RTOL:
                    break
            else:
                raise InnerSolveError(
                    f"coupled {self.kind} solve stalled at relative residual {res:.3e}",
                    residual=float(res),
                )
        return x.reshape(self.m, self.nlm)


def _system(surface: SurfaceGrid, lmax: int, kind: str,
            kappa: float | None) -> _CoupledSystem:
    key = ("system", lmax, kind, kappa)
    sys_ = surface._cache.get(key)
    if sys_ is None:
        sys_ = _CoupledSystem(surface, lmax, kind, kappa)
        surface._cache[key] = sys_
    return sys_


def solve_from_values(surface: SurfaceGrid, exposed_values, lmax: int,
                      kind: str, kappa: float | None = None,
                      x0=None) -> BallExpansion:
    """Solve the coupled problem from Dirichlet values at exposed points."""
    values = np.asarray(exposed_values, dtype=float)
    if values.shape != (surface.n_exposed,):
        raise ValueError(
            f"expected {surface.n_exposed} exposed-point values, got shape {values.shape}"
        )
    sys_ = _system(surface, lmax, kind, kappa)
    coef = sys_.solve(values, x0=x0)
    return BallExpansion(coef=coef, kind=kind, centers=surface.centers,
                         radii=surface.radii, lmax=lmax, kappa=kappa)


def solve_laplace_cavity(surface: SurfaceGrid, dirichlet: BoundaryDatum) -> BallExpansion:
    """Harmonic extension into the cavity with the given interface datum."""
    return solve_from_values(surface, dirichlet.values_exposed(surface),
                             dirichlet.lmax, "laplace")


def solve_hsp_cavity(surface: SurfaceGrid, dirichlet: BoundaryDatum,
                     kappa: float) -> BallExpansion:
    """Screened-Poisson extension into the cavity ((-Lap + kappa^2)u = 0)."""
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return solve_from_values(surface, dirichlet.values_exposed(surface),
                             dirichlet.lmax, "hsp", kappa)


def _flux_factors(expansion: BallExpansion) -> np.ndarray:
    """Radial-derivative eigenfactors per (ball, flat index)."""
    deg = _degree_of_flat(expansion.lmax)
    m = expansion.coef.shape[0]
    fac = np.empty((m, n_harmonics(expansion.lmax)))
    for j in range(m):
        radius = expansion.radii[j]
        if expansion.kind == "laplace":
            per_l = np.arange(expansion.lmax + 1) / radius
        else:
            per_l = np.array(
                [expansion.kappa * log_deriv_i(l, expansion.kappa * radius)
                 for l in range(expansion.lmax + 1)]
            )
        fac[j] = per_l[deg]
    return fac


def neumann_trace(expansion: BallExpansion, surface: SurfaceGrid) -> np.ndarray:
    """Outward normal derivative at exposed points (flat, canonical order).

    The normal is the owner sphere's radial direction, exact on the exposed
    part of a van der Waals surface.
    """
    scaled = expansion.coef * _flux_factors(expansion)
    vals = scaled @ surface.ylm(expansion.lmax).T
    return vals[surface.exposed_index]


def values_on_grid(expansion: BallExpansion, surface: SurfaceGrid) -> np.ndarray:
    """Trace of each ball's own expansion on its full sphere, shape (M, N)."""
    return expansion.coef @ surface.ylm(expansion.lmax).T


def buried_fill_values(expansion: BallExpansion, surface: SurfaceGrid) -> np.ndarray:
    """(M, N) array with the containing ball's value at buried points, else 0."""
    sys_ = _system(surface, expansion.lmax, expansion.kind, expansion.kappa)
    return sys_._coupling(expansion.coef)


def evaluate_at(expansion: BallExpansion, point, owner: int) -> float:
    """Evaluate the owner ball's local expansion at an interior point.

    The caller selects the owner (the ball whose expansion represents the
    solution near the point); points outside the owner ball are rejected.
    """
    point = np.asarray(point, dtype=float).reshape(3)
    radius = float(expansion.radii[owner])
    vec = point - expansion.centers[owner]
    r = float(np.linalg.norm(vec))
    if r > radius * (1.0 + 1e-12):
        raise ValueError(
            f"point at distance {r} lies outside ball {owner} of radius {radius}"
        )
    deg = _degree_of_flat(expansion.lmax)
    rad = _radial_ratio(expansion.kind, np.array([min(r, radius)]), radius,
                        expansion.lmax, expansion.kappa)[0]
    if r <= _TINY_R:
        y_row = np.zeros(n_harmonics(expansion.lmax))
        y_row[0] = 1.0 / np.sqrt(FOUR_PI)
    else:
        y_row = ylm_table(expansion.lmax, vec / r)[0]
    return float(np.dot(expansion.coef[owner], rad[deg] * y_row))
