"""Outer machinery of the interfacial iteration.

One step of the stepped interface update, starting from the current
interface datum g at exposed points:

  1. solve the Laplace problem with trace g - psi0   (reaction field psi_r)
  2. solve the screened problem with trace g         (extended field psi_e)
  3. sigma = dn(psi_e) - (eps1/eps2) (dn(psi0) + dn(psi_r)) at exposed points
  4. g <- (1 - alpha) g + alpha S_kappa[sigma]
  5. energy E = 1/2 sum_i q_i psi_r(x_i); stop when the relative energy
     change drops below tol.

The screened single-layer operator S_kappa is applied sphere by sphere
through one-center harmonic expansions (full-sphere eigenvalues
kappa R^2 i_l k_l on a sphere's own targets, the matching exterior
representation elsewhere); an O(buried-fraction) approximation on
partially buried spheres, exact for single-ball cavities.  A direct
quadrature variant of the operator is kept for well-separated geometries
and off-surface targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .ball import PhysicalParams, practical_alpha, single_layer_eigs
from .bessel import bessel_i_all, bessel_k_table
from .cavity import Atom, SurfaceGrid, build_surface
from .harmonics import n_harmonics, ylm_table
from .interior import (
    BallExpansion,
    BoundaryDatum,
    FOUR_PI,
    _degree_of_flat,
    buried_fill_values,
    evaluate_at,
    neumann_trace,
    solve_from_values,
)
from .lebedev import PRECISION

__all__ = [
    "SolverConfig",
    "IterationReport",
    "SweepRow",
    "SweepResult",
    "DivergedError",
    "KJMOL_PER_E2_ANGSTROM",
    "psi0_eval",
    "psi0_gradient",
    "single_layer_matrix",
    "apply_single_layer",
    "richardson_run",
    "solvation_energy",
    "alpha_sweep",
]

# Coulomb constant e^2/(4 pi eps0) expressed in kJ/mol per (e^2/Angstrom)
KJMOL_PER_E2_ANGSTROM = 1389.35457644382

_DIVERGENCE_CAP = 1e12
_CHARGE_CLEARANCE = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Configuration of one interfacial iteration run."""

    params: PhysicalParams = field(default_factory=PhysicalParams)
    lmax: int = 7
    leb_order: int = 86
    alpha: float = 1.0
    tol: float = 1e-4
    kmax: int = 60
    g0: str = "psi0"  # 'psi0' | 'zero'

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.kmax < 1:
            raise ValueError(f"kmax must be >= 1, got {self.kmax}")
        if self.g0 not in ("psi0", "zero"):
            raise ValueError(f"g0 must be 'psi0' or 'zero', got {self.g0!r}")
        if self.leb_order not in PRECISION:
            raise ValueError(
                f"unsupported Lebedev order {self.leb_order}; "
                f"supported: {sorted(PRECISION)}"
            )
        if PRECISION[self.leb_order] < 2 * self.lmax:
            raise ValueError(
                f"Lebedev precision {PRECISION[self.leb_order]} < 2*lmax = {2 * self.lmax}"
            )


@dataclass
class IterationReport:
    """Per-iteration energies and stopping diagnostics of one run."""

    energies_kjmol: np.ndarray
    errors: np.ndarray  # errors[0] is nan: Err_1 is undefined
    converged: bool
    n_ite: int
    final_datum: BoundaryDatum
    alpha: float
    diverged: bool = False
    datum_history: list | None = None

    @property
    def energy_kjmol(self) -> float:
        return float(self.energies_kjmol[-1])


class DivergedError(RuntimeError):
    """Energy grew past the divergence cap or became non-finite.

    Carries the partial ``report``.
    """

    def __init__(self, message: str, report: IterationReport):
        super().__init__(message)
        self.report = report


def _charged(atoms) -> list[Atom]:
    return [a for a in atoms if a.charge != 0.0]


def psi0_eval(atoms, points, eps1: float) -> np.ndarray:
    """Vacuum potential sum_i q_i/(eps1 |x - x_i|) at each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(len(points))
    for a in _charged(atoms):
        d = np.linalg.norm(points - a.center, axis=1)
        if np.any(d < _CHARGE_CLEARANCE):
            raise ValueError(
                f"evaluation point within {_CHARGE_CLEARANCE} A of a charge at {a.center}"
            )
        out += a.charge / (eps1 * d)
    return out


def psi0_gradient(atoms, points, eps1: float) -> np.ndarray:
    """Analytic gradient of the vacuum potential, shape (n, 3)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros_like(points)
    for a in _charged(atoms):
        diff = points - a.center
        d = np.linalg.norm(diff, axis=1)
        if np.any(d < _CHARGE_CLEARANCE):
            raise ValueError(
                f"evaluation point within {_CHARGE_CLEARANCE} A of a charge at {a.center}"
            )
        out -= a.charge / eps1 * diff / d[:, None] ** 3
    return out


def single_layer_matrix(surface: SurfaceGrid, kappa: float, lmax: int,
                        method: str = "expansion") -> np.ndarray:
    """Dense discrete S_kappa mapping exposed-point densities to exposed-point
    potentials.

    ``method='expansion'`` (production scheme): each sphere's density is
    projected onto its harmonics and its layer potential is evaluated through
    the one-center representation kappa R^2 i_l(kappa R) k_l(kappa r)
    Y_l^m(rhat), which is exact for band-limited densities at every target on
    or outside the sphere (exposed points of other spheres always lie
    outside).  This keeps the discrete spectrum inside the theoretical
    interval; on a sphere's own targets it reduces to the full-sphere
    spectral rule.

    ``method='quadrature'``: cross-sphere interactions by the direct Lebedev
    sum over w_n R_j^2 exp(-kappa d)/d, self-sphere spectrally.  Accurate only
    for well-separated spheres; near-touching quadrature nodes pollute the
    spectrum.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if method not in ("expansion", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    ej, en = surface.exposed_index
    pos = surface.exposed_positions
    radii = surface.radii
    centers = surface.centers
    deg = _degree_of_flat(lmax)
    ylm = surface.ylm(lmax)
    n = surface.n_exposed
    mat = np.zeros((n, n))

    if method == "quadrature":
        w = surface.weights[en] * radii[ej] ** 2
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        same = ej[:, None] == ej[None, :]
        dist_safe = np.where(same, 1.0, dist)
        mat = np.where(same, 0.0, np.exp(-kappa * dist_safe) / dist_safe) * w[None, :]

    for j in range(surface.n_atoms):
        cols = np.nonzero(ej == j)[0]
        if not len(cols):
            continue
        nodes = en[cols]
        proj = FOUR_PI * (surface.weights[nodes, None] * ylm[nodes]).T
        if method == "quadrature":
            eig = single_layer_eigs(lmax, radii[j], kappa)[deg]
            mat[np.ix_(cols, cols)] += (ylm[nodes] * eig) @ proj
            continue
        x = kappa * radii[j]
        i_scaled = bessel_i_all(lmax, x, scaled=True)  # e^-x i_l(x)
        vec = pos - centers[j]
        r = np.maximum(np.linalg.norm(vec, axis=1), radii[j])
        y_t = ylm_table(lmax, vec / r[:, None])
        k_scaled = bessel_k_table(lmax, kappa * r, scaled=True)  # e^kr k_l(kr)
        pref = (kappa * radii[j] ** 2) * i_scaled
        damp = np.exp(x - kappa * r)
        rows = y_t * pref[deg][None, :] * k_scaled[:, deg] * damp[:, None]
        mat[:, cols] += rows @ proj
    return mat


def apply_single_layer(surface: SurfaceGrid, sigma, kappa: float, lmax: int,
                       targets=None) -> np.ndarray:
    """Apply the screened single-layer operator to an exposed-point density.

    With ``targets=None`` the result is evaluated at the exposed points
    (self-sphere contributions spectrally).  An explicit (p, 3) target array
    is evaluated by direct quadrature over all exposed sources; targets must
    stay clear of the source points.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (surface.n_exposed,):
        raise ValueError(
            f"expected {surface.n_exposed} density values, got shape {sigma.shape}"
        )
    if targets is None:
        return single_layer_matrix(surface, kappa, lmax) @ sigma
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    ej, en = surface.exposed_index
    pos = surface.exposed_positions
    w = surface.weights[en] * surface.radii[ej] ** 2
    dist = np.linalg.norm(targets[:, None, :] - pos[None, :, :], axis=2)
    if np.any(dist < 1e-12):
        raise ValueError("target coincides with a quadrature point")
    return (np.exp(-kappa * dist) / dist * w[None, :]) @ sigma


def solvation_energy(expansion: BallExpansion, atoms) -> float:
    """Electrostatic solvation energy 1/2 sum_i q_i psi_r(x_i) in e^2/Angstrom.

    Multiply by KJMOL_PER_E2_ANGSTROM for kJ/mol.
    """
    total = 0.0
    for i, a in enumerate(atoms):
        if a.charge != 0.0:
            total += a.charge * evaluate_at(expansion, a.center, i)
    return 0.5 * total


def _relative_error(current: float, previous: float) -> float:
    diff = abs(current - previous)
    if diff == 0.0:
        return 0.0
    if previous == 0.0:
        return math.inf
    return diff / abs(previous)


def richardson_run(atoms, config: SolverConfig, surface: SurfaceGrid | None = None,
                   g0_values=None, keep_history: bool = False) -> IterationReport:
    """Run the stepped interfacial iteration to the energy stopping rule.

    ``g0_values`` overrides the initial datum with explicit exposed-point
    values; ``keep_history`` records the projected datum coefficients after
    every update (used by oracle-equivalence checks).  At least two
    iterations run before the stopping test since the relative energy error
    needs two energies.
    """
    atoms = tuple(atoms)
    params = config.params
    if surface is None:
        surface = build_surface(atoms, config.leb_order)
    lmax = config.lmax
    ej, en = surface.exposed_index
    pos = surface.exposed_positions

    psi0 = psi0_eval(atoms, pos, params.eps1)
    dn_psi0 = np.einsum(
        "pi,pi->p", psi0_gradient(atoms, pos, params.eps1), surface.directions[en]
    )
    smat = single_layer_matrix(surface, params.kappa, lmax)

    if g0_values is not None:
        g = np.array(g0_values, dtype=float)
        if g.shape != (surface.n_exposed,):
            raise ValueError(
                f"g0_values must have shape ({surface.n_exposed},), got {g.shape}"
            )
    elif config.g0 == "psi0":
        g = psi0.copy()
    else:
        g = np.zeros(surface.n_exposed)

    ratio = params.eps1 / params.eps2
    alpha = config.alpha
    energies: list[float] = []
    errors: list[float] = [math.nan]
    history = [] if keep_history else None
    lap = hsp = None
    converged = False
    k = 0

    def _report(diverged=False):
        fill = buried_fill_values(hsp, surface) if hsp is not None else None
        datum = BoundaryDatum.from_exposed_values(surface, g, lmax, fill=fill)
        return IterationReport(
            energies_kjmol=np.array(energies),
            errors=np.array(errors),
            converged=converged,
            n_ite=k,
            final_datum=datum,
            alpha=alpha,
            diverged=diverged,
            datum_history=history,
        )

    if keep_history:
        history.append(BoundaryDatum.from_exposed_values(surface, g, lmax).coef)

    for k in range(1, config.kmax + 1):
        lap = solve_from_values(surface, g - psi0, lmax, "laplace",
                                x0=None if lap is None else lap.coef)
        hsp = solve_from_values(surface, g, lmax, "hsp", params.kappa,
                                x0=None if hsp is None else hsp.coef)
        sigma = neumann_trace(hsp, surface) - ratio * (dn_psi0 + neumann_trace(lap, surface))
        g = (1.0 - alpha) * g + alpha * (smat @ sigma)

        energy = solvation_energy(lap, atoms) * KJMOL_PER_E2_ANGSTROM
        energies.append(energy)
        if keep_history:
            history.append(BoundaryDatum.from_exposed_values(surface, g, lmax).coef)
        if not math.isfinite(energy) or abs(energy) > _DIVERGENCE_CAP:
            raise DivergedError(
                f"diverged: |E_{k}| = {energy!r} (alpha = {alpha})", _report(diverged=True)
            )
        if k >= 2:
            err = _relative_error(energy, energies[-2])
            errors.append(err)
            if err < config.tol:
                converged = True
                break
    return _report()


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    n_ite: int
    converged: bool
    energy_kjmol: float
    err_final: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    alpha_empirical: float | None
    alpha_practical: float

    def row(self, alpha: float) -> SweepRow:
        for r in self.rows:
            if abs(r.alpha - alpha) < 1e-12:
                return r
        raise KeyError(f"no sweep row at alpha = {alpha}")


def alpha_sweep(atoms, config: SolverConfig, alphas, threads: int = 1) -> SweepResult:
    """Run richardson_run per stepping parameter with identical initial data.

    Failures (divergence) are recorded as non-converged rows.  The empirical
    optimum is the converged row with the fewest iterations, ties resolved
    toward the smaller alpha.
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alpha list is empty")
    atoms = tuple(atoms)

    def _one(alpha: float) -> SweepRow:
        cfg = replace(config, alpha=float(alpha))
        surface = build_surface(atoms, cfg.leb_order)
        try:
            rep = richardson_run(atoms, cfg, surface=surface)
        except DivergedError as exc:
            rep = exc.report
        err_final = float(rep.errors[-1]) if len(rep.errors) else math.nan
        energy = rep.energy_kjmol if len(rep.energies_kjmol) else math.nan
        return SweepRow(
            alpha=float(alpha),
            n_ite=rep.n_ite,
            converged=rep.converged,
            energy_kjmol=energy,
            err_final=err_final,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_one, alphas))
    else:
        rows = [_one(a) for a in alphas]

    best = None
    for r in rows:
        if r.converged and (best is None or r.n_ite < best.n_ite
                            or (r.n_ite == best.n_ite and r.alpha < best.alpha)):
            best = r
    return SweepResult(
        rows=rows,
        alpha_empirical=None if best is None else best.alpha,
        alpha_practical=practical_alpha(config.params),
    )
