"""Linearized Poisson-Boltzmann solvation on union-of-ball cavities.

An interior-exterior interfacial iteration with a tunable stepping
parameter, per-ball spherical-harmonic interior solvers, and an exact
analytic single-ball backend for its convergence theory.
"""

from .ball import (
    ModeSpectrum,
    PhysicalParams,
    born_ion_reaction,
    convergence_radius,
    dtn_hsp_exterior_eig,
    dtn_hsp_interior_eig,
    dtn_laplace_eig,
    mode_richardson,
    mode_spectrum,
    optimal_alpha,
    practical_alpha,
    single_layer_eig,
    single_layer_eigs,
    sobolev_ball_bound,
    sobolev_mode_ratio,
    spectral_bounds,
)
from .bessel import bessel_i, bessel_k, log_deriv_i, log_deriv_k
from .cavity import (
    Atom,
    PqrFormatError,
    SurfaceGrid,
    build_surface,
    neighbor_pairs,
    parse_pqr,
    serialize_pqr,
)
from .coupling import (
    DivergedError,
    IterationReport,
    KJMOL_PER_E2_ANGSTROM,
    SolverConfig,
    SweepResult,
    SweepRow,
    alpha_sweep,
    apply_single_layer,
    psi0_eval,
    psi0_gradient,
    richardson_run,
    single_layer_matrix,
    solvation_energy,
)
from .harmonics import HarmonicIndex, n_harmonics, real_sph_harm, ylm_table
from .interior import (
    BallExpansion,
    BoundaryDatum,
    InnerSolveError,
    evaluate_at,
    neumann_trace,
    solve_hsp_cavity,
    solve_laplace_cavity,
)
from .lebedev import LebedevGrid, lebedev_grid

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path to a bundled PQR fixture (born_ion, dimer, benzene12, offcenter_ion)."""
    from importlib.resources import files

    path = files("ddlpb") / "fixtures" / f"{name}.pqr"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return path
