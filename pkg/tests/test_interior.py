import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddlpb.bessel import log_deriv_i
from ddlpb.cavity import Atom, build_surface, parse_pqr
from ddlpb.harmonics import n_harmonics, ylm_table
from ddlpb.interior import (
    BoundaryDatum,
    buried_fill_values,
    evaluate_at,
    neumann_trace,
    solve_from_values,
    solve_hsp_cavity,
    solve_laplace_cavity,
    values_on_grid,
)
from ddlpb.lebedev import lebedev_grid, ylm_on_grid

LMAX = 7
NLM = n_harmonics(LMAX)


@pytest.fixture(scope="module")
def ball():
    return build_surface([Atom((0, 0, 0), 1.0, 1.0)], 86)


@pytest.fixture(scope="module")
def dimer():
    atoms = [Atom((-0.5, 0, 0), 1.0, 0.5), Atom((0.5, 0, 0), 1.0, 0.5)]
    return build_surface(atoms, 86)


def _unit_datum(flat, n_atoms=1, ball_index=0):
    coef = np.zeros((n_atoms, NLM))
    coef[ball_index, flat] = 1.0
    return BoundaryDatum(coef=coef, lmax=LMAX)


class TestSingleBall:
    @pytest.mark.parametrize("flat", [0, 2, 3, 12, 32, 45, 63])
    def test_laplace_mode_exact(self, ball, flat):
        sol = solve_laplace_cavity(ball, _unit_datum(flat))
        expect = np.zeros(NLM)
        expect[flat] = 1.0
        np.testing.assert_allclose(sol.coef[0], expect, atol=1e-10)

    @pytest.mark.parametrize("flat", [0, 7, 32])
    def test_hsp_mode_exact(self, ball, flat):
        sol = solve_hsp_cavity(ball, _unit_datum(flat), kappa=1.0)
        expect = np.zeros(NLM)
        expect[flat] = 1.0
        np.testing.assert_allclose(sol.coef[0], expect, atol=1e-10)

    def test_constant_datum(self, ball):
        value = 2.25
        coef = np.zeros((1, NLM))
        coef[0, 0] = value * np.sqrt(4 * np.pi)
        sol = solve_laplace_cavity(ball, BoundaryDatum(coef=coef, lmax=LMAX))
        assert sol.coef[0, 0] == pytest.approx(value * np.sqrt(4 * np.pi), rel=1e-12)
        assert evaluate_at(sol, (0, 0, 0), 0) == pytest.approx(value, rel=1e-12)

    def test_hsp_kappa_to_zero_is_laplace(self, ball, rng):
        coef = rng.normal(size=(1, NLM))
        datum = BoundaryDatum(coef=coef, lmax=LMAX)
        lap = solve_laplace_cavity(ball, datum)
        hsp = solve_hsp_cavity(ball, datum, kappa=1e-4)
        np.testing.assert_allclose(hsp.coef, lap.coef, atol=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, a, b):
        ball = build_surface([Atom((0, 0, 0), 1.0, 1.0)], 86)
        rng = np.random.default_rng(7)
        c1 = rng.normal(size=(1, NLM))
        c2 = rng.normal(size=(1, NLM))
        s1 = solve_laplace_cavity(ball, BoundaryDatum(coef=c1, lmax=LMAX)).coef
        s2 = solve_laplace_cavity(ball, BoundaryDatum(coef=c2, lmax=LMAX)).coef
        s12 = solve_laplace_cavity(
            ball, BoundaryDatum(coef=a * c1 + b * c2, lmax=LMAX)
        ).coef
        np.testing.assert_allclose(s12, a * s1 + b * s2, atol=1e-8 * (1 + abs(a) + abs(b)))

    def test_maximum_principle_sampled(self, ball, rng):
        coef = rng.normal(size=(1, NLM))
        datum = BoundaryDatum(coef=coef, lmax=LMAX)
        sol = solve_laplace_cavity(ball, datum)
        g = datum.values_exposed(ball)
        lo, hi = g.min() - 1e-6, g.max() + 1e-6
        pts = rng.normal(size=(100, 3))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * rng.uniform(0, 0.999, (100, 1))
        for p in pts:
            assert lo <= evaluate_at(sol, p, 0) <= hi

    def test_harmonic_extension_poisson_kernel_oracle(self, ball, rng):
        # smooth datum g(s) = exp(a . s); interior value from the Poisson
        # integral u(x) = (R^2-|x|^2)/(4 pi R) int g(y)/|x-y|^3 dS(y)
        a = np.array([0.3, -0.8, 0.5])
        fine = lebedev_grid(110)
        g_vals_fine = np.exp(fine.points @ a)
        g_vals = np.exp(ball.directions @ a)
        datum = BoundaryDatum.from_exposed_values(ball, g_vals, LMAX)
        sol = solve_laplace_cavity(ball, datum)
        for x in (np.array([0.3, 0.1, -0.2]), np.array([0.0, 0.45, 0.1])):
            dist3 = np.linalg.norm(fine.points - x, axis=1) ** 3
            kernel = (1.0 - x @ x) / (4 * np.pi) / dist3
            oracle = 4 * np.pi * np.sum(fine.weights * kernel * g_vals_fine)
            assert evaluate_at(sol, x, 0) == pytest.approx(oracle, abs=1e-6)


class TestNeumannTrace:
    def test_constant_has_zero_flux(self, ball):
        sol = solve_laplace_cavity(ball, _unit_datum(0))
        np.testing.assert_allclose(neumann_trace(sol, ball), 0.0, atol=1e-14)

    def test_laplace_degree_one(self, ball):
        sol = solve_laplace_cavity(ball, _unit_datum(2))  # (1, 0), R = 1
        tbl = ylm_on_grid(LMAX, 86)
        np.testing.assert_allclose(neumann_trace(sol, ball), tbl[:, 2], atol=1e-12)

    def test_hsp_degree_zero(self, ball):
        sol = solve_hsp_cavity(ball, _unit_datum(0), kappa=1.0)
        tbl = ylm_on_grid(LMAX, 86)
        expect = log_deriv_i(0, 1.0) * tbl[:, 0]
        np.testing.assert_allclose(neumann_trace(sol, ball), expect, atol=1e-12)


class TestEvaluateAt:
    def test_center_reads_constant_term(self, ball):
        sol = solve_laplace_cavity(ball, _unit_datum(0))
        assert evaluate_at(sol, (0, 0, 0), 0) == pytest.approx(1 / np.sqrt(4 * np.pi))

    def test_degree_one_vanishes_at_center(self, ball):
        sol = solve_laplace_cavity(ball, _unit_datum(3))
        assert evaluate_at(sol, (0, 0, 0), 0) == pytest.approx(0.0, abs=1e-14)

    def test_outside_owner_rejected(self, ball):
        sol = solve_laplace_cavity(ball, _unit_datum(0))
        with pytest.raises(ValueError, match="outside"):
            evaluate_at(sol, (1.5, 0, 0), 0)


class TestDimer:
    def test_mirror_symmetry(self, dimer):
        # datum symmetric under x -> -x (ball swap); coefficients must map with
        # parity (-1)^m on cos-branch entries and -(-1)^m on sin-branch ones
        g_vals = np.exp(-np.linalg.norm(dimer.exposed_positions - [3.0, 0, 0], axis=1)) \
            + np.exp(-np.linalg.norm(dimer.exposed_positions + [3.0, 0, 0], axis=1))
        sol = solve_from_values(dimer, g_vals, LMAX, "laplace")
        for ell in range(LMAX + 1):
            for m in range(-ell, ell + 1):
                flat = ell * ell + ell + m
                parity = (-1.0) ** abs(m) * (1.0 if m >= 0 else -1.0)
                assert sol.coef[0, flat] == pytest.approx(
                    parity * sol.coef[1, flat], abs=1e-8
                )

    def test_direct_solve_oracle_lmax3(self):
        # dense elimination of the same collocation-projection system
        atoms = [Atom((-0.5, 0, 0), 1.0, 0.5), Atom((0.5, 0, 0), 1.0, 0.5)]
        surf = build_surface(atoms, 86)
        lmax, nlm = 3, n_harmonics(3)
        rng = np.random.default_rng(11)
        g_vals = np.cos(surf.exposed_positions @ np.array([0.4, 0.7, -0.2]))
        sol = solve_from_values(surf, g_vals, lmax, "hsp", 0.8)

        n = 2 * nlm
        ident = np.eye(n)
        from ddlpb.interior import _system

        sys_ = _system(surf, lmax, "hsp", 0.8)
        amat = np.column_stack([sys_.matvec(ident[:, i]) for i in range(n)])
        rhs = sys_.rhs(g_vals)
        direct = np.linalg.solve(amat, rhs).reshape(2, nlm)
        np.testing.assert_allclose(sol.coef, direct, atol=1e-8)
        # solution values at ball centers agree with the dense solve
        from ddlpb.interior import BallExpansion

        ref_exp = BallExpansion(coef=direct, kind="hsp", centers=surf.centers,
                                radii=surf.radii, lmax=lmax, kappa=0.8)
        for j, atom in enumerate(atoms):
            mine = evaluate_at(sol, atom.center, j)
            assert mine == pytest.approx(evaluate_at(ref_exp, atom.center, j), abs=1e-10)

    def test_buried_consistency_truncation_limited(self, dimer):
        # values of owner and container expansions agree at buried points up
        # to the harmonic truncation of the coupled trace; exact consistency
        # is unattainable with 64 coefficients against 86 collocation points
        g_vals = 1.0 / np.linalg.norm(dimer.exposed_positions - [3.0, 0.4, 0.2], axis=1)
        bj, bn = np.nonzero(~dimer.exposed)
        sol = solve_from_values(dimer, g_vals, LMAX, "laplace")
        gap7 = np.abs(values_on_grid(sol, dimer) - buried_fill_values(sol, dimer))[bj, bn].max()
        assert gap7 < 2e-3

        atoms = dimer.atoms
        surf8 = build_surface(atoms, 110)
        g8 = 1.0 / np.linalg.norm(surf8.exposed_positions - [3.0, 0.4, 0.2], axis=1)
        sol8 = solve_from_values(surf8, g8, 8, "laplace")
        b8 = np.nonzero(~surf8.exposed)
        gap8 = np.abs(values_on_grid(sol8, surf8) - buried_fill_values(sol8, surf8))[b8].max()
        assert gap8 < gap7  # truncation-limited: tightens with lmax

    def test_harmonic_oracle_at_centers(self, dimer):
        # datum = trace of the globally harmonic 1/|x - p|; the coupled solve
        # must reproduce it inside the cavity
        p = np.array([3.0, 0.4, 0.2])
        g_vals = 1.0 / np.linalg.norm(dimer.exposed_positions - p, axis=1)
        sol = solve_from_values(dimer, g_vals, LMAX, "laplace")
        for j, atom in enumerate(dimer.atoms):
            expect = 1.0 / np.linalg.norm(atom.center - p)
            assert evaluate_at(sol, atom.center, j) == pytest.approx(expect, abs=2e-6)


class TestConfigValidation:
    def test_precision_guard(self):
        surf = build_surface([Atom((0, 0, 0), 1.0, 0.0)], 26)  # precision 7
        with pytest.raises(ValueError, match="precision"):
            solve_from_values(surf, np.zeros(26), 7, "laplace")

    def test_value_count_guard(self, ball):
        with pytest.raises(ValueError, match="exposed-point values"):
            solve_from_values(ball, np.zeros(10), LMAX, "laplace")
