import numpy as np
import pytest

from ddlpb.lebedev import PRECISION, SUPPORTED_ORDERS, lebedev_grid, ylm_on_grid


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_grid_invariants(order):
    g = lebedev_grid(order)
    assert g.points.shape == (order, 3)
    assert g.weights.shape == (order,)
    np.testing.assert_allclose(np.linalg.norm(g.points, axis=1), 1.0, atol=1e-12)
    assert abs(g.weights.sum() - 1.0) < 1e-12


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_degree_two_moment(order):
    # 4 pi sum w (s.e_z)^2 = 4 pi / 3 exactly on every supported grid
    g = lebedev_grid(order)
    moment = 4 * np.pi * np.sum(g.weights * g.points[:, 2] ** 2)
    assert moment == pytest.approx(4 * np.pi / 3, rel=1e-14)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_orthonormality_to_precision(order):
    g = lebedev_grid(order)
    lmax = g.precision // 2
    tbl = ylm_on_grid(lmax, order)
    gram = 4 * np.pi * (tbl.T * g.weights) @ tbl
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < 1e-9


def test_order_86_self_product():
    g = lebedev_grid(86)
    tbl = ylm_on_grid(2, 86)
    flat = 2 * 2 + 2 + 1  # (l, m) = (2, 1)
    val = 4 * np.pi * np.sum(g.weights * tbl[:, flat] ** 2)
    assert abs(val - 1.0) < 1e-10


def test_order_50_degree_ten_product():
    g = lebedev_grid(50)  # precision 11 integrates Y_5^3 * Y_5^3
    tbl = ylm_on_grid(5, 50)
    flat = 5 * 5 + 5 + 3
    val = 4 * np.pi * np.sum(g.weights * tbl[:, flat] ** 2)
    assert abs(val - 1.0) < 1e-10


def test_weights_positive_except_74():
    # the canonical 74-point rule carries one negative orbit weight
    for order in SUPPORTED_ORDERS:
        g = lebedev_grid(order)
        if order == 74:
            assert g.weights.min() < 0
        else:
            assert g.weights.min() > 0


def test_unsupported_order_lists_supported():
    with pytest.raises(ValueError) as exc:
        lebedev_grid(100)
    for order in SUPPORTED_ORDERS:
        assert str(order) in str(exc.value)


def test_grids_immutable():
    g = lebedev_grid(26)
    with pytest.raises(ValueError):
        g.points[0, 0] = 2.0
    with pytest.raises(ValueError):
        g.weights[0] = 0.5


def test_precision_table():
    assert PRECISION[86] == 15
    assert PRECISION[110] == 17
