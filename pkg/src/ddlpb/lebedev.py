"""Lebedev quadrature grids on the unit sphere.

Node/weight sets invariant under the octahedral group, exact for spherical
polynomials up to the grid's algebraic precision degree.  Weights are
normalized to sum to 1 with the convention

    integral_{S^2} f  =  4 pi sum_n w_n f(s_n).

The tables below are the classical Lebedev-Laikov generator parameters for
the supported point counts; each grid is expanded from a handful of
symmetry orbits.  Note that the canonical 74-point rule carries one
negative orbit weight (a known property of that rule); all other supported
rules are positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .harmonics import ylm_table

__all__ = ["LebedevGrid", "lebedev_grid", "ylm_on_grid", "SUPPORTED_ORDERS", "PRECISION"]

# order -> algebraic precision degree
PRECISION = {6: 3, 14: 5, 26: 7, 38: 9, 50: 11, 74: 13, 86: 15, 110: 17}
SUPPORTED_ORDERS = tuple(sorted(PRECISION))

# Symmetry orbit codes:
#   1: (1,0,0)-type, 6 points          2: (a,a,0)-type with a=1/sqrt2, 12 points
#   3: (a,a,a)-type with a=1/sqrt3, 8  4: (a,a,b), b=sqrt(1-2a^2), 24 points
#   5: (a,b,0), b=sqrt(1-a^2), 24 points
# Each entry: (code, a, weight).  Lebedev-Laikov 16-digit parameters.
_GENERATORS = {
    6: [
        (1, None, 0.1666666666666667),
    ],
    14: [
        (1, None, 0.6666666666666667e-1),
        (3, None, 0.7500000000000000e-1),
    ],
    26: [
        (1, None, 0.4761904761904762e-1),
        (2, None, 0.3809523809523810e-1),
        (3, None, 0.3214285714285714e-1),
    ],
    38: [
        (1, None, 0.9523809523809524e-2),
        (3, None, 0.3214285714285714e-1),
        (5, 0.4597008433809831, 0.2857142857142857e-1),
    ],
    50: [
        (1, None, 0.1269841269841270e-1),
        (2, None, 0.2257495590828924e-1),
        (3, None, 0.2109375000000000e-1),
        (4, 0.3015113445777636, 0.2017333553791887e-1),
    ],
    74: [
        (1, None, 0.5130671797338464e-3),
        (2, None, 0.1660406956574204e-1),
        (3, None, -0.2958603896103896e-1),
        (4, 0.4803844614152614, 0.2657620708215946e-1),
        (5, 0.3207726489807764, 0.1652217099371571e-1),
    ],
    86: [
        (1, None, 0.1154401154401154e-1),
        (3, None, 0.1194390908585628e-1),
        (4, 0.3696028464541502, 0.1111055571060340e-1),
        (4, 0.6943540066026664, 0.1187650129453714e-1),
        (5, 0.3742430390903412, 0.1181230374690448e-1),
    ],
    110: [
        (1, None, 0.3828270494937162e-2),
        (3, None, 0.9793737512487512e-2),
        (4, 0.1851156353447362, 0.8211737283191111e-2),
        (4, 0.6904210483822922, 0.9942814891178103e-2),
        (4, 0.3956894730559419, 0.9595471336070963e-2),
        (5, 0.4783690288121502, 0.9694996361663028e-2),
    ],
}


def _orbit(code: int, a: float | None) -> np.ndarray:
    if code == 1:
        eye = np.eye(3)
        return np.vstack([eye, -eye])
    if code == 2:
        a = np.sqrt(0.5)
        pts = []
        for i, j in ((0, 1), (0, 2), (1, 2)):
            for si in (a, -a):
                for sj in (a, -a):
                    p = np.zeros(3)
                    p[i], p[j] = si, sj
                    pts.append(p)
        return np.array(pts)
    if code == 3:
        a = np.sqrt(1.0 / 3.0)
        signs = np.array([[sx, sy, sz] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)])
        return a * signs.astype(float)
    if code == 4:
        b = np.sqrt(1.0 - 2.0 * a * a)
        pts = []
        for perm in ((a, a, b), (a, b, a), (b, a, a)):
            for sx in (1, -1):
                for sy in (1, -1):
                    for sz in (1, -1):
                        pts.append((sx * perm[0], sy * perm[1], sz * perm[2]))
        return np.array(pts)
    if code == 5:
        b = np.sqrt(1.0 - a * a)
        pts = []
        for u, v in ((a, b), (b, a)):
            for i, j in ((0, 1), (0, 2), (1, 2)):
                for su in (u, -u):
                    for sv in (v, -v):
                        p = np.zeros(3)
                        p[i], p[j] = su, sv
                        pts.append(p.copy())
        return np.array(pts)
    raise ValueError(f"unknown orbit code {code}")


@dataclass(frozen=True)
class LebedevGrid:
    """Quadrature nodes and weights on the unit sphere.

    ``points`` are unit vectors, ``weights`` sum to 1 under the convention
    integral = 4 pi sum w_n f(s_n); ``precision`` is the largest polynomial
    degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    order: int
    precision: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)


_GRID_CACHE: dict[int, LebedevGrid] = {}
_YLM_CACHE: dict[tuple[int, int], np.ndarray] = {}


def lebedev_grid(order: int) -> LebedevGrid:
    """Return the Lebedev grid with the given point count.

    Raises ValueError for unsupported orders, listing the supported set.
    """
    if order not in _GENERATORS:
        raise ValueError(
            f"unsupported Lebedev order {order}; supported orders: {list(SUPPORTED_ORDERS)}"
        )
    grid = _GRID_CACHE.get(order)
    if grid is None:
        pts, wts = [], []
        for code, a, w in _GENERATORS[order]:
            block = _orbit(code, a)
            pts.append(block)
            wts.append(np.full(len(block), w))
        points = np.vstack(pts)
        weights = np.concatenate(wts)
        if len(points) != order:
            raise AssertionError(f"orbit expansion produced {len(points)} points for order {order}")
        grid = LebedevGrid(points=points, weights=weights, order=order, precision=PRECISION[order])
        _GRID_CACHE[order] = grid
    return grid


def ylm_on_grid(lmax: int, order: int) -> np.ndarray:
    """Cached table of Y_{l,m}(s_n) on a Lebedev grid, shape (order, (lmax+1)^2)."""
    key = (lmax, order)
    table = _YLM_CACHE.get(key)
    if table is None:
        table = ylm_table(lmax, lebedev_grid(order).points)
        table.setflags(write=False)
        _YLM_CACHE[key] = table
    return table
