"""Molecular geometry: PQR input and the union-of-balls cavity surface.

The cavity is the union of atomic van der Waals balls.  Each ball carries
one Lebedev grid; a grid point is *exposed* (lies on the cavity boundary)
iff it is strictly outside every other ball, with a small tolerance delta
making tangency deterministic.  Exposure is binary; no switching-function
regularization is applied, so quadrature on partially buried spheres is
low-order accurate (tight-tolerance checks should use single-ball cases).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lebedev import LebedevGrid, lebedev_grid
from .harmonics import ylm_table

__all__ = [
    "Atom",
    "PqrFormatError",
    "SurfaceGrid",
    "parse_pqr",
    "serialize_pqr",
    "build_surface",
    "neighbor_pairs",
]

DEFAULT_DELTA = 1e-10


class PqrFormatError(ValueError):
    """Malformed PQR content."""


@dataclass(frozen=True, eq=False)
class Atom:
    """Ball of the cavity decomposition: center (Angstrom), vdW radius, charge (e)."""

    center: np.ndarray
    radius: float
    charge: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(3)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "charge", float(self.charge))
        if not np.all(np.isfinite(center)):
            raise ValueError(f"atom center must be finite, got {center}")
        if not self.radius > 0:
            raise ValueError(f"atom radius must be > 0, got {self.radius}")


def parse_pqr(text: str) -> list[Atom]:
    """Parse ATOM/HETATM records, reading (x, y, z, charge, radius) as the
    last five numeric columns of each record.  Other records are ignored.
    """
    atoms: list[Atom] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0] not in ("ATOM", "HETATM"):
            continue
        numeric = []
        for tok in fields[1:]:
            try:
                numeric.append(float(tok))
            except ValueError:
                continue
        if len(numeric) < 5:
            raise PqrFormatError(
                f"line {lineno}: expected at least 5 numeric fields "
                f"(x y z charge radius), found {len(numeric)}"
            )
        x, y, z, charge, radius = numeric[-5:]
        if not radius > 0:
            raise PqrFormatError(f"line {lineno}: radius must be > 0, got {radius}")
        try:
            atoms.append(Atom(center=(x, y, z), radius=radius, charge=charge))
        except ValueError as exc:
            raise PqrFormatError(f"line {lineno}: {exc}") from exc
    if not atoms:
        raise PqrFormatError("no atoms: input has no ATOM/HETATM records")
    return atoms


def serialize_pqr(atoms) -> str:
    """Emit ATOM records at full precision; parse_pqr round-trips the result."""
    lines = []
    for i, a in enumerate(atoms, start=1):
        x, y, z = (float(v) for v in a.center)
        lines.append(f"ATOM {i} X UNK {i} {x!r} {y!r} {z!r} {a.charge!r} {a.radius!r}")
    return "\n".join(lines) + "\n"


def neighbor_pairs(atoms) -> list[tuple[int, int]]:
    """Index pairs (i, j), i < j, of overlapping balls: |c_i - c_j| < R_i + R_j."""
    pairs = []
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            gap = np.linalg.norm(atoms[i].center - atoms[j].center)
            if gap < atoms[i].radius + atoms[j].radius:
                pairs.append((i, j))
    return pairs


@dataclass(eq=False)
class SurfaceGrid:
    """Discrete cavity boundary: one Lebedev grid per atomic sphere.

    ``positions[j, n] = center_j + R_j * directions[n]``; ``exposed[j, n]``
    flags points on the cavity boundary; ``container[j, n]`` is the smallest
    index of a ball strictly containing a buried point (-1 if exposed).
    Instances are immutable after construction and safe to share.
    """

    atoms: tuple[Atom, ...]
    grid: LebedevGrid
    directions: np.ndarray
    positions: np.ndarray
    exposed: np.ndarray
    container: np.ndarray
    delta: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def radii(self) -> np.ndarray:
        return np.array([a.radius for a in self.atoms])

    @property
    def centers(self) -> np.ndarray:
        return np.array([a.center for a in self.atoms])

    @property
    def exposed_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major (ball, node) indices of exposed points; the canonical
        ordering of every flat exposed-point vector in this package."""
        idx = self._cache.get("exposed_index")
        if idx is None:
            idx = np.nonzero(self.exposed)
            self._cache["exposed_index"] = idx
        return idx

    @property
    def n_exposed(self) -> int:
        return int(self.exposed.sum())

    @property
    def exposed_positions(self) -> np.ndarray:
        return self.positions[self.exposed_index]

    def ylm(self, lmax: int) -> np.ndarray:
        """Harmonic table on the (possibly rotated) grid directions."""
        key = ("ylm", lmax)
        table = self._cache.get(key)
        if table is None:
            table = ylm_table(lmax, self.directions)
            table.setflags(write=False)
            self._cache[key] = table
        return table

    def exposed_area(self) -> float:
        """Quadrature estimate of the cavity boundary area."""
        per_ball = self.exposed @ self.grid.weights
        return float(4.0 * np.pi * np.sum(self.radii**2 * per_ball))


def build_surface(atoms, leb_order: int, delta: float = DEFAULT_DELTA,
                  rotation=None) -> SurfaceGrid:
    """Classify each sphere's Lebedev points as exposed or buried.

    A point of sphere j is buried iff some other ball i contains it
    strictly: |x - c_i| < R_i - delta.  ``rotation`` (3x3) rotates the grid
    directions; supplying the same rotation applied to the atoms preserves
    exposure flags exactly.
    """
    atoms = tuple(atoms)
    if not atoms:
        raise ValueError("cavity needs at least one atom")
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            if (np.linalg.norm(atoms[i].center - atoms[j].center) < 1e-12
                    and abs(atoms[i].radius - atoms[j].radius) < 1e-12):
                raise ValueError(
                    f"degenerate decomposition: atoms {i} and {j} are identical balls"
                )
    grid = lebedev_grid(leb_order)
    directions = grid.points
    if rotation is not None:
        rotation = np.asarray(rotation, dtype=float)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
        directions = directions @ rotation.T
    m, n = len(atoms), grid.order
    centers = np.array([a.center for a in atoms])
    radii = np.array([a.radius for a in atoms])
    positions = centers[:, None, :] + radii[:, None, None] * directions[None, :, :]

    exposed = np.ones((m, n), dtype=bool)
    container = np.full((m, n), -1, dtype=int)
    # smallest containing index wins: scan i downward so low i overwrites
    for i in range(m - 1, -1, -1):
        dist = np.linalg.norm(positions - centers[i], axis=2)
        inside = dist < radii[i] - delta
        inside[i, :] = False
        exposed[inside] = False
        container[inside] = i
    return SurfaceGrid(
        atoms=atoms,
        grid=grid,
        directions=directions,
        positions=positions,
        exposed=exposed,
        container=container,
        delta=float(delta),
    )
