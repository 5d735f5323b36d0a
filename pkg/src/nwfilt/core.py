"""Core data model: cost spaces, sampled map systems, and extended level indices.

A system is a finite sample set of a state space together with a one-step map.
Costs between samples generalize a metric: any function into [0, inf] with zero
diagonal, possibly asymmetric, possibly infinite.  Recurrence levels live on a
two-branch index line: a negative branch of robustness magnitudes and a
non-negative branch of recurrence budgets, with two distinct ordered zeros
(the negative zero lies strictly below the positive zero).

Two kinds of systems are supported:

* sampled systems: points are a uniform grid over a box, the map is a
  coordinate evaluator, and iterates are stored as raw coordinates (never
  snapped back to the grid, so the only spatial error source is the grid
  spacing itself);
* tabulated systems: points are an arbitrary finite set, the map is an index
  table, and iterates are exact.

All objects here are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_MAX_SAMPLES = 200_000


class ResourceLimitError(RuntimeError):
    """Raised when a requested construction exceeds the configured sample cap."""


class Branch(enum.Enum):
    NEG = "neg"
    POS = "pos"


@dataclass(frozen=True)
class ExtendedLevel:
    """A point of the split-origin index line.

    ``(NEG, a)`` encodes robustness magnitude ``a`` (larger magnitude = lower
    level), ``(POS, a)`` encodes recurrence budget ``a``.  The order is total:
    every NEG level lies below every POS level, ``(NEG, 0)`` and ``(POS, 0)``
    are distinct, and ``(POS, inf)`` is the maximum.
    """

    branch: Branch
    magnitude: float

    def __post_init__(self):
        m = float(self.magnitude)
        if np.isnan(m) or m < 0:
            raise ValueError(f"level magnitude must be in [0, inf], got {self.magnitude!r}")
        object.__setattr__(self, "magnitude", m)

    @property
    def sort_key(self) -> tuple[int, float]:
        if self.branch is Branch.NEG:
            return (0, -self.magnitude)
        return (1, self.magnitude)

    def __lt__(self, other: "ExtendedLevel") -> bool:
        return self.sort_key < other.sort_key

    def __le__(self, other: "ExtendedLevel") -> bool:
        return self.sort_key <= other.sort_key

    def __gt__(self, other: "ExtendedLevel") -> bool:
        return self.sort_key > other.sort_key

    def __ge__(self, other: "ExtendedLevel") -> bool:
        return self.sort_key >= other.sort_key

    def __repr__(self) -> str:
        sign = "-" if self.branch is Branch.NEG else "+"
        return f"ExtendedLevel({sign}{self.magnitude!r})"


def neg_level(magnitude: float) -> ExtendedLevel:
    return ExtendedLevel(Branch.NEG, magnitude)


def pos_level(magnitude: float) -> ExtendedLevel:
    return ExtendedLevel(Branch.POS, magnitude)


def compare_levels(a: ExtendedLevel, b: ExtendedLevel) -> int:
    """Total order on extended levels: -1, 0 or +1."""
    ka, kb = a.sort_key, b.sort_key
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


# ---------------------------------------------------------------------------
# Cost spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostSpace:
    """Finite point set with pairwise costs.

    Either ``coords`` is given and the cost is the Euclidean distance between
    coordinates, or ``matrix`` is an explicit (n, n) cost table.  When both are
    given the matrix wins for sample-to-sample costs and the coordinates are
    used only for geometric export.
    """

    coords: np.ndarray | None = None   # (n, d) float
    matrix: np.ndarray | None = None   # (n, n) float, zero diagonal
    is_metric: bool = False
    is_non_degenerate: bool = True

    def __post_init__(self):
        if self.coords is None and self.matrix is None:
            raise ValueError("CostSpace needs coords or an explicit cost matrix")
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            object.__setattr__(self, "coords", np.ascontiguousarray(c))
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("cost matrix must be square")
            if np.any(np.isnan(m)) or np.any(m < 0):
                raise ValueError("costs must be non-negative (inf allowed)")
            if np.any(np.diag(m) != 0.0):
                raise ValueError("cost of a point to itself must be 0")
            object.__setattr__(self, "matrix", np.ascontiguousarray(m))
            if self.coords is not None and self.coords.shape[0] != m.shape[0]:
                raise ValueError("coords and cost matrix disagree on the point count")

    @property
    def n(self) -> int:
        if self.matrix is not None:
            return self.matrix.shape[0]
        return self.coords.shape[0]

    @property
    def dim(self) -> int | None:
        return None if self.coords is None else self.coords.shape[1]

    @property
    def uses_euclidean(self) -> bool:
        return self.matrix is None

    def pairwise(self) -> np.ndarray:
        """Full (n, n) cost table between samples."""
        if self.matrix is not None:
            return self.matrix
        return points_to_samples_cost(self.coords, self)

    def cost(self, i: int, j: int) -> float:
        if self.matrix is not None:
            return float(self.matrix[i, j])
        return float(_euclidean(self.coords[i], self.coords[j]))


def _euclidean(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    if d.shape[-1] == 1:
        return abs(float(d[0]))
    return float(np.sqrt(np.sum(d * d)))


def points_to_samples_cost(points: np.ndarray, space: CostSpace) -> np.ndarray:
    """Euclidean cost from raw coordinate rows to every sample, shape (len(points), n).

    Only valid for coordinate-backed spaces.  The same arithmetic (absolute
    difference in 1-D, sqrt of squared sums otherwise) is used everywhere so
    that independently computed levels agree bit for bit.
    """
    if space.coords is None:
        raise ValueError("space has no coordinates")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if space.coords.shape[1] == 1:
        return np.abs(pts[:, 0][:, None] - space.coords[:, 0][None, :])
    diff = pts[:, None, :] - space.coords[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


@dataclass(frozen=True)
class CostValidationReport:
    non_degenerate: bool
    symmetric: bool
    triangle: bool
    degenerate_witness: tuple[int, int] | None = None
    asymmetry_witness: tuple[int, int] | None = None
    triangle_witness: tuple[int, int, int] | None = None

    @property
    def all_metric(self) -> bool:
        return self.non_degenerate and self.symmetric and self.triangle


def validate_cost_space(space: CostSpace) -> CostValidationReport:
    """Check non-degeneracy, symmetry and the triangle inequality by full scan.

    Coordinate-backed (Euclidean) spaces satisfy all three by construction and
    are reported as such without scanning.
    """
    if space.uses_euclidean:
        return CostValidationReport(True, True, True)
    c = space.matrix
    n = c.shape[0]
    report = {"non_degenerate": True, "symmetric": True, "triangle": True,
              "degenerate_witness": None, "asymmetry_witness": None, "triangle_witness": None}
    off = c + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    zeros = np.argwhere(off == 0.0)
    if len(zeros):
        report["non_degenerate"] = False
        report["degenerate_witness"] = (int(zeros[0, 0]), int(zeros[0, 1]))
    asym = np.argwhere(c != c.T)
    if len(asym):
        report["symmetric"] = False
        report["asymmetry_witness"] = (int(asym[0, 0]), int(asym[0, 1]))
    # c[i,k] <= c[i,j] + c[j,k] for all triples; scan j as the middle point
    for j in range(n):
        with np.errstate(invalid="ignore"):
            bound = c[:, j][:, None] + c[j, :][None, :]
        bad = np.argwhere(c > bound)
        if len(bad):
            i, k = int(bad[0, 0]), int(bad[0, 1])
            report["triangle"] = False
            report["triangle_witness"] = (i, j, k)
            break
    return CostValidationReport(**report)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def grid_axis(lo: float, hi: float, h: float) -> np.ndarray:
    """1-D grid including both endpoints, step h, ascending.

    When lo and hi sit on integer multiples of h the points are generated as
    ``k * h`` with integer k, so 0 is produced exactly when the box straddles
    it and mirrored points are exact negations.
    """
    if h <= 0:
        raise ValueError("spacing must be positive")
    if hi < lo:
        raise ValueError("degenerate box interval")
    klo, khi = lo / h, hi / h
    if abs(klo - round(klo)) < 1e-9 and abs(khi - round(khi)) < 1e-9:
        return np.arange(round(klo), round(khi) + 1, dtype=float) * h
    count = int(np.floor((hi - lo) / h + 1e-9)) + 1
    return lo + np.arange(count, dtype=float) * h


def grid_points(box: Sequence[Sequence[float]], h: float,
                max_samples: int = DEFAULT_MAX_SAMPLES) -> np.ndarray:
    """Uniform grid over a box, ascending lexicographic order, shape (n, d)."""
    box = np.asarray(box, dtype=float)
    if box.ndim == 1:
        box = box[None, :]
    axes = [grid_axis(lo, hi, h) for lo, hi in box]
    total = 1
    for ax in axes:
        total *= len(ax)
    if total > max_samples:
        span = max(hi - lo for lo, hi in box)
        needed = span / max(max_samples ** (1.0 / len(axes)) - 1, 1)
        raise ResourceLimitError(
            f"grid would have {total} samples, cap is {max_samples}; "
            f"increase spacing to roughly {needed:.3g} or raise the cap")
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# ---------------------------------------------------------------------------
# Map systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MapSystem:
    """A finite sample set with a one-step map and its stored orbit segments.

    For sampled systems ``orbit_coords[z, k]`` holds the raw coordinates of the
    (k+1)-st iterate of sample z; for tabulated systems ``orbit_table[z, k]``
    holds its sample index.  Segments always have length ``horizon`` (fixed
    points simply repeat).
    """

    space: CostSpace
    horizon: int
    step_fn: Callable[[np.ndarray], np.ndarray] | None = None
    step_table: np.ndarray | None = None         # (n,) int
    orbit_coords: np.ndarray | None = None       # (n, horizon, d) float
    orbit_table: np.ndarray | None = None        # (n, horizon) int
    spacing: float | None = None
    box: np.ndarray | None = None
    name: str = "system"
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def is_tabulated(self) -> bool:
        return self.orbit_table is not None

    def orbit_points(self, z: int) -> np.ndarray:
        """Raw coordinates of the stored orbit segment of sample z, shape (horizon, d)."""
        if self.is_tabulated:
            if self.space.coords is None:
                raise ValueError("tabulated system without coordinates")
            return self.space.coords[self.orbit_table[z]]
        return self.orbit_coords[z]

    def index_of(self, coord) -> int:
        """Index of the sample nearest to the given coordinates."""
        costs = points_to_samples_cost(np.atleast_2d(np.asarray(coord, dtype=float)),
                                       _coord_space(self.space))
        return int(np.argmin(costs[0]))


def _coord_space(space: CostSpace) -> CostSpace:
    if space.coords is None:
        raise ValueError("system has no coordinate embedding")
    return CostSpace(coords=space.coords) if space.matrix is not None else space


def build_sampled_system(step_fn: Callable[[np.ndarray], np.ndarray],
                         box: Sequence[Sequence[float]], spacing: float,
                         horizon: int, name: str = "sampled",
                         max_samples: int = DEFAULT_MAX_SAMPLES) -> MapSystem:
    """Grid-sample a coordinate map and populate raw orbit segments.

    ``step_fn`` maps an (n, d) coordinate array to the next (n, d) array.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    pts = grid_points(box, spacing, max_samples=max_samples)
    n, d = pts.shape
    orbits = np.empty((n, horizon, d), dtype=float)
    cur = pts
    with np.errstate(over="ignore"):
        for k in range(horizon):
            cur = np.asarray(step_fn(cur), dtype=float).reshape(n, d)
            orbits[:, k, :] = cur
    space = CostSpace(coords=pts, is_metric=True, is_non_degenerate=True)
    return MapSystem(space=space, horizon=horizon, step_fn=step_fn,
                     orbit_coords=orbits, spacing=spacing,
                     box=np.asarray(box, dtype=float), name=name)


def build_tabulated_system(step_table: Sequence[int], horizon: int | None = None,
                           coords: np.ndarray | None = None,
                           cost_matrix: np.ndarray | None = None,
                           name: str = "table", **space_flags) -> MapSystem:
    """Tabulated system from an index map; orbit entries are exact indices."""
    table = np.asarray(step_table, dtype=np.int64)
    n = len(table)
    if np.any(table < 0) or np.any(table >= n):
        raise ValueError("map table entries must be valid sample indices")
    if horizon is None:
        horizon = max(2 * n, 1)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    space = CostSpace(coords=coords, matrix=cost_matrix, **space_flags)
    if space.n != n:
        raise ValueError("map table length does not match the point count")
    orbit = np.empty((n, horizon), dtype=np.int64)
    cur = table
    for k in range(horizon):
        orbit[:, k] = cur
        cur = table[cur]
    return MapSystem(space=space, horizon=horizon, step_table=table,
                     orbit_table=orbit, name=name)
