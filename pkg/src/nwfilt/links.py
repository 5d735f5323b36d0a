"""Minimal link levels between samples.

A link from x to y is an orbit segment entered near x and left near y: pick a
sample z and a step count n in [1, horizon], pay ``cost(x, z)`` to jump in and
``cost(f^n(z), y)`` to jump out.  The level of the pair (x, y) is the smallest
worst-case budget over all such segments,

    level(x, y) = min over (z, n) of max(cost(x, z), cost(f^n(z), y)),

so a single-perturbation steering from x to y within budget eps exists among
the samples exactly when level(x, y) <= eps.  On a finite sample set the
minimum is attained, hence closed thresholds describe both the plain and the
limit (eps+) relations; all downstream reductions rely on this collapse.

Matrix assembly is deterministic: ties are broken by smallest level, then
smallest step count, then smallest entry-sample index, never by scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .core import MapSystem, ResourceLimitError, points_to_samples_cost

MATRIX_SIZE_CAP = 6000


@dataclass(frozen=True)
class LinkWitness:
    """An achieving (z, n) pair for a link level, with both endpoint costs."""

    start_index: int
    steps: int
    start_cost: float
    end_cost: float

    @property
    def level(self) -> float:
        return max(self.start_cost, self.end_cost)


@dataclass(frozen=True)
class LevelMatrix:
    """Pairwise minimal link levels over a target subset of samples."""

    levels: np.ndarray           # (m, m) float
    targets: np.ndarray          # (m,) sample indices
    horizon: int
    spacing: float | None = None
    kind: str = "map"            # "map" or "flow"
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.targets)

    def is_complete(self, n: int) -> bool:
        return self.m == n and np.array_equal(self.targets, np.arange(n))

    def row_of(self, sample: int) -> int:
        pos = np.searchsorted(self.targets, sample)
        if pos >= self.m or self.targets[pos] != sample:
            raise KeyError(f"sample {sample} not covered by this matrix")
        return int(pos)

    def entry(self, x: int, y: int) -> float:
        return float(self.levels[self.row_of(x), self.row_of(y)])


# ---------------------------------------------------------------------------
# Cost kernels
# ---------------------------------------------------------------------------


def entry_cost_rows(system: MapSystem, rows: np.ndarray) -> np.ndarray:
    """Costs from the given samples to every sample, shape (len(rows), n)."""
    if system.space.matrix is not None:
        return system.space.matrix[rows]
    return points_to_samples_cost(system.space.coords[rows], system.space)


def _exit_candidates(system: MapSystem) -> np.ndarray:
    """Raw orbit values per sample: (n, horizon) indices or (n, horizon[, d]) coords."""
    if system.is_tabulated:
        return system.orbit_table
    orb = system.orbit_coords
    if orb.shape[2] == 1:
        return orb[:, :, 0]
    return orb


def exit_min_matrix(system: MapSystem, cols: np.ndarray, method: str = "auto") -> np.ndarray:
    """M[z, j] = min over n of cost(f^n(z), cols[j]) for every sample z.

    ``method`` selects the nearest-iterate kernel: "scan" evaluates every
    orbit entry directly, "indexed" keeps a sorted projection per orbit
    (1-D coordinate systems only).  Both produce identical floats, because
    they minimize over the same candidate values.
    """
    n = system.n
    if system.is_tabulated and system.space.matrix is not None:
        P = system.space.matrix
        out = np.empty((n, len(cols)))
        for z in range(n):
            out[z] = P[system.orbit_table[z]][:, cols].min(axis=0)
        return out
    coords = system.space.coords
    targets = coords[cols]
    cand = _exit_candidates(system)
    if system.is_tabulated:
        cand = coords[cand]  # (n, horizon, d)
        if coords.shape[1] == 1:
            cand = cand[:, :, 0]
    one_d = cand.ndim == 2
    if method == "auto":
        method = "indexed" if one_d else "scan"
    if method == "indexed" and not one_d:
        raise ValueError("indexed nearest-iterate queries need 1-D coordinates")
    out = np.empty((n, len(cols)))
    if method == "indexed":
        t = targets[:, 0]
        for z in range(n):
            s = np.sort(cand[z])
            pos = np.searchsorted(s, t)
            left = np.abs(t - s[np.clip(pos - 1, 0, len(s) - 1)])
            right = np.abs(s[np.clip(pos, 0, len(s) - 1)] - t)
            out[z] = np.minimum(left, right)
    elif method == "scan":
        for z in range(n):
            if one_d:
                d = np.abs(cand[z][:, None] - targets[None, :, 0])
            else:
                diff = cand[z][:, None, :] - targets[None, :, :]
                d = np.sqrt(np.sum(diff * diff, axis=2))
            out[z] = d.min(axis=0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out


def _pair_level_table(system: MapSystem, x: int, y: int) -> tuple[np.ndarray, np.ndarray]:
    """All candidate levels for the pair (x, y): (entry costs (n,), levels (n, horizon))."""
    entry = entry_cost_rows(system, np.array([x]))[0]
    if system.is_tabulated and system.space.matrix is not None:
        exits = system.space.matrix[system.orbit_table, y]
    else:
        coords = system.space.coords
        cand = _exit_candidates(system)
        if system.is_tabulated:
            cand = coords[cand]
            if coords.shape[1] == 1:
                cand = cand[:, :, 0]
        if cand.ndim == 2:
            exits = np.abs(cand - coords[y, 0])
        else:
            diff = cand - coords[y][None, None, :]
            exits = np.sqrt(np.sum(diff * diff, axis=2))
    return entry, np.maximum(entry[:, None], exits)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def link_level(system: MapSystem, x: int, y: int) -> tuple[float, LinkWitness]:
    """Minimal link level from sample x to sample y with an achieving witness.

    Ties are broken by smallest step count, then smallest entry index.
    """
    if system.n == 0:
        raise ValueError("empty sample set")
    entry, lev = _pair_level_table(system, x, y)
    best = lev.min()
    zs, ks = np.nonzero(lev == best)
    order = np.lexsort((zs, ks))
    z, k = int(zs[order[0]]), int(ks[order[0]])
    wit = LinkWitness(start_index=z, steps=k + 1,
                      start_cost=float(entry[z]), end_cost=_exit_cost(system, z, k, y))
    return float(best), wit


def _exit_cost(system: MapSystem, z: int, k: int, y: int) -> float:
    if system.is_tabulated and system.space.matrix is not None:
        return float(system.space.matrix[system.orbit_table[z, k], y])
    pt = system.orbit_points(z)[k]
    return float(points_to_samples_cost(pt[None, :], system.space)[0, y])


def recompute_witness_level(system: MapSystem, x: int, y: int, witness: LinkWitness) -> float:
    """Re-derive max(entry cost, exit cost) for a stored witness from the orbit store."""
    entry = entry_cost_rows(system, np.array([x]))[0, witness.start_index]
    exit_ = _exit_cost(system, witness.start_index, witness.steps - 1, y)
    return max(float(entry), exit_)


def level_matrix(system: MapSystem, targets: Iterable[int] | None = None,
                 threads: int = 1, method: str = "auto") -> LevelMatrix:
    """Pairwise link levels over the requested samples (all by default).

    Entry samples z always range over the full sample set regardless of the
    target subset.  Rows may be computed in parallel; the result does not
    depend on the thread count.
    """
    n = system.n
    if n == 0:
        raise ValueError("empty sample set")
    if targets is None:
        tg = np.arange(n)
    else:
        tg = np.unique(np.asarray(list(targets), dtype=np.int64))
        if len(tg) == 0:
            raise ValueError("empty target set")
        if tg[0] < 0 or tg[-1] >= n:
            raise ValueError("target indices out of range")
    if len(tg) > MATRIX_SIZE_CAP:
        raise ResourceLimitError(
            f"{len(tg)} targets exceed the level-matrix cap ({MATRIX_SIZE_CAP}); "
            "use a coarser grid or an explicit target subset")
    D = entry_cost_rows(system, tg)          # (m, n)
    M = exit_min_matrix(system, tg, method)  # (n, m)
    m = len(tg)
    levels = np.empty((m, m))

    def fill(rows: slice) -> None:
        block = levels[rows]
        block.fill(np.inf)
        Db = D[rows]
        for z in range(n):
            np.minimum(block, np.maximum(Db[:, z][:, None], M[z][None, :]), out=block)

    if threads <= 1 or m < 8:
        fill(slice(0, m))
    else:
        step = max(1, (m + threads - 1) // threads)
        chunks = [slice(i, min(i + step, m)) for i in range(0, m, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: fill(s), chunks))
    return LevelMatrix(levels=levels, targets=tg, horizon=system.horizon,
                       spacing=system.spacing, kind="map",
                       meta={"name": system.name, "n": n})


def reachable_set(matrix: LevelMatrix, x: int, eps: float) -> np.ndarray:
    """Samples reachable from x within budget eps: {y : level(x, y) <= eps}."""
    if np.isnan(eps) or eps < 0:
        raise ValueError("eps must be non-negative")
    row = matrix.levels[matrix.row_of(x)]
    return matrix.targets[row <= eps]


@dataclass(frozen=True)
class HorizonStabilityReport:
    horizon: int
    reduced_horizon: int
    changed_pairs: int
    max_change: float

    @property
    def stable(self) -> bool:
        return self.changed_pairs == 0


def horizon_stability(system: MapSystem, targets: Iterable[int] | None = None,
                      threads: int = 1) -> HorizonStabilityReport:
    """Compare levels at the full horizon against half the horizon.

    A nonzero change count means some level is still improving with longer
    orbits, i.e. the horizon may be too short for the reported resolution.
    """
    full = level_matrix(system, targets, threads=threads)
    h2 = max(1, system.horizon // 2)
    if system.is_tabulated:
        half_sys = replace(system, horizon=h2, orbit_table=system.orbit_table[:, :h2])
    else:
        half_sys = replace(system, horizon=h2, orbit_coords=system.orbit_coords[:, :h2])
    half = level_matrix(half_sys, targets, threads=threads)
    diff = half.levels - full.levels
    changed = int(np.count_nonzero(diff != 0.0))
    max_change = float(np.max(np.abs(diff[np.isfinite(diff)]))) if changed else 0.0
    return HorizonStabilityReport(system.horizon, h2, changed, max_change)
