"""Semiflow analysis: fixed-step integration and duration-constrained links.

The continuous-time analogue of a link replaces the step count by a flow
duration: jump from x to a sample z, flow for some time r at least T, jump out
near y.  The level of a pair at duration floor T is

    level_T(x, y) = min over samples z and grid times r in [T, t_max]
                    of max(cost(x, z), cost(flow_r(z), y)).

level_T is non-decreasing in T (larger floors shrink the feasible durations),
and membership in the continuous-time recurrent sets requires links at every
duration floor, so the engine evaluates at the largest configured floor and
reports that floor as the approximation parameter.  Durations live on the
integration time grid; trajectories are integrated with the classical
fixed-step 4th-order scheme and stored at times {0, dt, 2 dt, ..., t_max}
exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (CostSpace, DEFAULT_MAX_SAMPLES, ResourceLimitError,
                   grid_points, points_to_samples_cost)
from .links import MATRIX_SIZE_CAP, LevelMatrix


class IntegrationError(RuntimeError):
    """Raised when the vector field produces a non-finite state."""


def integrate(field_fn: Callable[[np.ndarray], np.ndarray], z0,
              t_max: float, dt: float) -> np.ndarray:
    """Fixed-step 4th-order explicit integration of an autonomous field.

    ``z0`` may be a single state or an (n, d) batch; the returned trajectory
    has shape (steps + 1, ...) with steps = round(t_max / dt), sampled at
    times {0, dt, ..., t_max}.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(round(t_max / dt))
    y = np.array(z0, dtype=float)
    out = np.empty((steps + 1,) + y.shape)
    out[0] = y
    for i in range(steps):
        k1 = field_fn(y)
        k2 = field_fn(y + 0.5 * dt * k1)
        k3 = field_fn(y + 0.5 * dt * k2)
        k4 = field_fn(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            bad = np.argwhere(~np.isfinite(np.atleast_1d(y)))
            raise IntegrationError(
                f"non-finite state at t={(i + 1) * dt:.6g}, component {bad[0].tolist()}")
        out[i + 1] = y
    return out


@dataclass(frozen=True)
class SemiflowSystem:
    """Grid-sampled vector field with stored trajectories.

    ``traj[z, i]`` is the state of sample z at time ``i * dt``; the duration
    floor ``t_min`` and the horizon ``t_max`` delimit the admissible link
    durations.
    """

    space: CostSpace
    field_fn: Callable[[np.ndarray], np.ndarray]
    dt: float
    t_min: float
    t_max: float
    traj: np.ndarray              # (n, steps + 1, d)
    spacing: float | None = None
    box: np.ndarray | None = None
    name: str = "semiflow"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.dt <= self.t_min <= self.t_max):
            raise ValueError("need 0 < dt <= t_min <= t_max")

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def steps(self) -> int:
        return self.traj.shape[1] - 1

    def time_index(self, t: float) -> int:
        return int(round(t / self.dt))

    def index_of(self, coord) -> int:
        costs = points_to_samples_cost(np.atleast_2d(np.asarray(coord, dtype=float)),
                                       self.space)
        return int(np.argmin(costs[0]))


def build_flow_system(field_fn: Callable[[np.ndarray], np.ndarray],
                      box: Sequence[Sequence[float]], spacing: float,
                      dt: float, t_min: float, t_max: float,
                      name: str = "semiflow",
                      max_samples: int = DEFAULT_MAX_SAMPLES) -> SemiflowSystem:
    """Sample a box, integrate every sample forward, and package the system."""
    pts = grid_points(box, spacing, max_samples=max_samples)
    traj = integrate(field_fn, pts, t_max, dt)      # (steps+1, n, d)
    traj = np.ascontiguousarray(np.swapaxes(traj, 0, 1))
    space = CostSpace(coords=pts, is_metric=True, is_non_degenerate=True)
    return SemiflowSystem(space=space, field_fn=field_fn, dt=dt, t_min=t_min,
                          t_max=t_max, traj=traj, spacing=spacing,
                          box=np.asarray(box, dtype=float), name=name)


@dataclass(frozen=True)
class FlowLinkWitness:
    """An achieving (entry sample, duration) pair for a flow link level."""

    start_index: int
    duration: float
    start_cost: float
    end_cost: float

    @property
    def level(self) -> float:
        return max(self.start_cost, self.end_cost)


def _duration_window(system: SemiflowSystem, T: float | None) -> tuple[int, float]:
    t = system.t_min if T is None else float(T)
    if t > system.t_max:
        raise ValueError(f"duration floor {t} exceeds the horizon {system.t_max}")
    if t < system.dt:
        raise ValueError("duration floor must be at least dt")
    return system.time_index(t), t


def flow_exit_min(system: SemiflowSystem, cols: np.ndarray, i_min: int) -> np.ndarray:
    """M[z, j] = min over grid durations r >= i_min * dt of cost(flow_r(z), cols[j])."""
    coords = system.space.coords
    targets = coords[cols]
    window = system.traj[:, i_min:, :]
    n = system.n
    out = np.empty((n, len(cols)))
    one_d = coords.shape[1] == 1
    for z in range(n):
        if one_d:
            s = np.sort(window[z, :, 0])
            t = targets[:, 0]
            pos = np.searchsorted(s, t)
            left = np.abs(t - s[np.clip(pos - 1, 0, len(s) - 1)])
            right = np.abs(s[np.clip(pos, 0, len(s) - 1)] - t)
            out[z] = np.minimum(left, right)
        else:
            diff = window[z][:, None, :] - targets[None, :, :]
            out[z] = np.sqrt(np.sum(diff * diff, axis=2)).min(axis=0)
    return out


def flow_level_matrix(system: SemiflowSystem, T: float | None = None,
                      targets: Iterable[int] | None = None,
                      threads: int = 1) -> LevelMatrix:
    """Pairwise flow link levels at duration floor T (default: the configured t_min)."""
    i_min, t = _duration_window(system, T)
    n = system.n
    if targets is None:
        tg = np.arange(n)
    else:
        tg = np.unique(np.asarray(list(targets), dtype=np.int64))
        if len(tg) == 0:
            raise ValueError("empty target set")
    if len(tg) > MATRIX_SIZE_CAP:
        raise ResourceLimitError(
            f"{len(tg)} targets exceed the level-matrix cap ({MATRIX_SIZE_CAP})")
    D = points_to_samples_cost(system.space.coords[tg], system.space)
    M = flow_exit_min(system, tg, i_min)
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
    return LevelMatrix(levels=levels, targets=tg, horizon=system.steps,
                       spacing=system.spacing, kind="flow",
                       meta={"name": system.name, "n": n, "dt": system.dt,
                             "t_min": t, "t_max": system.t_max})


def flow_link_level(system: SemiflowSystem, x: int, y: int,
                    T: float | None = None) -> tuple[float, FlowLinkWitness]:
    """Minimal flow link level from sample x to sample y at duration floor T."""
    i_min, _ = _duration_window(system, T)
    coords = system.space.coords
    entry = points_to_samples_cost(coords[x][None, :], system.space)[0]
    window = system.traj[:, i_min:, :]
    if coords.shape[1] == 1:
        exits = np.abs(window[:, :, 0] - coords[y, 0])
    else:
        diff = window - coords[y][None, None, :]
        exits = np.sqrt(np.sum(diff * diff, axis=2))
    lev = np.maximum(entry[:, None], exits)
    best = lev.min()
    zs, ks = np.nonzero(lev == best)
    order = np.lexsort((zs, ks))
    z, k = int(zs[order[0]]), int(ks[order[0]])
    wit = FlowLinkWitness(start_index=z, duration=(i_min + k) * system.dt,
                          start_cost=float(entry[z]), end_cost=float(exits[z, k]))
    return float(best), wit


def flow_nw_level(system: SemiflowSystem, x: int, T: float | None = None) -> float:
    """Recurrence level of sample x under the semiflow, at the largest duration floor."""
    level, _ = flow_link_level(system, x, x, T)
    return level


def flow_robustness_level(matrix: LevelMatrix, x: int, zero_tol: float) -> float:
    """Flow-side robustness level; same reduction as the map case."""
    from .filtration import robustness_level
    return robustness_level(matrix, x, zero_tol)
