"""Per-node input features.

Static columns: x, y (min-max scaled to [-1, 1]), duration, open, close
(divided by ``t_max``), score (divided by ``score_upper``), and the budget
end time (divided by ``t_max``).

Dynamic columns, computed from the current time t and again from
t' = t + travel(current, i):
    (open_i - t) / t_max, (close_i - t) / t_max,
    (t - T_start) / span, (T_end - t) / span,   span = T_end - T_start
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AdjacencyMask, Instance, RouteState

N_STATIC = 7
N_DYNAMIC = 8


class DegenerateBudget(ValueError):
    pass


@dataclass(frozen=True)
class FeatureTensors:
    static: np.ndarray
    dynamic: np.ndarray
    mask: AdjacencyMask | None = None


def _minmax(col: np.ndarray) -> np.ndarray:
    lo, hi = col.min(), col.max()
    if hi - lo <= 0:
        return np.zeros_like(col)
    return 2.0 * (col - lo) / (hi - lo) - 1.0


def static_features(inst: Instance) -> np.ndarray:
    out = np.empty((inst.n, N_STATIC))
    out[:, 0] = _minmax(inst.coords[:, 0])
    out[:, 1] = _minmax(inst.coords[:, 1])
    out[:, 2] = inst.durations / inst.t_max
    out[:, 3] = inst.opens / inst.t_max
    out[:, 4] = inst.closes / inst.t_max
    out[:, 5] = inst.scores / inst.score_upper
    out[:, 6] = inst.t_end / inst.t_max
    return out


def dynamic_features_batch(inst: Instance, current: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Dynamic features for B states at once, shape (B, n, 8)."""
    span = inst.t_end - inst.t_start
    if span <= 0:
        raise DegenerateBudget("T_end must exceed T_start")
    times = np.asarray(times, dtype=np.float64)
    b, n = times.shape[0], inst.n
    out = np.empty((b, n, N_DYNAMIC))
    for offset, t in ((0, np.broadcast_to(times[:, None], (b, n))),
                      (4, times[:, None] + inst.travel[current])):
        out[:, :, offset] = (inst.opens - t) / inst.t_max
        out[:, :, offset + 1] = (inst.closes - t) / inst.t_max
        out[:, :, offset + 2] = (t - inst.t_start) / span
        out[:, :, offset + 3] = (inst.t_end - t) / span
    return out


def dynamic_features(inst: Instance, state: RouteState) -> np.ndarray:
    return dynamic_features_batch(inst, np.array([state.current_node]),
                                  np.array([state.current_time]))[0]


def featurize(inst: Instance, state: RouteState, mask: AdjacencyMask | None = None) -> FeatureTensors:
    return FeatureTensors(static_features(inst), dynamic_features(inst, state), mask)
