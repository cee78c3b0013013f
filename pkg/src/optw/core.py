"""Problem semantics for the orienteering problem with time windows.

Node 0 is the start depot and node ``n - 1`` the end depot; both carry score
zero. Travel times are Euclidean distances rounded half-up once, when the
instance's matrix is first requested, and cached.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

FEAS_EPS = 1e-9


class GroupTag(str, enum.Enum):
    SOLOMON = "Solomon"
    CORDEAU = "Cordeau"
    GAVALAS = "Gavalas"
    CUSTOM = "Custom"


class InfeasibleMove(ValueError):
    pass


class InfeasibleRoute(ValueError):
    def __init__(self, step: int, reason: str):
        super().__init__(f"route infeasible at step {step}: {reason}")
        self.step = step
        self.reason = reason


class OracleCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    x: float
    y: float
    score: float
    open: float
    close: float
    duration: float


def round_half_up(values, decimals: int):
    scale = 10.0 ** decimals
    return np.floor(np.asarray(values, dtype=np.float64) * scale + 0.5) / scale


@dataclass(frozen=True, eq=False)
class Instance:
    nodes: tuple[Node, ...]
    start_index: int
    end_index: int
    t_start: float
    t_end: float
    rounding_decimals: int = 1
    t_max: float = 0.0
    score_upper: float = 0.0
    group_tag: GroupTag = GroupTag.CUSTOM
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "group_tag", GroupTag(self.group_tag))
        if self.t_max <= 0:
            object.__setattr__(self, "t_max", float(max(self.t_end, max(n.close for n in self.nodes))))
        if self.score_upper <= 0:
            top = max((n.score for n in self.nodes), default=0.0)
            object.__setattr__(self, "score_upper", 1.1 * top if top > 0 else 1.0)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.nodes, self.start_index, self.end_index, self.t_start, self.t_end,
                self.rounding_decimals, self.t_max, self.score_upper, self.group_tag,
                self.name) == (other.nodes, other.start_index, other.end_index, other.t_start,
                               other.t_end, other.rounding_decimals, other.t_max,
                               other.score_upper, other.group_tag, other.name)

    __hash__ = object.__hash__

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([(v.x, v.y) for v in self.nodes], dtype=np.float64)

    @cached_property
    def scores(self) -> np.ndarray:
        return np.array([v.score for v in self.nodes], dtype=np.float64)

    @cached_property
    def opens(self) -> np.ndarray:
        return np.array([v.open for v in self.nodes], dtype=np.float64)

    @cached_property
    def closes(self) -> np.ndarray:
        return np.array([v.close for v in self.nodes], dtype=np.float64)

    @cached_property
    def durations(self) -> np.ndarray:
        return np.array([v.duration for v in self.nodes], dtype=np.float64)

    @cached_property
    def travel(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        dist = round_half_up(np.sqrt((diff ** 2).sum(-1)), self.rounding_decimals)
        np.fill_diagonal(dist, 0.0)
        dist.setflags(write=False)
        return dist

    @cached_property
    def latest_start(self) -> np.ndarray:
        """Latest service start per node that satisfies both window and budget."""
        return np.minimum(self.closes, self.t_end - self.durations - self.travel[:, self.end_index])

    def poi_indices(self) -> list[int]:
        return [i for i in range(self.n) if i not in (self.start_index, self.end_index)]

    def with_scores(self, scores) -> "Instance":
        nodes = tuple(Node(v.x, v.y, float(s), v.open, v.close, v.duration)
                      for v, s in zip(self.nodes, scores))
        return Instance(nodes, self.start_index, self.end_index, self.t_start, self.t_end,
                        self.rounding_decimals, self.t_max, self.score_upper, self.group_tag,
                        self.name)


@dataclass(frozen=True)
class DayNormalization:
    t_day: float
    t_max: float

    @classmethod
    def for_region(cls, t_end: float, closes) -> "DayNormalization":
        t_day = float(max(t_end, max(closes)))
        return cls(t_day, max(t_day, t_end + 4.0 * t_day / 24.0))


def travel_time(inst: Instance, i: int, j: int) -> float:
    return float(inst.travel[i, j])


@dataclass(frozen=True, eq=False)
class RouteState:
    route: tuple[int, ...]
    current_time: float
    visited: np.ndarray = field(repr=False)

    @property
    def current_node(self) -> int:
        return self.route[-1]

    def __eq__(self, other):
        if not isinstance(other, RouteState):
            return NotImplemented
        return self.route == other.route and self.current_time == other.current_time

    __hash__ = object.__hash__


def initial_state(inst: Instance) -> RouteState:
    visited = np.zeros(inst.n, dtype=bool)
    visited[inst.start_index] = True
    visited.setflags(write=False)
    return RouteState((inst.start_index,), float(inst.t_start), visited)


def is_terminal(inst: Instance, state: RouteState) -> bool:
    return state.current_node == inst.end_index


def service_start(inst: Instance, state: RouteState, j: int) -> float:
    arrival = state.current_time + inst.travel[state.current_node, j]
    return max(arrival, inst.opens[j])


def is_feasible_next(inst: Instance, state: RouteState, j: int) -> bool:
    if is_terminal(inst, state) or state.visited[j]:
        return False
    start = service_start(inst, state, j)
    return bool(start <= inst.closes[j] + FEAS_EPS
                and start + inst.durations[j] + inst.travel[j, inst.end_index] <= inst.t_end + FEAS_EPS)


def advance(inst: Instance, state: RouteState, j: int) -> RouteState:
    if not is_feasible_next(inst, state, j):
        raise InfeasibleMove(f"node {j} is not admissible from {state.current_node} at t={state.current_time}")
    t = service_start(inst, state, j) + inst.durations[j]
    visited = state.visited.copy()
    visited[j] = True
    visited.setflags(write=False)
    return RouteState(state.route + (j,), float(t), visited)


def admissible_batch(inst: Instance, current: np.ndarray, times: np.ndarray,
                     visited: np.ndarray) -> np.ndarray:
    """Vectorised admissible sets for a batch of states, shape (B, n)."""
    start = np.maximum(times[:, None] + inst.travel[current], inst.opens[None, :])
    ok = (start <= inst.closes + FEAS_EPS) & \
         (start + inst.durations + inst.travel[:, inst.end_index] <= inst.t_end + FEAS_EPS)
    ok &= ~visited
    ok[current == inst.end_index] = False
    return ok


def admissible_set(inst: Instance, state: RouteState) -> np.ndarray:
    return admissible_batch(inst, np.array([state.current_node]), np.array([state.current_time]),
                            state.visited[None, :])[0]


@dataclass(frozen=True)
class AdjacencyMask:
    matrix: np.ndarray
    admissible: np.ndarray


def lookahead_batch(inst: Instance, current: np.ndarray, times: np.ndarray, visited: np.ndarray,
                    admissible: np.ndarray | None = None, complete: bool = False) -> np.ndarray:
    """Lookahead adjacency for a batch of states, shape (B, n, n).

    Edge (i, j) exists when the sequence current -> i -> j -> end is feasible.
    The end node has no outgoing edges since a route stops there.
    """
    if admissible is None:
        admissible = admissible_batch(inst, current, times, visited)
    n = inst.n
    off_diag = ~np.eye(n, dtype=bool)
    if complete:
        return admissible[:, :, None] & admissible[:, None, :] & off_diag
    start_i = np.maximum(times[:, None] + inst.travel[current], inst.opens[None, :])
    leave_i = start_i + inst.durations                                        # (B, n)
    start_ij = np.maximum(leave_i[:, :, None] + inst.travel[None, :, :], inst.opens[None, None, :])
    ok = (start_ij <= inst.closes + FEAS_EPS) & \
         (start_ij + inst.durations + inst.travel[:, inst.end_index] <= inst.t_end + FEAS_EPS)
    ok &= admissible[:, :, None] & admissible[:, None, :] & off_diag
    ok[:, inst.end_index, :] = False
    return ok


def lookahead_adjacency(inst: Instance, state: RouteState, complete: bool = False) -> AdjacencyMask:
    adm = admissible_set(inst, state)
    mat = lookahead_batch(inst, np.array([state.current_node]), np.array([state.current_time]),
                          state.visited[None, :], adm[None, :], complete=complete)[0]
    return AdjacencyMask(mat, adm)


def check_route(inst: Instance, route) -> RouteState:
    """Replay ``route`` and return its final state, raising on the first violation."""
    route = list(route)
    if not route or route[0] != inst.start_index:
        raise InfeasibleRoute(0, "route must begin at the start node")
    state = initial_state(inst)
    for step, j in enumerate(route[1:], start=1):
        if is_terminal(inst, state):
            raise InfeasibleRoute(step, "route continues past the end node")
        if not 0 <= j < inst.n:
            raise InfeasibleRoute(step, f"unknown node {j}")
        if state.visited[j]:
            raise InfeasibleRoute(step, f"node {j} visited twice")
        if not is_feasible_next(inst, state, j):
            raise InfeasibleRoute(step, f"node {j} violates its window or the time budget")
        state = advance(inst, state, j)
    if not is_terminal(inst, state):
        raise InfeasibleRoute(len(route), "route does not finish at the end node")
    return state


def route_score(inst: Instance, route) -> float:
    check_route(inst, route)
    return math.fsum(inst.scores[j] for j in route)


def brute_force_optimum(inst: Instance, node_cap: int = 12) -> tuple[list[int], float]:
    """Exhaustive depth-first search for a best route.

    Children are explored in increasing node id with the end node last, so
    routes are generated in lexicographic order; keeping only strict
    improvements returns the lexicographically smallest optimum.
    """
    pois = len(inst.poi_indices())
    if pois > node_cap:
        raise OracleCapExceeded(f"{pois} points of interest exceed the oracle cap of {node_cap}")
    end = inst.end_index
    if end != inst.n - 1:
        raise ValueError("brute_force_optimum expects the end node to have the largest id")
    best_route = [inst.start_index, end]
    best = -math.inf

    def visit(state: RouteState, score: float) -> None:
        nonlocal best, best_route
        adm = admissible_set(inst, state)
        choices = [int(j) for j in np.flatnonzero(adm) if j != end]
        if score + inst.scores[choices].sum() <= best + 1e-9:
            return
        for j in choices:
            visit(advance(inst, state, j), score + inst.scores[j])
        if adm[end] and score > best + 1e-9:
            best = score
            best_route = list(state.route) + [end]

    visit(initial_state(inst), 0.0)
    return best_route, route_score(inst, best_route)
