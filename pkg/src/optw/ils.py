"""Iterated local search baseline (insertion + shake).

Insertion picks the unvisited node and position maximising
``score**2 / shift``, where shift is the extra time the insertion adds in
front of the following visit. Feasibility is checked in O(1) per candidate
with the usual wait / max-shift bookkeeping. The shake step removes R
consecutive visits starting at position S; the search loops with
S += R, R += 1 and stops after ``max_no_improve`` shakes without a new best.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import Instance, check_route, route_score
from .inference import SolutionReport

EPS = 1e-9


@dataclass
class IlsConfig:
    max_no_improve: int = 150
    shake_start: int = 1          # initial S (1-based position of the first removed visit)
    shake_count: int = 1          # initial R (number of consecutive visits removed)
    seed: int = 0                 # recorded only; the search itself is deterministic
    time_limit: float | None = None
    max_iterations: int | None = None

    def __post_init__(self):
        if self.shake_count < 1:
            raise ValueError("shake_count must be at least 1")
        if self.shake_start < 1:
            raise ValueError("shake_start must be at least 1")
        if self.max_no_improve < 1:
            raise ValueError("max_no_improve must be at least 1")


@dataclass
class Schedule:
    """Per-position service start, wait and max-shift of a route."""

    route: list[int]
    start: np.ndarray
    wait: np.ndarray
    max_shift: np.ndarray
    feasible: bool


def schedule(inst: Instance, route: list[int]) -> Schedule:
    k = len(route)
    start = np.empty(k)
    wait = np.zeros(k)
    feasible = True
    start[0] = inst.t_start
    for p in range(1, k):
        prev, j = route[p - 1], route[p]
        arrive = start[p - 1] + inst.durations[prev] + inst.travel[prev, j]
        wait[p] = max(0.0, inst.opens[j] - arrive)
        start[p] = arrive + wait[p]
    lat = inst.latest_start
    slack = np.empty(k)
    for p in range(k):
        j = route[p]
        limit = inst.t_end if p == k - 1 else lat[j]
        slack[p] = limit - start[p]
        if slack[p] < -EPS:
            feasible = False
    max_shift = np.empty(k)
    max_shift[-1] = slack[-1]
    for p in range(k - 2, -1, -1):
        max_shift[p] = min(slack[p], wait[p + 1] + max_shift[p + 1])
    return Schedule(list(route), start, wait, max_shift, feasible)


def best_insertion(inst: Instance, sch: Schedule, in_route: np.ndarray):
    """(ratio, node, position) of the best feasible insertion, or None."""
    route, lat = sch.route, inst.latest_start
    best = None
    for j in np.flatnonzero(~in_route).tolist():
        sj = inst.scores[j]
        for p in range(len(route) - 1):
            i, nxt = route[p], route[p + 1]
            arrive = sch.start[p] + inst.durations[i] + inst.travel[i, j]
            begin = max(arrive, inst.opens[j])
            if begin > lat[j] + EPS:
                continue
            shift = (inst.travel[i, j] + (begin - arrive) + inst.durations[j]
                     + inst.travel[j, nxt] - inst.travel[i, nxt])
            if shift > sch.wait[p + 1] + sch.max_shift[p + 1] + EPS:
                continue
            ratio = sj * sj / shift if shift > EPS else math.inf
            if best is None or ratio > best[0]:
                best = (ratio, j, p + 1)
    return best


def _membership(inst: Instance, route: list[int]) -> np.ndarray:
    mask = np.zeros(inst.n, dtype=bool)
    mask[route] = True
    mask[[inst.start_index, inst.end_index]] = True
    return mask


def local_search(inst: Instance, route: list[int]) -> list[int]:
    """Greedy insertion until nothing fits."""
    sch = schedule(inst, route)
    in_route = _membership(inst, route)
    while True:
        cand = best_insertion(inst, sch, in_route)
        if cand is None:
            return sch.route
        _, j, pos = cand
        new_route = sch.route[:pos] + [j] + sch.route[pos:]
        in_route[j] = True
        sch = schedule(inst, new_route)


def shake(inst: Instance, route: list[int], s: int, r: int) -> list[int]:
    """Drop ``r`` visits starting at POI position ``s`` (1-based), then repair.

    Rounded travel times can break the triangle inequality, so a removal may
    make later visits late; those are dropped until the route is feasible.
    """
    visits = route[1:-1]
    if not visits:
        return list(route)
    s0 = (s - 1) % len(visits)
    keep = visits[:s0] + visits[s0 + r:]
    new = [route[0], *keep, route[-1]]
    sch = schedule(inst, new)
    cut = s0
    while not sch.feasible and cut + 1 < len(new) - 1:
        new = new[:cut + 1] + new[cut + 2:]
        sch = schedule(inst, new)
    return new


def ils_solve(inst: Instance, cfg: IlsConfig | None = None) -> SolutionReport:
    cfg = cfg or IlsConfig()
    t0 = time.perf_counter()
    current = local_search(inst, [inst.start_index, inst.end_index])
    best, best_score = list(current), route_score(inst, current)
    log = [(0, 0.0, best_score)]
    s, r, stale, it = cfg.shake_start, cfg.shake_count, 0, 0
    r_reset = max(1, inst.n // 3)
    while stale < cfg.max_no_improve:
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            break
        if cfg.max_iterations is not None and it >= cfg.max_iterations:
            break
        it += 1
        current = shake(inst, current, s, r)
        s += r
        r += 1
        current = local_search(inst, current)
        score = route_score(inst, current)
        if score > best_score + EPS:
            best, best_score = list(current), score
            r, stale = 1, 0
            log.append((it, time.perf_counter() - t0, best_score))
        else:
            stale += 1
        n_visits = max(1, len(current) - 2)
        if s > n_visits:
            s -= n_visits
            s = max(1, min(s, n_visits))
        if r >= r_reset:
            r = 1
    check_route(inst, best)
    elapsed = time.perf_counter() - t0
    return SolutionReport(best, best_score, [], 0.0, elapsed,
                          {"kind": "ils", "label": "reimplementation", "seed": cfg.seed, "iterations": it,
                           "max_no_improve": cfg.max_no_improve, "log": [list(e) for e in log]}, inst.name)
