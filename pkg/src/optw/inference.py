"""Solution construction from a trained policy."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Instance, route_score
from .model import EncoderState, Policy, PolicyContext, initial_encoder_state, rollout_batch
from .nn import no_grad


@dataclass
class SolutionReport:
    route: list[int]
    score: float
    step_probs: list[float]
    log_prob: float
    wall_time: float
    strategy: dict = field(default_factory=dict)
    instance: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")
        return path


@dataclass(frozen=True)
class Strategy:
    kind: str                 # greedy | sample | beam | active_search
    beams: int = 128
    seed: int = 0
    epochs: int = 128

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """``greedy``, ``sample:SEED``, ``beam:NB`` or ``active_search:EPOCHS:NB``."""
        head, *rest = text.split(":")
        if head == "greedy":
            return cls("greedy")
        if head == "sample":
            return cls("sample", seed=int(rest[0]) if rest else 0)
        if head == "beam":
            return cls("beam", beams=int(rest[0]) if rest else 128)
        if head in ("active_search", "as"):
            epochs = int(rest[0]) if rest else 128
            beams = int(rest[1]) if len(rest) > 1 else 128
            return cls("active_search", beams=beams, epochs=epochs)
        raise ValueError(f"unknown strategy {text!r}")


def _report(inst, route, probs, elapsed, strategy) -> SolutionReport:
    logp = float(np.sum(np.log(probs))) if probs else 0.0
    return SolutionReport(list(map(int, route)), route_score(inst, route), [float(p) for p in probs],
                          logp, elapsed, strategy, inst.name)


def greedy(policy: Policy, inst: Instance) -> SolutionReport:
    t0 = time.perf_counter()
    with no_grad():
        res = rollout_batch(inst, policy.params, policy.cfg, 1, "greedy")
    return _report(inst, res.routes[0], res.step_probs[0], time.perf_counter() - t0, {"kind": "greedy"})


def sample(policy: Policy, inst: Instance, seed: int = 0) -> SolutionReport:
    t0 = time.perf_counter()
    with no_grad():
        res = rollout_batch(inst, policy.params, policy.cfg, 1, "sample", np.random.default_rng(seed))
    return _report(inst, res.routes[0], res.step_probs[0], time.perf_counter() - t0,
                   {"kind": "sample", "seed": seed})


@dataclass
class Beam:
    route: list[int]
    time: float
    log_prob: float
    probs: list[float]
    finished: bool = False


def beam_search(policy: Policy, inst: Instance, n_b: int = 128, cap_to_nodes: bool = True,
                return_all: bool = False):
    """Keep the ``n_b`` most probable partial routes; return the best-scoring finished one.

    Candidates are ranked by accumulated log-probability. Finished routes
    leave the live set and are kept for the final selection, which picks the
    highest total score (ties: higher log-probability, then smaller route).
    With ``cap_to_nodes`` the width never exceeds the number of nodes.
    """
    if n_b < 1:
        raise ValueError("beam width must be at least 1")
    t0 = time.perf_counter()
    width = min(n_b, inst.n) if cap_to_nodes else n_b
    end, n = inst.end_index, inst.n
    with no_grad():
        ctx = PolicyContext(inst, policy.params, policy.cfg)
        live = [Beam([inst.start_index], float(inst.t_start), 0.0, [])]
        enc: EncoderState = initial_encoder_state(policy.params, 1)
        visited = np.zeros((1, n), dtype=bool)
        visited[0, inst.start_index] = True
        finished: list[Beam] = []
        while live:
            current = np.array([b.route[-1] for b in live])
            times = np.array([b.time for b in live])
            out = ctx.step(enc, current, times, visited)
            lp = out.log_probs.data.astype(np.float64)
            cand = np.where(out.admissible, np.array([b.log_prob for b in live])[:, None] + lp, -np.inf)
            flat = cand.ravel()
            valid = np.flatnonzero(np.isfinite(flat))
            order = valid[np.argsort(-flat[valid], kind="stable")][:width]
            parents, nodes = np.divmod(order, n)
            new_live, keep_rows = [], []
            for parent, j in zip(parents.tolist(), nodes.tolist()):
                pb = live[parent]
                start = max(pb.time + inst.travel[pb.route[-1], j], inst.opens[j])
                child = Beam(pb.route + [j], start + inst.durations[j], float(flat[parent * n + j]),
                             pb.probs + [math.exp(lp[parent, j])], j == end)
                if child.finished:
                    finished.append(child)
                else:
                    new_live.append(child)
                    keep_rows.append(parent)
            if new_live:
                rows = np.array(keep_rows)
                enc = out.enc.select(rows)
                visited = visited[rows].copy()
                visited[np.arange(len(rows)), [b.route[-1] for b in new_live]] = True
            live = new_live
    scored = [(math.fsum(inst.scores[b.route]), b) for b in finished]
    scored.sort(key=lambda sb: (-sb[0], -sb[1].log_prob, sb[1].route))
    best = scored[0][1]
    report = _report(inst, best.route, best.probs, time.perf_counter() - t0,
                     {"kind": "beam", "beams": n_b, "width": width})
    if return_all:
        return report, [b for _, b in scored]
    return report


def solve(policy: Policy, inst: Instance, strategy: Strategy | str) -> SolutionReport:
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    if strategy.kind == "greedy":
        return greedy(policy, inst)
    if strategy.kind == "sample":
        return sample(policy, inst, strategy.seed)
    if strategy.kind == "beam":
        return beam_search(policy, inst, strategy.beams)
    if strategy.kind == "active_search":
        from .trainer import active_search

        t0 = time.perf_counter()
        _, report = active_search(policy, inst, epochs=strategy.epochs, n_b=strategy.beams,
                                  seed=strategy.seed)
        report.wall_time = time.perf_counter() - t0
        report.strategy = {"kind": "active_search", "epochs": strategy.epochs, "beams": strategy.beams}
        return report
    raise ValueError(f"unknown strategy kind {strategy.kind!r}")
