"""Sampling new tourists for a benchmark instance-region.

Region parameters (POI coordinates, windows, durations) are copied from the
template. The start location, start/end times and the scores are drawn per
tourist. Times are sampled on a 24-"hour" clock where one day is the
template's latest time stamp, then mapped back and rounded to integers.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``;
tourist ``k`` of a run with seed ``s`` uses ``SeedSequence(s, spawn_key=(k,))``
so any tourist can be regenerated on its own.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DayNormalization, GroupTag, Instance, Node
from .instance_io import write_canonical

HOURS_PER_DAY = 24.0


class ScoreScheme(str, enum.Enum):
    UNIFORM = "uniform"
    CORRELATED = "correlated"


class DegenerateDurations(ValueError):
    pass


def substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def default_scheme(group: GroupTag) -> ScoreScheme:
    return ScoreScheme.CORRELATED if group is GroupTag.GAVALAS else ScoreScheme.UNIFORM


def _round_half_up(x: float) -> float:
    return float(math.floor(x + 0.5))


def region_normalization(base: Instance) -> DayNormalization:
    return DayNormalization.for_region(base.t_end, base.closes)


def _poi_mask(base: Instance) -> np.ndarray:
    mask = np.ones(base.n, dtype=bool)
    mask[[base.start_index, base.end_index]] = False
    return mask


def max_score(base: Instance) -> float:
    return float(base.scores[_poi_mask(base)].max())


def sample_start_location(rng: np.random.Generator, group: GroupTag,
                          base: Instance | None = None) -> tuple[float, float]:
    if group is GroupTag.CORDEAU:
        lo, hi = (-100.0, -100.0), (100.0, 100.0)
    elif group in (GroupTag.SOLOMON, GroupTag.GAVALAS) or base is None:
        lo, hi = (0.0, 0.0), (100.0, 100.0)
    else:
        pts = base.coords[_poi_mask(base)]
        lo, hi = tuple(pts.min(axis=0)), tuple(pts.max(axis=0))
    x, y = rng.uniform(lo, hi)
    return float(x), float(y)


def time_bounds(base: Instance) -> tuple[float, float, float]:
    """(start lower bound, start upper bound, end upper bound) in day hours."""
    scale = region_normalization(base).t_day / HOURS_PER_DAY
    ts, te = base.t_start / scale, base.t_end / scale
    return ts - 4.0, min(15.0, te + 4.0), te + 4.0


def sample_hours(rng: np.random.Generator, base: Instance) -> tuple[float, float]:
    """Start and end on the day-hour clock, before mapping back and rounding."""
    start_lo, start_hi, end_hi = time_bounds(base)
    start = rng.uniform(start_lo, start_hi)
    end_lo = max(12.0, start + 4.0)
    # templates that end very early can push the lower bound past the upper one
    end = rng.uniform(end_lo, end_hi) if end_hi > end_lo else end_lo
    return float(start), float(end)


def sample_times(rng: np.random.Generator, base: Instance) -> tuple[float, float]:
    norm = region_normalization(base)
    scale = norm.t_day / HOURS_PER_DAY
    start, end = sample_hours(rng, base)
    t_start = _round_half_up(start * scale)
    t_end = min(_round_half_up(end * scale), float(math.floor(norm.t_max)))
    return t_start, t_end


def sample_scores_uniform(rng: np.random.Generator, base: Instance) -> np.ndarray:
    top = max_score(base)
    mask = _poi_mask(base)
    scores = np.zeros(base.n)
    scores[mask] = rng.uniform(1.0, 1.1 * top, size=int(mask.sum()))
    return scores


def sample_scores_correlated(rng: np.random.Generator, base: Instance, sigma: float = 10.0) -> np.ndarray:
    """Normal draws centred on ``S_max * d_i / d_max`` with std ``sigma``, clipped."""
    mask = _poi_mask(base)
    d = base.durations[mask]
    d_max = d.max() if d.size else 0.0
    if d_max <= 0:
        raise DegenerateDurations("correlated scores need a positive visit duration")
    top = max_score(base)
    scores = np.zeros(base.n)
    draws = rng.normal(top * d / d_max, sigma)
    scores[mask] = np.clip(draws, 1.0, 1.1 * top)
    return scores


@dataclass
class TouristSampler:
    base: Instance
    scheme: ScoreScheme | None = None
    seed: int = 0
    score_sigma: float = 10.0

    def __post_init__(self):
        if self.scheme is None:
            self.scheme = default_scheme(self.base.group_tag)
        self.scheme = ScoreScheme(self.scheme)

    def tourist(self, index: int) -> Instance:
        return generate_tourist(substream(self.seed, index), self.base, self.scheme,
                                self.score_sigma, name=f"{self.base.name}-g{index}")


def generate_tourist(rng: np.random.Generator, base: Instance, scheme: ScoreScheme | str | None = None,
                     score_sigma: float = 10.0, name: str | None = None) -> Instance:
    scheme = default_scheme(base.group_tag) if scheme is None else ScoreScheme(scheme)
    x, y = sample_start_location(rng, base.group_tag, base)
    t_start, t_end = sample_times(rng, base)
    if scheme is ScoreScheme.UNIFORM:
        scores = sample_scores_uniform(rng, base)
    else:
        scores = sample_scores_correlated(rng, base, score_sigma)
    norm = region_normalization(base)
    depot = Node(x, y, 0.0, t_start, t_end, 0.0)
    pois = []
    for i in base.poi_indices():
        v = base.nodes[i]
        pois.append(Node(v.x, v.y, float(scores[i]), v.open, v.close, v.duration))
    nodes = (depot, *pois, depot)
    return Instance(nodes, 0, len(nodes) - 1, t_start, t_end,
                    rounding_decimals=base.rounding_decimals, t_max=norm.t_max,
                    score_upper=1.1 * max_score(base), group_tag=base.group_tag,
                    name=name if name is not None else f"{base.name}-g")


def build_validation_set(base: Instance, count: int = 64, seed: int = 0,
                         scheme: ScoreScheme | str | None = None,
                         out_dir: str | Path | None = None) -> list[Instance]:
    """Deterministic tourist set; written as ``<out_dir>/<idx>.json`` when asked."""
    if count < 1:
        raise ValueError("count must be at least 1")
    sampler = TouristSampler(base, scheme, seed)
    tourists = [sampler.tourist(k) for k in range(count)]
    if out_dir is not None:
        for k, inst in enumerate(tourists):
            write_canonical(inst, Path(out_dir) / f"{k}.json")
    return tourists
