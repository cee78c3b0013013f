"""Synthetic instance-regions in the layout of the three benchmark families.

Used for fixtures, tests and desk-scale experiments when the published
benchmark files are not at hand.
"""

from __future__ import annotations

import numpy as np

from .core import DayNormalization, GroupTag, Instance, Node
from .instance_io import ROUNDING


def synthetic_region(n_poi: int, seed: int = 0, group: GroupTag | str = GroupTag.SOLOMON,
                     horizon: float | None = None, window: tuple[float, float] | None = None,
                     duration: tuple[float, float] | None = None,
                     score: tuple[int, int] | None = None, name: str = "") -> Instance:
    """Random region with integer data; depot in the middle of the square.

    ``window`` is the (min, max) window width, ``duration`` the (min, max)
    visit time and ``score`` the integer score range, all family defaults
    when omitted.
    """
    group = GroupTag(group)
    rng = np.random.default_rng(seed)
    if group is GroupTag.CORDEAU:
        lo, hi, h, win, dur, sc = -100.0, 100.0, 1000.0, (60.0, 240.0), (1.0, 25.0), (1, 25)
    elif group is GroupTag.GAVALAS:
        lo, hi, h, win, dur, sc = 0.0, 100.0, 1440.0, (240.0, 720.0), (10.0, 150.0), (1, 100)
    else:
        lo, hi, h, win, dur, sc = 0.0, 100.0, 230.0, (20.0, 80.0), (10.0, 10.0), (1, 5)
    h = float(horizon if horizon is not None else h)
    win, dur, sc = window or win, duration or dur, score or sc
    xy = np.round(rng.uniform(lo, hi, size=(n_poi, 2)))
    centre = (lo + hi) / 2
    widths = rng.uniform(*win, size=n_poi)
    durs = np.round(rng.uniform(*dur, size=n_poi))
    mids = rng.uniform(0.0, h, size=n_poi)
    opens = np.clip(np.round(mids - widths / 2), 0.0, h)
    closes = np.clip(np.round(mids + widths / 2), opens + 1.0, h)
    scores = rng.integers(sc[0], sc[1] + 1, size=n_poi).astype(float)
    if group is GroupTag.SOLOMON:
        scores *= 10.0
    depot = Node(centre, centre, 0.0, 0.0, h, 0.0)
    pois = [Node(float(x), float(y), float(s), float(o), float(c), float(d))
            for (x, y), s, o, c, d in zip(xy, scores, opens, closes, durs)]
    nodes = (depot, *pois, depot)
    norm = DayNormalization.for_region(h, [v.close for v in nodes])
    return Instance(nodes, 0, len(nodes) - 1, 0.0, h, ROUNDING[group], norm.t_max,
                    1.1 * float(scores.max()), group, name or f"syn-{group.value.lower()}-{n_poi}-{seed}")


def synthetic_tourist_instance(n_poi: int, seed: int = 0, group: GroupTag | str = GroupTag.SOLOMON,
                               **kw) -> Instance:
    """A generated tourist on a fresh synthetic region."""
    from .tourist import TouristSampler

    base = synthetic_region(n_poi, seed, group, **kw)
    return TouristSampler(base, seed=seed).tourist(0)
