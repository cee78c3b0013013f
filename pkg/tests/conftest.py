from pathlib import Path

import numpy as np
import pytest

from optw.core import GroupTag, Instance, Node
from optw.instance_io import parse_benchmark
from optw.model import ModelConfig, Policy
from optw.synthetic import synthetic_region
from optw.tourist import TouristSampler

FIXTURES = Path(__file__).parent / "fixtures"
FAMILIES = (GroupTag.SOLOMON, GroupTag.CORDEAU, GroupTag.GAVALAS)


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.txt"


def load_fixture(name: str) -> Instance:
    return parse_benchmark(fixture_path(name))


def small_tourists(count: int, n_poi: int, seed: int = 0, families=FAMILIES) -> list[Instance]:
    """Generated tourists on small synthetic regions, cycling through the families."""
    out = []
    for k in range(count):
        group = families[k % len(families)]
        base = synthetic_region(n_poi, seed=seed * 1000 + k, group=group)
        out.append(TouristSampler(base, seed=seed).tourist(k))
    return out


def line_instance(scores, spacing=1.0, t_end=100.0, duration=0.0, window=None) -> Instance:
    """POIs on a line; node 0 start, last node end (both at the origin)."""
    nodes = [Node(0.0, 0.0, 0.0, 0.0, t_end, 0.0)]
    for k, s in enumerate(scores, start=1):
        o, c = window[k - 1] if window else (0.0, t_end)
        nodes.append(Node(k * spacing, 0.0, float(s), o, c, duration))
    nodes.append(Node(0.0, 0.0, 0.0, 0.0, t_end, 0.0))
    return Instance(tuple(nodes), 0, len(nodes) - 1, 0.0, t_end, rounding_decimals=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def desk_policy() -> Policy:
    return Policy.create(ModelConfig.desk(d_model=16, d_ff=32, heads=4), seed=3)


@pytest.fixture(scope="session")
def tiny_policy64() -> Policy:
    return Policy.create(ModelConfig.desk(d_model=16, d_ff=32, heads=4), seed=5, dtype=np.float64)


def random_walk_states(inst: Instance, rng: np.random.Generator):
    """States along one uniformly random admissible walk from start to end."""
    from optw.core import admissible_set, advance, initial_state

    s = initial_state(inst)
    out = [s]
    while s.current_node != inst.end_index:
        s = advance(inst, s, int(rng.choice(np.flatnonzero(admissible_set(inst, s)))))
        out.append(s)
    return out
