import numpy as np
import pytest

from optw.core import Instance, Node, brute_force_optimum, check_route
from optw.ils import IlsConfig, best_insertion, ils_solve, local_search, schedule, shake

from conftest import line_instance, load_fixture, small_tourists
from optw.tourist import TouristSampler


def depot(t_end=100.0):
    return Node(0, 0, 0, 0, t_end, 0)


class TestSchedule:
    def test_wait_and_shift(self):
        inst = line_instance([1, 1], window=[(5.0, 50.0), (0.0, 50.0)], t_end=60.0)
        sch = schedule(inst, [0, 1, 2, 3])
        np.testing.assert_allclose(sch.start, [0, 5, 6, 8])
        np.testing.assert_allclose(sch.wait, [0, 4, 0, 0])
        assert sch.feasible
        # the end node can slip by 52; POI 2 by min(44, 52); POI 1 by min(45, 44)
        np.testing.assert_allclose(sch.max_shift, [48, 44, 44, 52])

    def test_infeasible_detected(self):
        inst = line_instance([1, 1], spacing=30.0, t_end=60.0)
        assert not schedule(inst, [0, 1, 2, 3]).feasible

    def test_chosen_insertion_replays(self):
        for inst in small_tourists(9, 12, seed=2):
            full = local_search(inst, [inst.start_index, inst.end_index])
            if len(full) < 3:
                continue
            route = full[:-2] + full[-1:]
            sch = schedule(inst, route)
            in_route = np.zeros(inst.n, dtype=bool)
            in_route[route] = True
            _, j, p = best_insertion(inst, sch, in_route)
            check_route(inst, route[:p] + [j] + route[p:])

    def test_no_move_missed(self):
        for inst in small_tourists(9, 10, seed=3):
            route = local_search(inst, [inst.start_index, inst.end_index])
            in_route = np.zeros(inst.n, dtype=bool)
            in_route[route] = True
            for j in np.flatnonzero(~in_route):
                for p in range(1, len(route)):
                    assert not schedule(inst, route[:p] + [int(j)] + route[p:]).feasible


class TestShake:
    def test_removes_block(self):
        inst = line_instance([1, 2, 3, 4])
        assert shake(inst, [0, 1, 2, 3, 4, 5], 2, 2) == [0, 1, 4, 5]

    def test_wraps(self):
        inst = line_instance([1, 2, 3, 4])
        assert shake(inst, [0, 1, 2, 3, 4, 5], 6, 1) == [0, 1, 3, 4, 5]

    def test_empty_route(self):
        inst = line_instance([1])
        assert shake(inst, [0, 2], 1, 3) == [0, 2]

    def test_result_feasible(self):
        for inst in small_tourists(6, 15, seed=5):
            route = local_search(inst, [inst.start_index, inst.end_index])
            for s in range(1, 5):
                for r in range(1, 4):
                    check_route(inst, shake(inst, route, s, r))


class TestIls:
    def test_near_optimal_on_small(self):
        ratios = []
        for inst in small_tourists(20, 9, seed=17):
            best = brute_force_optimum(inst)[1]
            got = ils_solve(inst).score
            assert got <= best + 1e-9
            ratios.append(got / best if best > 0 else 1.0)
        assert np.mean(ratios) >= 0.9

    def test_nothing_feasible(self):
        nodes = (depot(10), Node(50, 0, 3, 0, 100, 0), depot(10))
        inst = Instance(nodes, 0, 2, 0.0, 10.0)
        rep = ils_solve(inst)
        assert rep.route == [0, 2] and rep.score == 0.0

    def test_anytime_log_monotone(self):
        rep = ils_solve(load_fixture("solomon_syn100"))
        best = [row[2] for row in rep.strategy["log"]]
        assert all(b > a for a, b in zip(best, best[1:]))
        assert best[-1] == rep.score
        assert rep.strategy["label"] == "reimplementation"

    def test_deterministic(self):
        inst = TouristSampler(load_fixture("cordeau_syn48"), seed=0).tourist(0)
        a, b = ils_solve(inst), ils_solve(inst)
        assert a.route == b.route and a.strategy["iterations"] == b.strategy["iterations"]

    def test_large_instance_feasible(self):
        inst = load_fixture("solomon_long100")
        rep = ils_solve(inst, IlsConfig(time_limit=20.0))
        check_route(inst, rep.route)
        assert len(rep.route) > 10

    def test_iteration_limit(self):
        rep = ils_solve(load_fixture("solomon_syn100"), IlsConfig(max_iterations=3))
        assert rep.strategy["iterations"] == 3

    @pytest.mark.parametrize("kw", [{"shake_count": 0}, {"shake_start": 0}, {"max_no_improve": 0}])
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            IlsConfig(**kw)
