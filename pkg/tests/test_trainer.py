import shutil

import numpy as np
import pytest

from optw.core import GroupTag
from optw.model import ModelConfig, Policy
from optw.nn import AdamConfig
from optw.synthetic import synthetic_region
from optw.trainer import (
    FINE_TUNE_LR,
    Scheme,
    TrainConfig,
    TrainLog,
    advantages,
    epoch_rng,
    reinforce_step,
    run_training,
    train,
)

from conftest import line_instance, load_fixture

TINY = ModelConfig.desk(d_model=16, d_ff=32, heads=4)


def region(seed=0, name=None, n_poi=8):
    return synthetic_region(n_poi, seed=seed, group=GroupTag.SOLOMON, horizon=300.0, window=(60.0, 200.0),
                            name=name or f"r{seed}")


def quick(regions, **kw):
    kw.setdefault("model", TINY)
    kw.setdefault("epochs", 4)
    kw.setdefault("batch_size", 4)
    kw.setdefault("monitor_every", 2)
    kw.setdefault("checkpoint_every", 2)
    kw.setdefault("validation_count", 3)
    kw.setdefault("adam", AdamConfig(lr=1e-3))
    return TrainConfig(list(regions), **kw)


class TestPieces:
    def test_advantages_centred(self):
        a = advantages([1.0, 2.0, 6.0])
        np.testing.assert_allclose(a, [-2, -1, 3])
        assert a.sum() == 0

    def test_zero_advantage_keeps_params(self):
        # one POI that can never be visited: every route is [start, end]
        inst = line_instance([5.0], spacing=80.0, t_end=100.0)
        policy = Policy.create(TINY, seed=0)
        before = {k: v.copy() for k, v in policy.params.values().items()}
        reinforce_step(policy, inst, np.random.default_rng(0), 4, AdamConfig(lr=1e-2))
        for k, v in policy.params.values().items():
            np.testing.assert_array_equal(v, before[k])

    def test_step_changes_params(self):
        inst = load_fixture("solomon_desk20")
        policy = Policy.create(TINY, seed=0)
        before = policy.params["ptr.w"].data.copy()
        reinforce_step(policy, inst, np.random.default_rng(0), 8, AdamConfig(lr=1e-3))
        assert not np.array_equal(before, policy.params["ptr.w"].data)
        assert policy.params.step_count == 1

    def test_epoch_streams(self):
        a = epoch_rng(3, 10).random(4)
        np.testing.assert_array_equal(a, epoch_rng(3, 10).random(4))
        assert not np.array_equal(a, epoch_rng(3, 11).random(4))
        assert not np.array_equal(a, epoch_rng(4, 10).random(4))


class TestConfig:
    def test_finetune_forces_lr(self, tmp_path):
        cfg = quick([region()], scheme="finetune", init_checkpoint=tmp_path / "x.npz")
        assert cfg.adam.lr_at(0) == cfg.adam.lr_at(10 ** 6) == FINE_TUNE_LR

    def test_finetune_needs_checkpoint(self):
        with pytest.raises(ValueError):
            quick([region()], scheme="finetune")

    def test_scratch_single_region(self):
        with pytest.raises(ValueError):
            run_training(quick([region(0), region(1)]))

    def test_leave_out(self):
        cfg = quick([region(0), region(1), region(2)], scheme=Scheme.TRANSFER, leave_out=["r1"])
        assert [r.name for r in cfg.training_regions()] == ["r0", "r2"]
        glob = quick([region(0), region(1)], scheme=Scheme.GLOBAL, leave_out=["r1"])
        assert len(glob.training_regions()) == 2

    def test_leave_out_everything(self):
        cfg = quick([region(0)], scheme=Scheme.TRANSFER, leave_out=["r0"])
        with pytest.raises(ValueError):
            cfg.training_regions()

    @pytest.mark.parametrize("kw", [{"batch_size": 1}, {"epochs": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            quick([region()], **kw)

    def test_desk_preset(self):
        cfg = TrainConfig.desk([region()])
        assert cfg.model.d_model == 32 and cfg.epochs <= 20_000


class TestRun:
    def test_log_and_checkpoint(self, tmp_path):
        res = run_training(quick([region()], out=tmp_path / "m.npz"))
        assert [r["epoch"] for r in res.log.rows] == [0, 2, 4]
        assert res.log.columns == ["epoch", "mean_batch_score", "lr", "val_r0", "wall_clock"]
        back = TrainLog.read_csv(tmp_path / "m.csv")
        assert back.deterministic_rows() == res.log.deterministic_rows()
        policy, meta, adam = Policy.load(res.checkpoint)
        assert meta["epoch"] == 4 and meta["scheme"] == "scratch" and adam.lr == 1e-3
        assert policy.params.step_count == 4

    def test_identical_runs(self, tmp_path):
        a = run_training(quick([region()], seed=5))
        b = run_training(quick([region()], seed=5))
        assert a.log.deterministic_rows() == b.log.deterministic_rows()
        for k, v in a.policy.params.values().items():
            np.testing.assert_array_equal(v, b.policy.params[k].data)

    def test_resume_is_exact(self, tmp_path):
        straight = run_training(quick([region()], epochs=6, out=tmp_path / "s.npz"))
        run_training(quick([region()], epochs=2, out=tmp_path / "a.npz"))
        shutil.copy(tmp_path / "a.npz", tmp_path / "b.npz")
        shutil.copy(tmp_path / "a.csv", tmp_path / "b.csv")
        resumed = run_training(quick([region()], epochs=6, resume_from=tmp_path / "b.npz",
                                     out=tmp_path / "b.npz"))
        assert resumed.log.deterministic_rows() == straight.log.deterministic_rows()
        for k, v in straight.policy.params.values().items():
            np.testing.assert_array_equal(v, resumed.policy.params[k].data)
            np.testing.assert_array_equal(straight.policy.params.adam_m[k], resumed.policy.params.adam_m[k])

    def test_finetune_fresh_optimiser(self, tmp_path):
        path = train(quick([region()], out=tmp_path / "g.npz"))
        res = run_training(quick([region()], scheme="finetune", init_checkpoint=path, epochs=2))
        assert res.policy.params.step_count == 2
        assert res.log.rows[-1]["lr"] == FINE_TUNE_LR

    def test_global_validates_every_region(self):
        res = run_training(quick([region(0), region(1)], scheme="global", epochs=2))
        assert {"val_r0", "val_r1"} <= set(res.log.rows[-1])

    def test_validation_sets_fixed(self):
        a = run_training(quick([region()], epochs=2, seed=1)).validation["r0"]
        b = run_training(quick([region()], epochs=2, seed=2)).validation["r0"]
        assert a == b

    def test_train_without_out(self):
        assert train(quick([region()], epochs=1, monitor_every=0)) is None
