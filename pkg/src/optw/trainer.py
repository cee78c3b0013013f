"""REINFORCE training with a batch-mean baseline, training schemes and active search.

One epoch is one parameter update: a tourist is generated, B routes are
sampled for it, and the loss ``-mean((R_b - mean(R)) * log p(S_b))`` is
minimised with one Adam step.
"""

from __future__ import annotations

import csv
import enum
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Instance
from .inference import SolutionReport, beam_search, greedy
from .model import ModelConfig, Policy, rollout_batch
from .nn import AdamConfig, adam_step, no_grad
from .tourist import ScoreScheme, build_validation_set, generate_tourist

FINE_TUNE_LR = 1e-5
ACTIVE_SEARCH_LR = 1e-4


class Scheme(str, enum.Enum):
    SCRATCH = "scratch"
    GLOBAL = "global"
    TRANSFER = "transfer"
    FINETUNE = "finetune"


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Stream for one epoch, so a resumed run draws exactly what it would have."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0, epoch))))


@dataclass
class TrainConfig:
    regions: list[Instance]
    scheme: Scheme = Scheme.SCRATCH
    epochs: int = 500_000
    batch_size: int = 32
    adam: AdamConfig = field(default_factory=AdamConfig)
    seed: int = 0
    monitor_every: int = 1000
    checkpoint_every: int = 1000
    leave_out: Sequence[str] = ()
    model: ModelConfig = field(default_factory=ModelConfig)
    init_checkpoint: str | Path | None = None
    resume_from: str | Path | None = None
    out: str | Path | None = None
    validation_count: int = 64
    validation_seed: int = 1
    score_scheme: ScoreScheme | None = None
    dtype: str = "float32"

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2 for the mean baseline")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not self.regions:
            raise ValueError("at least one region is required")
        if self.scheme is Scheme.FINETUNE:
            if self.init_checkpoint is None and self.resume_from is None:
                raise ValueError("fine-tuning needs init_checkpoint")
            self.adam = AdamConfig.fixed(FINE_TUNE_LR)

    @classmethod
    def desk(cls, regions, **kw) -> "TrainConfig":
        kw.setdefault("model", ModelConfig.desk())
        kw.setdefault("epochs", 5000)
        kw.setdefault("monitor_every", 500)
        kw.setdefault("checkpoint_every", 0)
        return cls(list(regions), **kw)

    def training_regions(self) -> list[Instance]:
        excluded = set(self.leave_out) if self.scheme is Scheme.TRANSFER else set()
        pool = [r for r in self.regions if r.name not in excluded]
        if not pool:
            raise ValueError("leave-out list removes every region")
        return pool


@dataclass
class TrainLog:
    """Append-only monitoring rows; the epoch-0 row has no batch score."""

    regions: list[str]
    rows: list[dict] = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        return ["epoch", "mean_batch_score", "lr"] + [f"val_{r}" for r in self.regions] + ["wall_clock"]

    def append(self, epoch: int, mean_batch_score: float | None, lr: float, validation: dict[str, float],
               wall_clock: float) -> None:
        row = {"epoch": epoch, "mean_batch_score": mean_batch_score, "lr": lr,
               **{f"val_{k}": v for k, v in validation.items()}, "wall_clock": wall_clock}
        self.rows.append(row)

    def deterministic_rows(self) -> list[dict]:
        return [{k: v for k, v in r.items() if k != "wall_clock"} for r in self.rows]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.columns)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        return path

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrainLog":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            regions = [c[4:] for c in reader.fieldnames if c.startswith("val_")]
            rows = [{k: (int(v) if k == "epoch" else float(v) if v != "" else None) for k, v in r.items()}
                    for r in reader]
        return cls(regions, rows)


def advantages(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    return scores - scores.mean()


def reinforce_step(policy: Policy, inst: Instance, rng: np.random.Generator, batch_size: int,
                   adam: AdamConfig) -> float:
    """B sampled rollouts of ``inst`` and one Adam step. Returns the mean score."""
    params = policy.params
    try:
        res = rollout_batch(inst, params, policy.cfg, batch_size, "sample", rng)
    except Exception as exc:
        raise RuntimeError(f"rollout failed on {inst.name or 'instance'}: {exc}") from exc
    adv = advantages(res.scores).astype(params.dtype)
    params.zero_grad()
    loss = -(res.log_prob * adv).mean()
    if loss.requires_grad:
        loss.backward()
    adam_step(params, params.grads(), adam)
    return float(res.scores.mean())


def reinforce_epoch(policy: Policy, regions: Instance | Sequence[Instance], rng: np.random.Generator,
                    batch_size: int = 32, adam: AdamConfig | None = None,
                    score_scheme: ScoreScheme | None = None) -> float:
    """Generate one tourist (random region when several are given) and train on it."""
    pool = [regions] if isinstance(regions, Instance) else list(regions)
    base = pool[int(rng.integers(len(pool)))] if len(pool) > 1 else pool[0]
    tourist = generate_tourist(rng, base, score_scheme, name=f"{base.name}-train")
    return reinforce_step(policy, tourist, rng, batch_size, adam or AdamConfig())


def mean_greedy_score(policy: Policy, tourists: Sequence[Instance]) -> float:
    return float(np.mean([greedy(policy, t).score for t in tourists]))


@dataclass
class TrainResult:
    policy: Policy
    log: TrainLog
    checkpoint: Path | None
    validation: dict[str, list[Instance]]


def _initial_policy(cfg: TrainConfig) -> tuple[Policy, int]:
    dtype = np.dtype(cfg.dtype)
    if cfg.resume_from is not None:
        policy, meta, _ = Policy.load(cfg.resume_from)
        return policy, int(meta.get("epoch", policy.params.step_count))
    if cfg.scheme is Scheme.FINETUNE:
        policy, _, _ = Policy.load(cfg.init_checkpoint)
        store = policy.params.astype(dtype)
        # fresh optimiser state for the new phase
        for k in store.adam_m:
            store.adam_m[k][...] = 0
            store.adam_v[k][...] = 0
        store.step_count = 0
        return Policy(store, policy.cfg), 0
    return Policy.create(cfg.model, seed=cfg.seed, dtype=dtype), 0


def run_training(cfg: TrainConfig) -> TrainResult:
    if cfg.scheme in (Scheme.SCRATCH, Scheme.FINETUNE) and len(cfg.regions) != 1:
        raise ValueError(f"scheme {cfg.scheme.value} trains on exactly one region")
    pool = cfg.training_regions()
    policy, start_epoch = _initial_policy(cfg)
    validation = {r.name: build_validation_set(r, cfg.validation_count, cfg.validation_seed,
                                               cfg.score_scheme) for r in cfg.regions}
    log = TrainLog([r.name for r in cfg.regions])
    out = Path(cfg.out) if cfg.out is not None else None
    log_path = out.with_suffix(".csv") if out is not None else None
    if cfg.resume_from is not None and log_path is not None and log_path.exists():
        log = TrainLog.read_csv(log_path)
    t0 = time.perf_counter()

    def monitor(epoch: int, batch_scores: list[float]) -> None:
        vals = {k: mean_greedy_score(policy, v) for k, v in validation.items()}
        mean_batch = float(np.mean(batch_scores)) if batch_scores else None
        log.append(epoch, mean_batch, cfg.adam.lr_at(policy.params.step_count), vals,
                   time.perf_counter() - t0)

    def checkpoint(epoch: int) -> None:
        if out is not None:
            policy.save(out, cfg.adam, {"epoch": epoch, "scheme": cfg.scheme.value, "seed": cfg.seed,
                                        "regions": [r.name for r in pool]})
            log.write_csv(log_path)

    if start_epoch == 0 and cfg.monitor_every:
        monitor(0, [])
    window: list[float] = []
    for epoch in range(start_epoch, cfg.epochs):
        rng = epoch_rng(cfg.seed, epoch)
        window.append(reinforce_epoch(policy, pool, rng, cfg.batch_size, cfg.adam, cfg.score_scheme))
        done = epoch + 1
        if cfg.monitor_every and (done % cfg.monitor_every == 0 or done == cfg.epochs):
            monitor(done, window)
            window = []
        if cfg.checkpoint_every and done % cfg.checkpoint_every == 0:
            checkpoint(done)
    policy.params.assert_finite()
    checkpoint(cfg.epochs)
    return TrainResult(policy, log, out, validation)


def train(cfg: TrainConfig) -> Path | None:
    """Run training and return the checkpoint path (``None`` when ``cfg.out`` is unset)."""
    return run_training(cfg).checkpoint


def active_search(policy: Policy, inst: Instance, epochs: int = 128, n_b: int = 128, seed: int = 0,
                  batch_size: int = 32, adam: AdamConfig | None = None) -> tuple[Policy, SolutionReport]:
    """Policy-gradient updates on one fixed instance, then beam search.

    The policy passed in is copied; its parameters and optimiser state are
    left untouched.
    """
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    tuned = policy.copy()
    store = tuned.params
    for k in store.adam_m:
        store.adam_m[k][...] = 0
        store.adam_v[k][...] = 0
    store.step_count = 0
    adam = adam or AdamConfig.fixed(ACTIVE_SEARCH_LR)
    for epoch in range(epochs):
        reinforce_step(tuned, inst, epoch_rng(seed, epoch), batch_size, adam)
    with no_grad():
        report = beam_search(tuned, inst, n_b)
    return tuned, report
