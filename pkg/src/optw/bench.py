"""Benchmark harness: per-region evaluation, gaps, confidence intervals, report files."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ils import IlsConfig, ils_solve
from .inference import Strategy, solve
from .instance_io import parse_benchmark, reference_scores
from .model import Policy
from .stats import bootstrap_ci, gap
from .tourist import build_validation_set

ROW_FIELDS = ["name", "best_known", "published_ils", "ils_score", "model_score", "gap_to_ils",
              "gap_to_published_ils", "gap_to_bk", "val_model_mean", "val_ils_mean", "val_gap_to_ils",
              "error"]


@dataclass
class BenchConfig:
    regions: list[Path]
    ckpt_dir: Path
    strategy: Strategy = field(default_factory=lambda: Strategy("beam", beams=128))
    seed: int = 0
    out_dir: Path | None = None
    validation_count: int = 64
    ils: IlsConfig = field(default_factory=IlsConfig)
    level: float = 0.95
    resamples: int = 10_000
    threads: int | None = None

    def workers(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        return max(1, int(os.environ.get("OPTW_THREADS", "1")))


@dataclass
class BenchRow:
    name: str
    best_known: float | None = None
    published_ils: float | None = None
    ils_score: float | None = None
    model_score: float | None = None
    gap_to_ils: float | None = None
    gap_to_published_ils: float | None = None
    gap_to_bk: float | None = None
    val_model_mean: float | None = None
    val_ils_mean: float | None = None
    val_gap_to_ils: float | None = None
    error: str | None = None
    time_s: float | None = None
    val_time_s: float | None = None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    aggregates: dict
    metadata: dict

    def to_dict(self, timing: bool = False) -> dict:
        rows = [asdict(r) for r in self.rows]
        if not timing:
            for r in rows:
                r.pop("time_s")
                r.pop("val_time_s")
        return {"metadata": self.metadata, "aggregates": self.aggregates, "rows": rows}


def _gap_or_none(base, model):
    if base is None or model is None or not base > 0:
        return None
    return round(gap(base, model), 2)


def find_checkpoint(ckpt_dir: Path, name: str) -> Path | None:
    for cand in (ckpt_dir / f"{name}.npz", ckpt_dir / "global.npz"):
        if cand.exists():
            return cand
    return None


def evaluate_region(path: Path, cfg: BenchConfig, refs: dict) -> BenchRow:
    row = BenchRow(name=Path(path).stem)
    try:
        inst = parse_benchmark(path)
        row.name = inst.name or row.name
        ref = refs.get(row.name, {})
        row.best_known, row.published_ils = ref.get("best_known"), ref.get("ils")
        ckpt = find_checkpoint(Path(cfg.ckpt_dir), row.name)
        if ckpt is None:
            raise FileNotFoundError(f"no checkpoint for {row.name} in {cfg.ckpt_dir}")
        policy, _, _ = Policy.load(ckpt)
        t0 = time.perf_counter()
        report = solve(policy, inst, cfg.strategy)
        row.time_s = time.perf_counter() - t0
        row.model_score = report.score
        row.ils_score = ils_solve(inst, cfg.ils).score
        row.gap_to_ils = _gap_or_none(row.ils_score, row.model_score)
        row.gap_to_published_ils = _gap_or_none(row.published_ils, row.model_score)
        row.gap_to_bk = _gap_or_none(row.best_known, row.model_score)
        if cfg.validation_count:
            tourists = build_validation_set(inst, cfg.validation_count, cfg.seed)
            t0 = time.perf_counter()
            model = [solve(policy, t, cfg.strategy).score for t in tourists]
            row.val_time_s = time.perf_counter() - t0
            ils = [ils_solve(t, cfg.ils).score for t in tourists]
            row.val_model_mean, row.val_ils_mean = float(np.mean(model)), float(np.mean(ils))
            row.val_gap_to_ils = _gap_or_none(row.val_ils_mean, row.val_model_mean)
    except Exception as exc:  # reported per row; the run continues
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _aggregate(values: list[float], cfg: BenchConfig) -> dict:
    if not values:
        return {"n": 0, "mean": None, "ci_lo": None, "ci_hi": None}
    lo, hi = bootstrap_ci(values, cfg.resamples, cfg.level, cfg.seed)
    return {"n": len(values), "mean": float(np.mean(values)), "ci_lo": lo, "ci_hi": hi}


def run_benchmark(cfg: BenchConfig) -> BenchReport:
    refs = reference_scores()
    paths = [Path(p) for p in cfg.regions]
    with ThreadPoolExecutor(max_workers=cfg.workers()) as pool:
        rows = list(pool.map(lambda p: evaluate_region(p, cfg, refs), paths))
    rows.sort(key=lambda r: r.name)
    ok = [r for r in rows if r.error is None]
    aggregates = {"level": cfg.level}
    for key in ("gap_to_ils", "gap_to_published_ils", "gap_to_bk", "val_gap_to_ils"):
        aggregates[key] = _aggregate([getattr(r, key) for r in ok if getattr(r, key) is not None], cfg)
    metadata = {"ckpt_dir": str(cfg.ckpt_dir), "strategy": asdict(cfg.strategy), "seed": cfg.seed,
                "validation_count": cfg.validation_count,
                "ils": asdict(cfg.ils) | {"label": "reimplementation"}}
    report = BenchReport(rows, aggregates, metadata)
    if cfg.out_dir is not None:
        write_report(report, Path(cfg.out_dir))
    return report


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}" if math.isfinite(v) else str(v)
    return str(v)


def write_report(report: BenchReport, out_dir: Path) -> None:
    """``report.csv`` and ``report.json`` are timing-free and byte-stable; timings go to ``timing.csv``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in report.rows:
            w.writerow([_cell(getattr(r, f)) for f in ROW_FIELDS])
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    with open(out_dir / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "time_s", "val_time_s"])
        for r in report.rows:
            w.writerow([r.name, _cell(r.time_s), _cell(r.val_time_s)])
    plot = out_dir / "plotdata"
    plot.mkdir(exist_ok=True)
    with open(plot / "time_vs_score.csv", "w", newline="") as fh:
        w = csv.writer(fh, delimiter=" ", lineterminator="\n")
        w.writerow(["#name", "time_s", "model_score", "ils_score"])
        for r in report.rows:
            if r.error is None:
                w.writerow([r.name, _cell(r.time_s), _cell(r.model_score), _cell(r.ils_score)])
    with open(plot / "gaps.csv", "w", newline="") as fh:
        w = csv.writer(fh, delimiter=" ", lineterminator="\n")
        w.writerow(["#name", "gap_to_ils", "gap_to_bk", "val_gap_to_ils"])
        for r in report.rows:
            if r.error is None:
                w.writerow([r.name, _cell(r.gap_to_ils), _cell(r.gap_to_bk), _cell(r.val_gap_to_ils)])


def training_curve_plotdata(log_csv: Path, baseline: float, region: str, out: Path) -> Path:
    """Epoch vs gap-to-baseline columns from a TrainLog CSV."""
    from .trainer import TrainLog

    log = TrainLog.read_csv(log_csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=" ", lineterminator="\n")
        w.writerow(["#epoch", "val_score", "gap"])
        for r in log.rows:
            v = r[f"val_{region}"]
            w.writerow([r["epoch"], _cell(v), _cell(gap(baseline, v))])
    return out
