"""Command line entry point: ``optw <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import GroupTag
from .ils import IlsConfig, ils_solve
from .inference import Strategy, solve
from .instance_io import parse_benchmark, write_benchmark_text, write_canonical
from .model import ModelConfig, Policy
from .nn import AdamConfig


BENCH_SUFFIXES = {".txt", ".json", ""}


def _region_paths(arg: str) -> list[Path]:
    p = Path(arg)
    if p.is_dir():
        return sorted(q for q in p.iterdir() if q.is_file() and q.suffix in BENCH_SUFFIXES)
    return [p]


def _strategy(args) -> Strategy:
    if args.strategy == "beam":
        return Strategy("beam", beams=args.beams)
    if args.strategy == "sample":
        return Strategy("sample", seed=args.seed)
    if args.strategy in ("active_search", "as"):
        return Strategy("active_search", beams=args.beams, epochs=args.as_epochs, seed=args.seed)
    return Strategy("greedy")


def cmd_train(args) -> int:
    from .trainer import Scheme, TrainConfig, train

    regions = [parse_benchmark(p) for p in _region_paths(args.region)]
    model = ModelConfig.desk() if args.desk else ModelConfig.full()
    adam = AdamConfig(lr=args.lr) if args.lr else AdamConfig()
    cfg = TrainConfig(regions, scheme=Scheme(args.scheme), epochs=args.epochs, batch_size=args.batch,
                      adam=adam, seed=args.seed, monitor_every=args.monitor_every,
                      checkpoint_every=args.monitor_every, leave_out=args.leave_out, model=model,
                      resume_from=args.resume, out=args.out, validation_count=args.validation)
    path = train(cfg)
    print(path)
    return 0


def cmd_tune(args) -> int:
    from .trainer import Scheme, TrainConfig, train

    regions = [parse_benchmark(args.region)]
    cfg = TrainConfig(regions, scheme=Scheme.FINETUNE, epochs=args.epochs, seed=args.seed,
                      monitor_every=args.monitor_every, checkpoint_every=args.monitor_every,
                      init_checkpoint=args.ckpt, out=args.out, validation_count=args.validation)
    print(train(cfg))
    return 0


def _emit(report, out) -> None:
    if out:
        report.write(out)
    print(report.to_json())


def cmd_infer(args) -> int:
    policy, _, _ = Policy.load(args.ckpt)
    inst = parse_benchmark(args.instance)
    _emit(solve(policy, inst, _strategy(args)), args.out)
    return 0


def cmd_ils(args) -> int:
    inst = parse_benchmark(args.instance)
    _emit(ils_solve(inst, IlsConfig(max_no_improve=args.max_no_improve, seed=args.seed)), args.out)
    return 0


def cmd_bench(args) -> int:
    from .bench import BenchConfig, run_benchmark

    cfg = BenchConfig(_region_paths(args.regions) if args.regions else [], Path(args.ckpt_dir),
                      _strategy(args), args.seed, Path(args.out_dir), args.validation,
                      level=args.level, threads=args.threads)
    report = run_benchmark(cfg)
    print(json.dumps(report.aggregates, indent=1, sort_keys=True))
    return 0


def cmd_gen(args) -> int:
    from .tourist import build_validation_set

    base = parse_benchmark(args.region)
    build_validation_set(base, args.count, args.seed, args.scheme, args.out_dir)
    print(args.out_dir)
    return 0


def cmd_synth(args) -> int:
    from .synthetic import synthetic_region

    kw = {}
    if args.horizon:
        kw["horizon"] = args.horizon
    inst = synthetic_region(args.n_poi, args.seed, GroupTag(args.group), name=args.name or "", **kw)
    out = Path(args.out)
    if out.suffix == ".json":
        write_canonical(inst, out)
    else:
        write_benchmark_text(inst, out)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="optw", description="Orienteering with time windows: "
                                 "pointer-network policy, ILS baseline and benchmark tools.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def strategy_args(p):
        p.add_argument("--strategy", default="beam", choices=["greedy", "sample", "beam", "active_search", "as"])
        p.add_argument("--beams", type=int, default=128)
        p.add_argument("--as-epochs", type=int, default=128)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train a policy with REINFORCE")
    p.add_argument("--region", required=True, help="benchmark file or directory of files")
    p.add_argument("--scheme", default="scratch", choices=["scratch", "global", "transfer"])
    p.add_argument("--leave-out", nargs="*", default=[])
    p.add_argument("--epochs", type=int, default=500_000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--monitor-every", type=int, default=1000)
    p.add_argument("--validation", type=int, default=64)
    p.add_argument("--desk", action="store_true", help="small model (d=32)")
    p.add_argument("--resume", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="fine-tune a checkpoint on one region")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--epochs", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--monitor-every", type=int, default=1000)
    p.add_argument("--validation", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("infer", help="solve one instance with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--instance", required=True)
    strategy_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ils", help="solve one instance with iterated local search")
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-no-improve", type=int, default=150)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ils)

    p = sub.add_parser("bench", help="evaluate checkpoints on a set of regions")
    p.add_argument("--ckpt-dir", required=True)
    p.add_argument("--regions", default=None)
    strategy_args(p)
    p.add_argument("--validation", type=int, default=64)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="write a validation set of generated tourists")
    p.add_argument("--region", required=True)
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", default=None, choices=["uniform", "correlated"])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("synth", help="write a synthetic region file")
    p.add_argument("--n-poi", type=int, required=True)
    p.add_argument("--group", default="Solomon", choices=[g.value for g in GroupTag])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"optw {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
