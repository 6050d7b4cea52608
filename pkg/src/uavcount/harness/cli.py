"""Command-line entry point: ``uavcount <subcommand> --config FILE [--seed] [--out] [--trials]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import emit_paper_presets, load_spec
from .experiments import ConfigError, build_dataset, run
from ..features import write_dataset_csv

SUBCOMMAND_KINDS = {
    "detect-sweep": ("pd_vs_snr", "pd_vs_N"),
    "roc": ("roc",),
    "classify-sweep": ("acc_vs_snr", "acc_vs_M"),
    "criteria-sweep": ("criteria_vs_M", "criteria_vs_snr"),
    "pipeline": ("pipeline",),
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavcount", description=__doc__)
    p.add_argument("--emit-paper-presets", metavar="DIR", help="write one config per published figure and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    for name in (*SUBCOMMAND_KINDS, "dataset"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", type=Path, default=Path("results"))
        s.add_argument("--trials", type=int)
        s.add_argument("--workers", type=int)
    return p


def _dataset(args) -> Path:
    import yaml

    cfg = yaml.safe_load(args.config.read_text()) or {}
    allowed = {"K_max", "per_class", "snr_db", "M", "N", "seed", "name"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown dataset config keys: {sorted(unknown)}")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    per_class = args.trials if args.trials is not None else int(cfg.get("per_class", 10))
    X, y = build_dataset(int(cfg.get("K_max", 3)), per_class, float(cfg.get("snr_db", -20.0)),
                         int(cfg.get("M", 64)), int(cfg.get("N", 200)), seed,
                         workers=args.workers or 1)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{cfg.get('name', 'dataset')}.csv"
    write_dataset_csv(path, X, y)
    return path


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.emit_paper_presets:
        for path in emit_paper_presets(args.emit_paper_presets):
            print(path)
        return 0
    if args.command is None:
        _parser().print_usage(sys.stderr)
        return 2
    try:
        if args.command == "dataset":
            print(_dataset(args))
            return 0
        spec = load_spec(args.config, seed=args.seed, trials=args.trials, workers=args.workers)
        if spec.kind not in SUBCOMMAND_KINDS[args.command]:
            raise ConfigError(f"'{args.command}' cannot run experiment kind {spec.kind!r}")
        table = run(spec)
    except (ConfigError, OSError) as exc:
        print(f"uavcount: error: {exc}", file=sys.stderr)
        return 2
    csv_path, meta_path = table.write(args.out)
    print(csv_path)
    print(meta_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
