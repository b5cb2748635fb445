"""Command line entry point: ``falcur run | sweep | validate | report``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, runner
from .data import split


def _values(text: str) -> list[str]:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="falcur", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment and write CSV results")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--plot", action="store_true", help="also render metrics.png")
    r.add_argument("--dump-clusters", action="store_true",
                   help="write per-iteration centroids and assignments under OUT/clusters/")

    s = sub.add_parser("sweep", help="repeat an experiment over parameter values")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=sorted(runner.SWEEPABLE))
    s.add_argument("--values", required=True, type=_values)
    s.add_argument("--out", required=True)
    s.add_argument("--plot", action="store_true", help="also render sweep.png")

    v = sub.add_parser("validate", help="check a config and its dataset without running")
    v.add_argument("--config", required=True)

    rep = sub.add_parser("report", help="render figures for a run or sweep directory")
    rep.add_argument("out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = runner.load_config(args.config)
            dump = f"{args.out}/clusters" if args.dump_clusters else None
            res = runner.run_experiment(cfg, dump_dir=dump)
            for path in runner.write_results(res, args.out):
                print(path)
            if args.plot:
                from . import plotting
                for path in plotting.render(args.out):
                    print(path)
        elif args.command == "sweep":
            cfg = runner.load_config(args.config)
            rows = runner.sweep(cfg, args.param, args.values, args.out)
            for row in rows:
                print(f"{args.param}={row['value']}: "
                      f"gmeans={row['gmeans_mean']} sp={row['sp_diff_mean']} "
                      f"eopp={row['eopp_diff_mean']} eodd={row['eodds_diff_mean']}")
            if args.plot:
                from . import plotting
                plotting.render(args.out)
        elif args.command == "validate":
            cfg = runner.load_config(args.config)
            ds = runner.load_dataset(cfg)
            pool = split(ds, cfg.split_spec(0))
            print(f"ok: n={ds.n} d={ds.d} positive_rate={ds.y.mean():.3f} "
                  f"protected_rate={ds.s.mean():.3f} labeled={len(pool.labeled)} "
                  f"unlabeled={len(pool.unlabeled)} test={len(pool.test)}")
            for note in ds.warnings:
                print(f"warning: {note}")
        elif args.command == "report":
            from . import plotting
            for path in plotting.render(args.out):
                print(path)
    except (OSError, ValueError) as exc:
        print(f"falcur: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
