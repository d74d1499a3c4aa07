"""Command line entry point: ``solver <subcommand> --config <path>``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .experiment import Experiment, run
from .metrics import emit_table

EXIT_OK, EXIT_CONFIG, EXIT_ROWS = 0, 1, 2


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stamp(args) -> str | None:
    return None if args.no_timestamp else f"generated {_dt.datetime.now().isoformat(timespec='seconds')}"


def cmd_run(args, single: bool) -> int:
    cfg = load_config(args.config)
    if single and (len(cfg.coarse) > 1 or len(cfg.nt) > 1 or len(cfg.scheme) > 1
                   or (cfg.layers != "auto" and len(cfg.layers) > 1)):
        raise ConfigError("'run' takes a single coarse size, layer count, scheme and nt; use 'sweep' for lists")
    if args.out:
        cfg.output = args.out
    out = _out_dir(args, cfg)
    rows = run(cfg, threads=args.threads)
    path = out / ("run.csv" if single else "sweep.csv")
    emit_table(rows, path, _stamp(args))
    for r in sorted(rows, key=lambda r: r.sort_key()):
        if r.status == "ok":
            print(f"{r.label:>12} H=1/{round(1 / r.H):<3d} m={r.m} Nt={r.Nt:<5d} "
                  f"eps_a={r.eps_a:.4e} eps_0={r.eps_0:.4e} eps_inf={r.eps_inf:.4e}")
        else:
            print(f"{r.label:>12} H=1/{round(1 / r.H):<3d} m={r.m} Nt={r.Nt:<5d} {r.status}")
    print(f"table written to {path}")
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_ROWS


def cmd_build_basis(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    exp = Experiment(cfg)
    status = EXIT_OK
    for N in cfg.coarse:
        for m in exp.layers_for(N):
            try:
                ms = exp.multiscale(N, m)
            except Exception as exc:
                print(f"H=1/{N} m={m}: FAILED {exc}")
                status = EXIT_ROWS
                continue
            for k, x in enumerate(ms):
                b = x.basis
                ratios = b.decay_ratios()
                rho = float(np.nanmax(ratios)) if ratios.size and np.isfinite(ratios).any() else float("nan")
                path = out / f"decay_N{N}_m{m}_s{k}.csv"
                with open(path, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["element", "j"] + [f"outside_K{l}" for l in range(m + 1)])
                    for c in range(b.n_cols):
                        w.writerow([int(b.element[c]), int(b.index[c])] + [f"{v:.6e}" for v in b.decay[c]])
                print(f"H=1/{N} m={m} species {k}: {b.n_cols} basis functions, gap {b.gap:.4e}, "
                      f"max decay ratio {rho:.4e} -> {path}")
    return status


def cmd_selftest(args) -> int:
    from . import selftest

    results = selftest.run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_ROWS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solver", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("build-basis", "build multiscale bases and write decay reports"),
                        ("run", "run a single experiment"),
                        ("sweep", "run every combination and write a result table"),
                        ("selftest", "run the built-in oracle checks")):
        sp_ = sub.add_parser(name, help=help_)
        sp_.add_argument("--config", required=name != "selftest")
        sp_.add_argument("--out")
        sp_.add_argument("--threads", type=int, default=1)
        sp_.add_argument("--no-timestamp", action="store_true")
        sp_.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            return cmd_selftest(args)
        if args.command == "build-basis":
            return cmd_build_basis(args)
        return cmd_run(args, single=args.command == "run")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
