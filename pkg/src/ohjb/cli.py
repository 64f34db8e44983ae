"""``ohjb`` command line: run a mission or a seed batch and write result files.

Single run (``--seed``) writes ``series.csv`` and ``summary.json`` (plus
``trajectory.svg`` with ``--svg``) into ``--out``. A batch (``--seeds N``)
writes the same files under ``seed_<k>/`` for seeds ``0..N-1`` and an
aggregate ``batch.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .io import (ConfigError, config_to_dict, emit_svg, load_config, summary_dict,
                 write_json, write_series_csv, write_summary)
from .sim import SimConfig, aggregate, run

log = logging.getLogger("ohjb")

EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_SIM = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"ohjb: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ohjb", description=__doc__.splitlines()[0])
    p.add_argument("--algo", choices=["ahjb", "mhjb", "ohjb"], default=None,
                   help="control protocol (default: from config, else ohjb)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--seed", type=int, default=None, help="single mission seed")
    g.add_argument("--seeds", type=int, default=None, metavar="N",
                   help="batch over seeds 0..N-1")
    p.add_argument("--no-power-control", action="store_true",
                   help="BS always transmits at P_ul_o")
    p.add_argument("--config", type=Path, help="JSON config overlaying the defaults")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--svg", action="store_true", help="also write trajectory.svg")
    p.add_argument("--workers", type=int, default=1, help="processes for --seeds")
    p.add_argument("--print-defaults", action="store_true",
                   help="print the default config as JSON and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OSError(f"output directory {path} is not writable: {e}") from e
    return path


def _write_run(result, out: Path, svg: bool, source) -> None:
    write_series_csv(result, out / "series.csv")
    write_summary(result, out / "summary.json")
    if svg:
        emit_svg(result, out / "trajectory.svg", source=source)


def _run_batch(cfg: SimConfig, n: int, out: Path, svg: bool, workers: int) -> dict:
    cfgs = [replace(cfg, seed=k) for k in range(n)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, cfgs))
    else:
        results = [run(c) for c in cfgs]
    for c, res in zip(cfgs, results):
        d = _prepare_out(out / f"seed_{c.seed}")
        _write_run(res, d, svg, cfg.source)
    stats = aggregate([r.summary for r in results])
    doc = stats.to_dict()
    doc["summaries"] = [summary_dict(r) for r in sorted(results, key=lambda r: r.summary.seed)]
    doc["config"] = config_to_dict(cfg)
    write_json(doc, out / "batch.json")
    return doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else SimConfig()
    except ConfigError as e:
        print(f"ohjb: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.algo is not None or args.no_power_control:
        cfg = cfg.with_algo(args.algo or cfg.protocol.algo,
                            False if args.no_power_control else None)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    if args.print_defaults:
        print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
        return 0

    try:
        out = _prepare_out(args.out)
    except OSError as e:
        print(f"ohjb: I/O error: {e}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.seeds is not None:
            if args.seeds < 1:
                print("ohjb: error: --seeds must be >= 1", file=sys.stderr)
                return EXIT_USAGE
            doc = _run_batch(cfg, args.seeds, out, args.svg, args.workers)
            log.info("batch of %d: reach rate %.2f", doc["n"], doc["reach_rate"])
        else:
            result = run(cfg)
            _write_run(result, out, args.svg, cfg.source)
            s = result.summary
            log.info("%s seed %d: reached=%s T=%s E=%.3f", s.algo, s.seed, s.reached,
                     s.travel_time, s.final_energy)
    except OSError as e:
        print(f"ohjb: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except FloatingPointError as e:
        print(f"ohjb: simulation error: {e}", file=sys.stderr)
        return EXIT_SIM
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
