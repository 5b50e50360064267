"""Command-line entry point.

Subcommands: ``nmse-sweep``, ``complexity-sweep``, ``papr-report``,
``verify``.  A flat ``key = value`` config file may supply defaults; flags
given on the command line take precedence.

Exit codes: 0 success, 1 invariant failure, 2 configuration error.
"""

import argparse
import configparser
import logging
import sys
from pathlib import Path

from ._validation import ConfigError
from .harness import (
    DEFAULT_SIZES,
    COMPLEXITY_GRID,
    ExperimentConfig,
    emit_results,
    run_complexity_sweep,
    run_nmse_sweep,
    run_papr_report,
    run_verify,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

_KIND = {
    "nmse-sweep": "nmse-vs-snr",
    "complexity-sweep": "complexity-vs-nrx",
    "papr-report": "papr",
    "verify": "verify",
}


def _float_list(text, field):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(field, f"expected a comma-separated list of numbers, got {text!r}") from None


def _size_list(text):
    sizes = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        try:
            nt, nr = (int(v) for v in item.split("x"))
        except ValueError:
            raise ConfigError("size", f"expected NTxNR pairs like 16x16, got {item!r}") from None
        sizes.append((nt, nr))
    return tuple(sizes)


def _int(text, field):
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(field, f"expected an integer, got {text!r}") from None


def _float(text, field):
    try:
        return float(str(text).strip())
    except ValueError:
        raise ConfigError(field, f"expected a number, got {text!r}") from None


def read_config_file(path):
    """Parse a flat ``key = value`` file (``#`` comments allowed)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    return {k.replace("-", "_"): v for k, v in parser["experiment"].items()}


_CONVERTERS = {
    "seed": lambda v: _int(v, "seed"),
    "trials": lambda v: _int(v, "trials"),
    "workers": lambda v: _int(v, "workers"),
    "out": str,
    "format": str,
    "schemes": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
    "snr": lambda v: _float_list(v, "snr"),
    "size": _size_list,
    "eps_tx": lambda v: _float(v, "eps_tx"),
    "eps_rx": lambda v: _float(v, "eps_rx"),
    "p_tx": lambda v: _float(v, "p_tx"),
}
_TARGET = {"snr": "snr_db", "size": "sizes"}


def build_config(args):
    """Merge defaults, config file and flags (flags win) into an ExperimentConfig."""
    kind = _KIND[args.command]
    values = {}
    if args.config:
        for key, raw in read_config_file(args.config).items():
            if key not in _CONVERTERS:
                raise ConfigError(key, "unknown configuration key")
            values[key] = _CONVERTERS[key](raw)
    for key in _CONVERTERS:
        raw = getattr(args, key, None)
        if raw is not None:
            values[key] = _CONVERTERS[key](raw) if isinstance(raw, str) else raw
    kwargs = {_TARGET.get(k, k): v for k, v in values.items()}
    if "sizes" not in kwargs and kind == "complexity-vs-nrx":
        kwargs["sizes"] = COMPLEXITY_GRID
    elif "sizes" not in kwargs and kind == "papr":
        kwargs["sizes"] = ((16, 16),)
        kwargs.setdefault("snr_db", (0.0,))
    kwargs.setdefault("sizes", DEFAULT_SIZES)
    return ExperimentConfig(kind=kind, **kwargs).validate()


def build_parser():
    parser = argparse.ArgumentParser(prog="milacest", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("nmse-sweep", "Monte Carlo NMSE versus SNR"),
        ("complexity-sweep", "online real-operation counts versus N_R"),
        ("papr-report", "per-chain PAPR of each training design"),
        ("verify", "run the invariant suite at small sizes"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--schemes", help="comma-separated: milac-ls,digital-ls,milac-mmse,digital-mmse")
        p.add_argument("--snr", help="comma-separated SNR grid in dB")
        p.add_argument("--size", help="comma-separated NTxNR pairs, e.g. 8x8,16x16")
        p.add_argument("--workers", type=int)
        p.add_argument("--format", choices=("csv", "svg", "both"))
        p.add_argument("--eps-tx", dest="eps_tx", type=float)
        p.add_argument("--eps-rx", dest="eps_rx", type=float)
        if name == "verify":
            p.add_argument("--inject", choices=("admittance", "multiplier"),
                           help="fault injection: the matching check must fail")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.kind == "verify":
        trials = cfg.trials if args.trials is not None else 10_000
        results = run_verify(seed=cfg.seed, inject=getattr(args, "inject", None), trials=trials)
        for r in results:
            print(r.line())
        failed = sum(not r.passed for r in results)
        print(f"{len(results) - failed}/{len(results)} checks passed")
        return EXIT_FAIL if failed else EXIT_OK

    runner = {"nmse-vs-snr": run_nmse_sweep, "complexity-vs-nrx": run_complexity_sweep, "papr": run_papr_report}
    rows = runner[cfg.kind](cfg)
    stem = {"nmse-vs-snr": "nmse_vs_snr", "complexity-vs-nrx": "complexity_vs_nrx", "papr": "papr"}[cfg.kind]
    try:
        paths = emit_results(rows, cfg.out, cfg.format, stem=stem, kind=cfg.kind)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
