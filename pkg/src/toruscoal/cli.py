"""Command line interface: ``simulate spectrum|qq|validate|plot``.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import ConfigError, ExperimentConfig, cmd_qq, cmd_spectrum, emit_plots

_DEFAULTS = {
    "layout": "grid3x3-far",
    "replicates": 100,
    "seed": 0,
    "workers": 1,
    "out_dir": ".",
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults are None so values from --config are only overridden by
    # explicitly passed flags
    p.add_argument("--side-length", type=int, default=None,
                   help="torus side length L' (odd, >= 3)")
    p.add_argument("--layout", default=None,
                   help="grid3x3-far | grid3x3-close | same-site | explicit")
    p.add_argument("--sites", default=None,
                   help="semicolon-separated x,y pairs for layout=explicit, e.g. '0,0;3,4'")
    p.add_argument("--mechanism", default=None,
                   help="comma-separated mechanisms: kingman, bs, crw, beta:A:B[:M], "
                        "pointmass:P[:M], kingman-reference")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mutation-rate", type=float, default=None,
                   help="per-line rate in unscaled time (default pi / s_L)")
    p.add_argument("--threshold", type=float, default=None,
                   help="hybrid handoff distance (spectrum only)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", default=None,
                   help="JSON config file; explicit flags override its fields")
    p.add_argument("--events", action="store_true",
                   help="dump replicate 0 event logs as events_<mechanism>.jsonl")


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    fields: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: {exc}") from exc
        allowed = {"side_length", "layout", "sites", "mechanisms", "replicates",
                   "seed", "mutation_rate", "threshold", "out_dir", "workers", "events"}
        for key, value in file_cfg.items():
            if key not in allowed:
                raise ConfigError(f"config: unknown field {key!r}")
            fields[key] = value
    overrides = {
        "side_length": args.side_length,
        "layout": args.layout,
        "mechanisms": args.mechanism,
        "replicates": args.replicates,
        "seed": args.seed,
        "mutation_rate": args.mutation_rate,
        "threshold": args.threshold,
        "out_dir": args.out,
        "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is not None:
            fields[key] = value
    if args.sites is not None:
        try:
            fields["sites"] = tuple(
                tuple(int(c) for c in pair.split(",")) for pair in args.sites.split(";")
            )
        except ValueError as exc:
            raise ConfigError(f"sites: {exc}") from exc
        fields["layout"] = "explicit"
    if args.events:
        fields["events"] = True
    for key, value in _DEFAULTS.items():
        fields.setdefault(key, value)
    if "side_length" not in fields:
        raise ConfigError("side-length is required (flag or config file)")
    if "mechanisms" not in fields:
        raise ConfigError("mechanism is required (flag or config file)")
    if fields.get("sites") is not None:
        fields["sites"] = tuple(tuple(int(c) for c in s) for s in fields["sites"])
    return ExperimentConfig(**fields)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Spatial coalescent simulation experiments on the 2-D torus",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_spec = sub.add_parser("spectrum", help="mean allele frequency spectra")
    _add_run_flags(p_spec)

    p_qq = sub.add_parser("qq", help="q-q data of rescaled total tree lengths")
    _add_run_flags(p_qq)

    p_val = sub.add_parser("validate", help="run the acceptance/validation suites")
    p_val.add_argument("--suite", default="all",
                       choices=["exact", "statistical", "cannings", "all"])
    p_val.add_argument("--scale", type=float, default=1.0,
                       help="replicate-count multiplier; < 1 reports informational results")

    p_plot = sub.add_parser("plot", help="render spectrum/qq CSVs to SVG")
    p_plot.add_argument("--input", action="append", required=True,
                        help="CSV file (repeatable)")
    p_plot.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.cmd == "spectrum":
            path = cmd_spectrum(_build_config(args))
            print(f"wrote {path} and {path.parent / 'summary.json'}")
            return 0
        if args.cmd == "qq":
            cfg = _build_config(args)
            if cfg.threshold is not None:
                raise ConfigError("threshold: hybrid runs apply to spectrum, not qq")
            path = cmd_qq(cfg)
            print(f"wrote {path} and {path.parent / 'summary.json'}")
            return 0
        if args.cmd == "validate":
            from .validation import run_suite

            ok = run_suite(args.suite, scale=args.scale)
            return 0 if ok else 1
        if args.cmd == "plot":
            written = emit_plots(args.input, args.out)
            for w in written:
                print(f"wrote {w}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
