"""``viscolab <preset|run> [--config path] [--out dir] [--threads n]``."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, parse_config
from .kinematics import RegimeError
from .presets import ALIASES, OUT_ENV, PRESETS, default_config, resolve, run_preset

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_REGIME = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    names = sorted(PRESETS) + sorted(ALIASES)
    p = argparse.ArgumentParser(
        prog="viscolab",
        description="Run a named experiment preset, or 'run' a configuration file.",
        epilog=f"presets: {', '.join(names)}. Output root defaults to ${OUT_ENV} "
               "or ./viscolab-runs.")
    p.add_argument("target", help="preset name, 'run' or 'list'")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out", help="output root directory")
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    return p


def _load(args):
    if args.target == "run":
        if not args.config:
            raise ConfigError(["run: --config is required"])
        cfg = parse_config(args.config)
        return resolve(cfg.preset), cfg
    try:
        name = resolve(args.target)
    except KeyError:
        raise ConfigError([f"unknown preset {args.target!r}"]) from None
    if args.config:
        from .config import build_config, load_document
        doc = load_document(args.config)
        exp = doc.get("experiment")
        if isinstance(exp, dict) and exp.get("preset") not in (None, name, args.target):
            raise ConfigError([f"experiment.preset: {exp['preset']!r} does not match "
                               f"{args.target!r}"])
        doc.setdefault("experiment", {})
        if isinstance(doc["experiment"], dict):
            doc["experiment"]["preset"] = name
        return name, build_config(doc, PRESETS[name].defaults)
    return name, default_config(name)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.target == "list":
        for name in sorted(PRESETS):
            print(f"{name:18s} {PRESETS[name].description}")
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        name, cfg = _load(args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_preset(name, args.out, cfg, args.threads)
    except RegimeError as exc:
        print(f"regime abort: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except OSError as exc:
        print(f"error: cannot write output ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    for c in manifest.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {name}:{c.name} value={c.value!r} "
              f"({c.threshold})")
    return EXIT_OK if manifest.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
