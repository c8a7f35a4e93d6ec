"""Command-line entry point.

    sim run <config.json> [--out DIR] [--workers N] [--no-figures]
    sim validate <config.json>
    sim list-experiments [--json]

Configurations are JSON with ``//`` and ``/* */`` comments stripped before
parsing.  Exit codes: 0 success, 2 configuration error, 3 numerical error.
Results land in ``<out>/<experiment>/`` with a manifest listing every
artifact; the default output root comes from ``CAVQUDIT_OUTPUT_DIR`` or
``./results``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, report
from .errors import SimulationError
from .experiments import REGISTRY, ConfigError, run_experiment, validate_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def strip_json_comments(text: str) -> str:
    """Remove // and /* */ comments outside of string literals."""
    out = []
    i = 0
    n = len(text)
    in_string = False
    while i < n:
        ch = text[i]
        if in_string:
            out.append(ch)
            if ch == "\\" and i + 1 < n:
                out.append(text[i + 1])
                i += 2
                continue
            if ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            i += 2
            while i + 1 < n and not (text[i] == "*" and text[i + 1] == "/"):
                i += 1
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def load_config(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        return json.loads(strip_json_comments(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _default_output_root() -> Path:
    return Path(os.environ.get("CAVQUDIT_OUTPUT_DIR", "results"))


def cmd_run(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = load_config(config_path)
    name = validate_config(config)
    out_root = Path(args.out) if args.out else _default_output_root()
    out = out_root / name
    workers = args.workers if args.workers is not None else int(config.get("workers", 1))

    started = time.time()
    artifacts = run_experiment(config, out, workers=workers)
    figures = [] if args.no_figures else report.render(name, out)
    wall = time.time() - started

    config_hash = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")
    ).hexdigest()
    manifest = {
        "experiment": name,
        "config_sha256": config_hash,
        "seed": int(config["seed"]),
        "workers": workers,
        "versions": {
            "cavqudit": __version__,
            "python": sys.version.split()[0],
            "numpy": __import__("numpy").__version__,
            "scipy": __import__("scipy").__version__,
        },
        "started_utc": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "wall_time_s": wall,
        "artifacts": [
            {"path": p.name, "sha256": _sha256(p), "kind": p.suffix.lstrip(".")}
            for p in artifacts + figures
        ],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"{name}: {len(artifacts)} tables, {len(figures)} figures -> {out}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(Path(args.config))
    name = validate_config(config)
    print(f"OK: valid configuration for experiment {name!r}")
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    if args.json:
        payload = [
            {"name": s.name, "description": s.description, "sections": list(s.sections)}
            for s in REGISTRY.values()
        ]
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    width = max(len(name) for name in REGISTRY)
    for spec in REGISTRY.values():
        sections = ", ".join(spec.sections)
        print(f"{spec.name:<{width}}  {spec.description}  [config: {sections}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Simulator for a transmon-controlled two-mode cavity qudit platform",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON configuration")
    p_run.add_argument("config", help="path to the configuration file")
    p_run.add_argument("--out", help="output root directory (default: $CAVQUDIT_OUTPUT_DIR or ./results)")
    p_run.add_argument("--workers", type=int, help="parallel workers (overrides config)")
    p_run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check a configuration without running")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_list = sub.add_parser("list-experiments", help="show the experiment registry")
    p_list.add_argument("--json", action="store_true", help="machine-readable output")
    p_list.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
