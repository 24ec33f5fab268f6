"""Command-line front end.

Exit codes: 0 success, 1 compute or contract error, 2 I/O or config error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import SECTIONS, load_config
from .errors import ConfigError, UvsdmaError
from .harness import run_experiment

EXIT_OK, EXIT_COMPUTE, EXIT_IO = 0, 1, 2

COMMANDS = {
    "gaussfit": "check the Gaussian surrogate of a weighted count sum",
    "estimate": "pilot-based LS channel estimation study (MSE/MAE/SER)",
    "pilot-search": "rank balanced pilot patterns by closed-form MSE",
    "detect2": "two-user separation: optimal, uniform and ML detectors",
    "multiuser": "OOK detection under interference: ML vs successive elimination",
    "timing": "wall-clock ratio of ML to successive elimination",
}


@dataclass
class CliInvocation:
    command: str
    config_path: str
    out_dir: str | None
    fmt: str
    config: dict


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uvsdma", description="Photon-counting multiuser estimation and detection experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND", parser_class=_Parser)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("-c", "--config", required=True, help="JSON config file")
        p.add_argument("-o", "--out", help="directory for report.json and CSV tables")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="override the worker count")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="standard output format")
    v = sub.add_parser("validate", help="check a config against the schema without running it")
    v.add_argument("path", nargs="?", help="JSON config file")
    v.add_argument("-c", "--config", dest="config_opt", help="JSON config file")
    return parser


def parse_and_validate(argv=None) -> CliInvocation:
    """Parse arguments and load the config.  Raises :class:`ConfigError`."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        path = args.path or args.config_opt
        if not path:
            raise ConfigError("validate needs a config path")
        return CliInvocation("validate", path, None, "csv", load_config(path))

    cfg = load_config(args.config)
    if cfg["kind"] != args.command:
        raise ConfigError(f"config is for {cfg['kind']!r}, not {args.command!r}", "$.kind")
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0", "--seed")
        cfg["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1", "--threads")
        cfg["threads"] = args.threads
    return CliInvocation(args.command, args.config, args.out, args.format, cfg)


def _prepare_out(path: str) -> tuple[Path, bool]:
    out = Path(path)
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return out, created


def _write_outputs(out: Path, files: dict) -> None:
    written = []
    try:
        for name, text in files.items():
            target = out / name
            target.write_text(text, encoding="utf-8")
            written.append(target)
    except OSError:
        for f in written:
            f.unlink(missing_ok=True)
        raise


def main(argv=None) -> int:
    try:
        inv = parse_and_validate(argv)
    except ConfigError as exc:
        print(f"uvsdma: config error: {exc}", file=sys.stderr)
        return EXIT_IO
    if inv.command == "validate":
        print(f"ok: {inv.config_path} (kind {inv.config['kind']}, section {SECTIONS[inv.config['kind']]})")
        return EXIT_OK

    out, created = None, False
    if inv.out_dir:
        try:
            out, created = _prepare_out(inv.out_dir)
        except OSError as exc:
            print(f"uvsdma: cannot use output directory: {exc}", file=sys.stderr)
            return EXIT_IO
    try:
        report = run_experiment(inv.config)
    except UvsdmaError as exc:
        print(f"uvsdma: {type(exc).__name__}: {exc}", file=sys.stderr)
        if created:
            try:
                out.rmdir()
            except OSError:
                pass
        return EXIT_COMPUTE
    if out is not None:
        try:
            _write_outputs(out, report.files())
        except OSError as exc:
            print(f"uvsdma: cannot write outputs: {exc}", file=sys.stderr)
            return EXIT_IO
    sys.stdout.write(report.to_json() if inv.fmt == "json" else report.primary_csv())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
