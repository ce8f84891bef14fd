"""``robust-amc`` command line.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 invalid config.
Failures print one stderr line ``robust-amc: error kind=<kind> message=<text>``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, NoReturn, Sequence

from pydantic import ValidationError

from robust_amc.core import RunTracker
from robust_amc.errors import ConfigError, RobustAMCError
from robust_amc.writers import ConsoleWriter, RunLogWriter

from . import pipeline
from .config import AppConfig, load_config

PROG = "robust-amc"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3

_LOG = logging.getLogger(__name__)


def _error_line(kind: str, message: str) -> str:
    flat = " ".join(str(message).split())
    return f"{PROG}: error kind={kind} message={flat}\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        sys.stderr.write(_error_line("usage", message))
        raise SystemExit(EXIT_USAGE)


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Meta-adversarial training for modulation classifiers.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON config with data/zoo/attacks/meta/eval")
    common.add_argument("--work", type=Path, default=Path("work"), help="artifact directory (default: ./work)")
    common.add_argument("--progress", action="store_true", help="show progress bars")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p = sub.add_parser("gen-data", parents=[common], help="generate the clean dataset")
    p.add_argument("--seed", type=int, default=None, help="override data.seed")

    sub.add_parser("train-substitutes", parents=[common], help="train the substitute zoo")
    sub.add_parser("gen-tasks", parents=[common], help="craft perturbations and mint the task library")

    p = sub.add_parser("meta-train", parents=[common], help="offline phase of every baseline")
    p.add_argument("--baselines", type=_str_list, default=None, help="comma-separated subset of eval.baselines")

    p = sub.add_parser("adapt", parents=[common], help="online adaptation of one checkpoint to one task")
    p.add_argument("--baseline", required=True, help="checkpoint label, e.g. maml")
    p.add_argument("--task", default=None, help="meta-test task id (default: the first)")
    p.add_argument("--shots", type=int, default=2, help="frames per class")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", parents=[common], help="few-shot and 0-shot evaluation report")
    p.add_argument("--shots", type=_int_list, default=None, help="comma-separated shot counts, e.g. 0,2,10")
    p.add_argument("--repeats", type=int, default=None, help="override eval.repeats")
    p.add_argument("--out", type=Path, default=None, help="report JSON path or directory")
    p.add_argument("--parquet", action="store_true", help="also write report.parquet")

    p = sub.add_parser("report", parents=[common], help="print a stored report")
    p.add_argument("--report", type=Path, default=None, help="report JSON (default: <work>/reports/report.json)")
    return parser


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property  # type: ignore[override]
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value) -> None:
        pass


@contextmanager
def _logging(level: int) -> Iterator[None]:
    logger = logging.getLogger("robust_amc")
    handler = _StderrHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s"))
    previous = logger.level
    logger.setLevel(level)
    logger.addHandler(handler)
    try:
        yield
    finally:
        logger.removeHandler(handler)
        logger.setLevel(previous)


def _dispatch(args: argparse.Namespace, cfg: AppConfig, ws: pipeline.Workspace, tracker: RunTracker) -> str | None:
    cmd = args.command
    if cmd == "gen-data":
        return f"{pipeline.gen_data(cfg, ws, tracker, seed=args.seed, progress=args.progress)}\n"
    if cmd == "train-substitutes":
        zoo = pipeline.train_zoo(cfg, ws, tracker, progress=args.progress)
        return "".join(f"{e.model_id}\t{e.clean_accuracy:.4f}\n" for e in zoo)
    if cmd == "gen-tasks":
        lib = pipeline.gen_tasks(cfg, ws, tracker, progress=args.progress)
        return f"{len(lib.meta_train)} meta-train, {len(lib.meta_test)} meta-test tasks\n"
    if cmd == "meta-train":
        written = pipeline.train_baselines(cfg, ws, tracker, baselines=args.baselines, progress=args.progress)
        return "".join(f"{label}\t{path}\n" for label, path in written.items())
    if cmd == "adapt":
        out = pipeline.adapt(cfg, ws, tracker, label=args.baseline, task_id=args.task, shots=args.shots, seed=args.seed)
        return f"{out.path}\tSER {out.ser_before:.4f} -> {out.ser_after:.4f}\n"
    if cmd == "evaluate":
        report = pipeline.evaluate(cfg, ws, tracker, shots=args.shots, repeats=args.repeats, out=args.out, parquet=args.parquet)
        return report.summary().to_string(index=False) + "\n"
    if cmd == "report":
        return pipeline.render_report(ws, args.report)
    raise ConfigError(f"unknown command {cmd!r}")  # pragma: no cover


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    with _logging(level):
        try:
            cfg = load_config(args.config)
        except ValidationError as exc:
            sys.stderr.write(_error_line("config", f"{exc.error_count()} validation error(s): {exc}"))
            return EXIT_CONFIG
        except ConfigError as exc:
            sys.stderr.write(_error_line(exc.kind, str(exc)))
            return EXIT_CONFIG

        ws = pipeline.Workspace(args.work)
        ws.root.mkdir(parents=True, exist_ok=True)
        tracker = RunTracker().start()
        writers = [RunLogWriter(ws.run_log), ConsoleWriter()]
        try:
            text = _dispatch(args, cfg, ws, tracker)
        except ValidationError as exc:
            sys.stderr.write(_error_line("config", str(exc)))
            return EXIT_CONFIG
        except ConfigError as exc:
            sys.stderr.write(_error_line(exc.kind, str(exc)))
            return EXIT_CONFIG
        except RobustAMCError as exc:
            _LOG.debug("%s failed", args.command, exc_info=True)
            sys.stderr.write(_error_line(exc.kind, str(exc)))
            return EXIT_RUNTIME
        except OSError as exc:
            _LOG.debug("%s failed", args.command, exc_info=True)
            sys.stderr.write(_error_line("io", str(exc)))
            return EXIT_RUNTIME
        finally:
            tracker.stop()
            for w in writers:
                w.close()
    if text:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
