"""Command-line front end: ``interpret``, ``repl`` and ``validate``."""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

import structlog

from planrec.agent import finalize, new_session, process_statement, run_transcript
from planrec.discourse import Predicate, parse_transcript, read_transcript
from planrec.errors import PlanRecError, TranscriptError
from planrec.helpers import configure_logging, env_overrides
from planrec.knowledge import KnowledgeBase, configure_kb, kb_from_dict, load_kb, validate_kb
from planrec.report import compact_lines, result_document, write_document
from planrec.utils.file_operation import load_json_document

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EMPTY = 2

REPL_HELP = """\
Enter one transcript record (JSON) per line.
  :finalize  saturate, rank and print the full result document
  :reset     drop every live interpretation
  :help      show this message
  :quit      leave the REPL"""


def _add_tuning_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kb", required=True, help="knowledge base JSON file")
    parser.add_argument("--threshold-direct", type=float, default=None)
    parser.add_argument("--threshold-indirect", type=float, default=None)
    parser.add_argument("--icnorm", choices=["min", "sum"], default=None)
    parser.add_argument("--indirect", choices=["per-statement", "final"], default=None)
    parser.add_argument("--trace", action="store_true", help="include the candidate/prune log")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--log-format", choices=["console", "json"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planrec",
        description="Recognise the plans behind a stream of parsed travel-consultation statements.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    interpret = commands.add_parser("interpret", help="interpret a transcript file")
    _add_tuning_flags(interpret)
    interpret.add_argument("--transcript", required=True, help="line-delimited JSON records")
    interpret.add_argument("--output", default=None, help="write the result here instead of stdout")
    interpret.set_defaults(handler=cmd_interpret)

    repl = commands.add_parser("repl", help="interactive predicate loop on stdin")
    _add_tuning_flags(repl)
    repl.set_defaults(handler=cmd_repl)

    validate = commands.add_parser("validate", help="check a knowledge base")
    validate.add_argument("--kb", required=True)
    validate.add_argument("--log-level", default=None)
    validate.add_argument("--log-format", choices=["console", "json"], default=None)
    validate.set_defaults(handler=cmd_validate)
    return parser


def load_configured_kb(args: argparse.Namespace) -> KnowledgeBase:
    """KB file config, then environment, then command-line flags."""
    kb = load_kb(args.kb)
    flags = {
        "threshold_direct": args.threshold_direct,
        "threshold_indirect": args.threshold_indirect,
        "icnorm_mode": args.icnorm,
        "indirect_mode": args.indirect,
    }
    return configure_kb(kb, env_overrides(), flags)


def cmd_interpret(args: argparse.Namespace, stdout: TextIO, stderr: TextIO) -> int:
    kb = load_configured_kb(args)
    transcript = read_transcript(args.transcript)
    session, result = run_transcript(kb, list(transcript.predicates))
    document = result_document(session, result, transcript.reference_date, args.trace)
    write_document(document, args.output, stdout)
    for diagnostic in session.diagnostics:
        stderr.write(f"statement {diagnostic.statement}: {diagnostic.kind}: {diagnostic.message}\n")
    return EXIT_OK if result.ranked else EXIT_EMPTY


def cmd_repl(
    args: argparse.Namespace, stdout: TextIO, stderr: TextIO, stdin: Optional[TextIO] = None
) -> int:
    stdin = stdin or sys.stdin
    kb = load_configured_kb(args)
    session = new_session(kb)
    reference_date = None
    seen_record = False

    for line in stdin:
        text = line.strip()
        if not text:
            continue
        if text == ":quit":
            break
        if text == ":help":
            stdout.write(REPL_HELP + "\n")
            continue
        if text == ":reset":
            session = new_session(kb)
            reference_date, seen_record = None, False
            stdout.write("\n".join(compact_lines([])) + "\n")
            continue
        if text == ":finalize":
            document = result_document(session, finalize(session), reference_date, args.trace)
            write_document(document, None, stdout)
            continue
        if text.startswith(":"):
            stderr.write(f"unknown command {text}; try :help\n")
            continue

        try:
            transcript = parse_transcript([text])
        except TranscriptError as exc:
            stderr.write(f"error: {exc}\n")
            continue
        if transcript.reference_date is not None:
            if seen_record:
                stderr.write("error: header record must be the first record\n")
                continue
            reference_date = transcript.reference_date
        seen_record = True

        for pred in transcript.predicates:
            before = len(session.diagnostics)
            session = process_statement(session, pred)
            for diagnostic in session.diagnostics[before:]:
                stderr.write(f"{diagnostic.kind}: {diagnostic.message}\n")
        stdout.write("\n".join(compact_lines(list(session.live))) + "\n")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, stdout: TextIO, stderr: TextIO) -> int:
    raw = load_json_document(args.kb)
    kb = kb_from_dict(raw, name=Path(args.kb).stem)
    diagnostics = validate_kb(kb)
    for diagnostic in diagnostics:
        stdout.write(f"{diagnostic}\n")
    if not diagnostics:
        stdout.write(f"{args.kb}: {len(kb.operators)} operators, {len(kb.rules)} rules, ok\n")
    return EXIT_OK if not diagnostics else EXIT_ERROR


def main(
    argv: Optional[List[str]] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
    stdin: Optional[TextIO] = None,
) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_format)

    kwargs: Dict[str, Any] = {"stdin": stdin} if args.handler is cmd_repl else {}
    try:
        return args.handler(args, stdout, stderr, **kwargs)
    except (PlanRecError, OSError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
