"""Command-line pipeline: validate, translate to PRISM/CSL, analyze.

Exit codes: 0 success, 1 domain error (parse failure, invalid model, unknown
configuration, state-space or stiffness limits), 2 I/O or usage error. The
QUANTUM_LOG environment variable sets the log level (DEBUG, INFO, ...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time as _time
from pathlib import Path
from typing import Optional, Sequence

from .compose import build_global, config_predicate
from .cslgen import emit_csl, generate
from .engine import (
    Counterexample,
    StateSpaceLimit,
    StiffModel,
    TargetUnreachable,
    build_ctmc,
    collect_counterexample,
    transient_until,
    uniformization_constant,
)
from .faulttree import build_fault_tree, emit_dot, emit_text
from .ingest import XMI_SUFFIXES, MissingProfileApplication, UnsupportedXmiVersion, load_path
from .ingest.native import NativeSyntax
from .model import InvalidModel, validate
from .prismgen import translate
from .report import AnalysisRow, render_counterexample, render_csv, render_figures, render_table
from .seqdiag import append_xmi, build_diagram, emit_plantuml
from .xmlbase import XmlSyntax

log = logging.getLogger("qum")

TRANSLATE_FORMATS = ("sm", "csl")
ANALYZE_FORMATS = ("txt", "dot", "puml", "xmi")


class UnknownConfig(Exception):
    def __init__(self, name: str, known: Sequence[str]):
        self.name = name
        super().__init__(
            f"no state configuration named {name!r} (model declares: {', '.join(known) or 'none'})"
        )


def _nonneg_time(text: str) -> list[float]:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{part!r} is not a number") from None
        if not value >= 0:
            raise argparse.ArgumentTypeError("mission time must be >= 0")
        values.append(value)
    if not values:
        raise argparse.ArgumentTypeError("empty time list")
    return values


def _format_list(allowed: Sequence[str]):
    def convert(text: str) -> list[str]:
        keys = [part.strip() for part in text.split(",") if part.strip()]
        for key in keys:
            if key not in allowed:
                raise argparse.ArgumentTypeError(
                    f"unknown format {key!r} (choose from {', '.join(allowed)})"
                )
        return keys

    return convert


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _mass_fraction(text: str) -> float:
    value = _positive_float(text)
    if value > 1:
        raise argparse.ArgumentTypeError("mass fraction must be in (0, 1]")
    return value


def _flatten(chunks: Optional[Sequence[list]]) -> list:
    return [item for chunk in chunks or [] for item in chunk]


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qum",
        description="Translate annotated architecture models to PRISM/CSL and "
                    "analyze hazard probabilities with counterexamples, fault "
                    "trees and sequence diagrams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse a model and run profile checks")
    p_validate.add_argument("--in", dest="input", required=True, metavar="FILE",
                            help="model file (.qum native, .xmi/.uml/.xml dialect)")
    p_validate.set_defaults(handler=_cmd_validate)

    p_translate = sub.add_parser("translate", help="emit model.sm and props.csl")
    p_translate.add_argument("--in", dest="input", required=True, metavar="FILE")
    p_translate.add_argument("--out", dest="out", required=True, metavar="DIR")
    p_translate.add_argument("--format", dest="formats", action="append", metavar="LIST",
                             type=_format_list(TRANSLATE_FORMATS),
                             help="comma-separated subset of: sm, csl (default both)")
    p_translate.set_defaults(handler=_cmd_translate)

    p_analyze = sub.add_parser(
        "analyze", help="transient probability, counterexample, fault tree, diagrams"
    )
    p_analyze.add_argument("--in", dest="input", required=True, metavar="FILE")
    p_analyze.add_argument("--out", dest="out", required=True, metavar="DIR")
    p_analyze.add_argument("--config", dest="config", required=True, metavar="NAME",
                           help="state configuration to analyze (the hazard)")
    p_analyze.add_argument("--time", dest="times", action="append", required=True,
                           metavar="HOURS", type=_nonneg_time,
                           help="mission time; repeat or comma-separate for a table")
    p_analyze.add_argument("--epsilon", type=_positive_float, default=1e-9,
                           help="truncation tolerance for transient analysis")
    p_analyze.add_argument("--mass-fraction", dest="mass_fraction", type=_mass_fraction,
                           default=0.9, help="stop collecting paths at this share "
                           "of the transient probability")
    p_analyze.add_argument("--path-cap", dest="path_cap", type=_positive_int, default=10_000,
                           help="maximum number of counterexample paths")
    p_analyze.add_argument("--state-cap", dest="state_cap", type=_positive_int,
                           default=1_000_000, help="abort if the state space exceeds this")
    p_analyze.add_argument("--format", dest="formats", action="append", metavar="LIST",
                           type=_format_list(ANALYZE_FORMATS),
                           help="comma-separated subset of: txt, dot, puml, xmi (default all)")
    p_analyze.set_defaults(handler=_cmd_analyze)
    return parser


def _cmd_validate(args: argparse.Namespace) -> int:
    model = validate(load_path(args.input))
    configs = ", ".join(c.name for c in model.state_configs) or "none"
    print(f"{model.name}: {len(model.components)} components, "
          f"{len(model.operations)} operations, configurations: {configs}")
    return 0


def _cmd_translate(args: argparse.Namespace) -> int:
    formats = _flatten(args.formats) or list(TRANSLATE_FORMATS)
    model = validate(load_path(args.input))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if "sm" in formats:
        target = outdir / "model.sm"
        target.write_text(translate(model))
        print(f"wrote {target}")
    if "csl" in formats:
        target = outdir / "props.csl"
        target.write_text(emit_csl(generate(model)))
        print(f"wrote {target}")
    return 0


def _time_suffix(t: float) -> str:
    # 10 -> T10, 0.1 -> T0p1, 1e+06 -> T1e06
    return "T" + f"{t:g}".replace(".", "p").replace("+", "")


def _empty_counterexample(t: float, lam: float) -> Counterexample:
    return Counterexample((), 0.0, 0.0, t, lam, "exhausted")


def _cmd_analyze(args: argparse.Namespace) -> int:
    formats = _flatten(args.formats) or list(ANALYZE_FORMATS)
    times = _flatten(args.times)
    input_path = Path(args.input)
    model = validate(load_path(input_path))
    config = model.config(args.config)
    if config is None:
        raise UnknownConfig(args.config, [c.name for c in model.state_configs])

    gm = build_global(model)
    chain = build_ctmc(gm, state_cap=args.state_cap)
    log.info("state space: %d states, %d transitions", chain.n_states, chain.n_transitions)
    phi = config_predicate(gm, config)

    original_xmi = None
    if "xmi" in formats:
        if input_path.suffix.lower() in XMI_SUFFIXES:
            original_xmi = input_path.read_bytes()
        else:
            log.info("input is not XMI; skipping sequence-diagram XMI append")

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    def write(name: str, text: str) -> None:
        target = outdir / name
        target.write_text(text)
        print(f"wrote {target}")

    rows = []
    for t in times:
        started = _time.perf_counter()
        probability = transient_until(chain, phi, t, eps=args.epsilon)
        after_transient = _time.perf_counter()
        if probability > 0.0:
            cx = collect_counterexample(
                chain, phi, t,
                mass_fraction=args.mass_fraction,
                path_cap=args.path_cap,
                eps=args.epsilon,
                transient=probability,
            )
        else:
            cx = _empty_counterexample(t, uniformization_constant(chain))
        after_collect = _time.perf_counter()
        tree = build_fault_tree(cx, gm, phi, config.name)
        after_classify = _time.perf_counter()
        log.info("T=%g: probability %.6e, %d paths, %d classes",
                 t, probability, len(cx.paths), len(tree.classes))

        suffix = _time_suffix(t)
        if "txt" in formats:
            write(f"counterexample_{suffix}.txt", render_counterexample(cx, config.name))
            write(f"faulttree_{suffix}.txt", emit_text(tree))
        if "dot" in formats:
            write(f"faulttree_{suffix}.dot", emit_dot(tree))
        diagram = None
        if "puml" in formats or original_xmi is not None:
            diagram = build_diagram(tree.classes, gm, title=f"{config.name} {suffix}")
        if "puml" in formats:
            write(f"seqdiag_{suffix}.puml", emit_plantuml(diagram))
        if original_xmi is not None:
            target = outdir / f"seqdiag_{suffix}.xmi"
            target.write_bytes(append_xmi(diagram, original_xmi))
            print(f"wrote {target}")

        rows.append(AnalysisRow(
            time_bound=t,
            probability=probability,
            path_count=len(cx.paths),
            class_count=len(tree.classes),
            transient_seconds=after_transient - started,
            collect_seconds=after_collect - after_transient,
            classify_seconds=after_classify - after_collect,
        ))

    if "txt" in formats:
        write("report.txt", render_table(rows))
        write("report.csv", render_csv(rows))
        for figure in render_figures(rows, outdir):
            print(f"wrote {figure}")
    print(render_table(rows), end="")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("QUANTUM_LOG", "WARNING").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        return args.handler(args)
    except (NativeSyntax, XmlSyntax, UnsupportedXmiVersion, MissingProfileApplication,
            InvalidModel, UnknownConfig, StateSpaceLimit, StiffModel,
            TargetUnreachable) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
