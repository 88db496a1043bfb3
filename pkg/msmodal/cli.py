"""Command line entry point.

Every subcommand writes its results to stdout, one record per result, as
text or (``--format json-lines``) as one JSON object per line. Diagnostics go
to stderr. Exit codes: 0 success, 1 a semantic negative (false formula,
rejected proof, counterexample), 2 usage, input or I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import NamedTuple, Union

from ._version import __version__
from .library import theorem_library
from .parsing import format_signature, parse_formula, parse_signature, print_formula
from .proof import Theory, check_proof, format_proof, parse_proof
from .schemes import SYSTEMS
from .semantics import falsifying_point, parse_model, satisfies
from .smc import (
    DEFAULT_FUEL,
    SMC_GENERATORS,
    ConcreteConfig,
    build_pprime_proof,
    encode_program,
    parse_memory,
    program_signature,
    smc_run,
)
from .soundness import soundness_sweep, sweep_signature, system_schemes
from .syntax import app
from .translation import (
    correspondence_sweep,
    export_fo,
    fresh_pivot,
    standard_translate,
)
from .utils import MsmodalError, OutOfFuelError, StuckError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2
LIBRARY_NAMES = ("BRIDGE", "NOM_Z", "P_PRIME", "SYM", "SYM_AS_PRINTED")


class RunConfig(NamedTuple):
    """Settings shared by the subcommands.

    Parameters
    ----------
    seed : int
        Seed of every randomized routine.
    size_bounds : int or dict
        Maximum worlds per sort of random models.
    trials : int
    fuel : int
        Step limit of the SMC machine.
    output_format : str
        ``"text"`` or ``"json-lines"``.
    density : float
        Relation and valuation density of random models.
    jobs : int
        Worker processes for soundness sweeps.
    """

    seed: int = 0
    size_bounds: Union[int, dict] = 3
    trials: int = 1000
    fuel: int = DEFAULT_FUEL
    output_format: str = "text"
    density: float = 0.5
    jobs: int = 1

    @classmethod
    def from_args(cls, args):
        fields = {k: getattr(args, k) for k in cls._fields if hasattr(args, k)}
        return cls(**fields)


def parse_size_bounds(text):
    """``"3"`` -> 3; ``"s=2,t=4"`` -> ``{"s": 2, "t": 4}``."""
    if "=" not in text:
        return int(text)
    out = {}
    for item in text.split(","):
        sort, _, n = item.partition("=")
        out[sort.strip()] = int(n)
    return out


def version_text():
    """Version line followed by the scheme and rule table of each system."""
    lines = [f"msmodal {__version__}"]
    for name, system in SYSTEMS.items():
        lines.append(f"{name}:")
        lines.append("  schemes: " + " ".join(system.schemes))
        lines.append("  rules:   " + " ".join(system.rules))
    return "\n".join(lines)


class _Output:
    def __init__(self, cfg, command):
        self.json = cfg.output_format == "json-lines"
        self.command = command

    def emit(self, text, **record):
        if self.json:
            record = {"command": self.command, **record}
            print(json.dumps(record, sort_keys=True), file=sys.stdout)
        elif text is not None:
            print(text, file=sys.stdout)


def _read(path):
    return Path(path).read_text(encoding="utf-8")


def _load_signature(path):
    return parse_signature(_read(path))


def _cmd_check(args, cfg, out):
    sig, tab = _load_signature(args.sig)
    phi = parse_formula(args.formula, sig, tab, sort=args.sort)
    text = print_formula(phi)
    out.emit(f"{text} : {phi.sort}", formula=text, sort=phi.sort)
    return EXIT_OK


def _cmd_mc(args, cfg, out):
    sig, tab = _load_signature(args.sig)
    model = parse_model(_read(args.model), sig)
    model.check_symbols(tab)
    phi = parse_formula(args.formula, sig, tab)
    if args.world is not None and not args.all_worlds:
        value = satisfies(model, None, args.world, phi)
        out.emit(str(value).lower(), world=args.world, value=value)
        return EXIT_OK if value else EXIT_NEGATIVE
    point = falsifying_point(model, phi)
    if point is None:
        out.emit("valid", valid=True)
        return EXIT_OK
    g, w = point
    free = {x: g[x] for x in sorted(g)}
    text = f"false at {w}" + (f" under {free}" if free else "")
    out.emit(text, valid=False, world=w, assignment=free)
    return EXIT_NEGATIVE


def _theory(name, sig, tab):
    if name is None:
        return None
    return Theory(name, sig, tab, SMC_GENERATORS)


def _cmd_prove(args, cfg, out):
    sig, tab = _load_signature(args.sig)
    theory = _theory(args.theory, sig, tab)
    proof = parse_proof(_read(args.proof), sig, tab, theory)
    hyps = [parse_formula(h, sig, tab) for h in args.hyp]
    verdict = check_proof(args.system, sig, tab, proof, hyps, theory)
    if verdict.ok:
        out.emit(f"OK: {len(proof)} lines checked in {args.system}", ok=True)
        return EXIT_OK
    text = f"line {verdict.line}: {verdict.reason}: {verdict.message}"
    if verdict.detail:
        text += f" ({verdict.detail})"
    out.emit(
        text, ok=False, line=verdict.line, reason=verdict.reason, detail=verdict.detail
    )
    return EXIT_NEGATIVE


def _cmd_translate(args, cfg, out):
    sig, tab = _load_signature(args.sig)
    phi = parse_formula(args.formula, sig, tab)
    pivot = args.pivot or fresh_pivot(phi)
    text = export_fo(standard_translate(phi, pivot))
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    out.emit(text, fo=text, pivot=pivot)
    return EXIT_OK


def _cmd_correspond(args, cfg, out):
    sig, tab = _load_signature(args.sig)
    model = parse_model(_read(args.model), sig) if args.model else None
    phi = parse_formula(args.formula, sig, tab) if args.formula else None
    failures = correspondence_sweep(
        sig,
        tab,
        trials=cfg.trials,
        seed=cfg.seed,
        depth=args.depth,
        size_bounds=cfg.size_bounds,
        density=cfg.density,
        model=model,
        formula=phi,
    )
    for f in failures:
        out.emit(
            f"trial {f.trial}: disagreement on {print_formula(f.formula)} at {f.world}",
            trial=f.trial,
            formula=print_formula(f.formula),
            world=f.world,
        )
    out.emit(
        f"{cfg.trials} trials, {len(failures)} disagreements",
        trials=cfg.trials,
        failures=len(failures),
    )
    return EXIT_NEGATIVE if failures else EXIT_OK


def _cmd_soundness(args, cfg, out):
    if args.sig:
        sig, tab = _load_signature(args.sig)
    else:
        sig, tab = sweep_signature()
    schemes = args.scheme or system_schemes(args.system)
    found = False
    for scheme in schemes:
        report = soundness_sweep(
            scheme,
            trials=cfg.trials,
            seed=cfg.seed,
            size_bounds=cfg.size_bounds,
            depth=args.depth,
            density=cfg.density,
            jobs=cfg.jobs,
            sig=sig,
            tab=tab,
        )
        found = found or not report.ok
        first = report.counterexamples[0] if report.counterexamples else None
        text = (
            f"{scheme}: {report.trials} trials, {report.skipped} skipped, "
            f"{len(report.counterexamples)} counterexamples"
        )
        record = dict(
            scheme=scheme,
            trials=report.trials,
            skipped=report.skipped,
            counterexamples=len(report.counterexamples),
        )
        if first is not None:
            shown = print_formula(first.formula)
            text += f"\n  trial {first.trial}: {shown} fails at {first.world}"
            record.update(first_trial=first.trial, formula=shown, world=first.world)
        out.emit(text, **record)
    return EXIT_NEGATIVE if found else EXIT_OK


def _cmd_library(args, cfg, out):
    lib = theorem_library()
    entry = lib[args.name]
    text = format_proof(entry.proof)
    if args.proof_out:
        Path(args.proof_out).write_text(text, encoding="utf-8")
    if args.sig_out:
        sig_text = format_signature(entry.sig, entry.tab)
        Path(args.sig_out).write_text(sig_text, encoding="utf-8")
    out.emit(
        text.rstrip("\n"),
        name=entry.name,
        system=entry.system,
        lines=len(entry.proof),
        proof=text,
    )
    return EXIT_OK


def _cmd_smc_run(args, cfg, out):
    text = _read(args.program)
    bundle = program_signature(text)
    stmt = encode_program(text, bundle)
    start = ConcreteConfig((), parse_memory(args.mem))
    try:
        final = smc_run(start, app(bundle.sig, "c_s", (stmt,)), cfg.fuel)
    except (StuckError, OutOfFuelError) as e:
        logger.error("%s", e)
        return EXIT_NEGATIVE
    memory = dict(sorted(final.memory.items()))
    out.emit(str(final), stack=list(final.stack), memory=memory)
    return EXIT_OK


def _cmd_smc_verify(args, cfg, out):
    entry = build_pprime_proof()
    verdict = entry.check()
    labels = {i: label for label, i in entry.marks.items()}
    for line in entry.proof:
        if verdict.ok or line.index < verdict.line:
            status = "ok"
        elif line.index == verdict.line:
            status = verdict.reason
        else:
            status = "unchecked"
        label = labels.get(line.index, "")
        kind = type(line.justification).__name__
        out.emit(
            f"{line.index:4d} {label:5s} {kind:12s} {status}",
            line=line.index,
            label=label,
            justification=kind,
            status=status,
        )
    summary = "P' proof checked" if verdict.ok else f"rejected at line {verdict.line}"
    out.emit(summary, ok=verdict.ok)
    return EXIT_OK if verdict.ok else EXIT_NEGATIVE


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format",
        dest="output_format",
        choices=("text", "json-lines"),
        default="text",
        help="output format (default: text)",
    )
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="more logging on stderr"
    )
    return common


def _random_options(p, trials=1000):
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument(
        "--size-bounds",
        dest="size_bounds",
        type=parse_size_bounds,
        default=3,
        help="max worlds per sort: N or sort=N,...",
    )
    p.add_argument("--density", type=float, default=0.5)


def build_parser():
    """The argument parser of the ``msmodal`` command."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="msmodal",
        description="Many-sorted hybrid modal logic: checking, proofs, translation.",
    )
    parser.add_argument("--version", action="version", version=version_text())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="parse and sort-check a formula")
    p.add_argument("--sig", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--sort")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("mc", parents=[common], help="model-check a formula")
    p.add_argument("--sig", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--world")
    p.add_argument("--all-worlds", action="store_true")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("prove", parents=[common], help="check a proof file")
    p.add_argument("--system", required=True, choices=sorted(SYSTEMS))
    p.add_argument("--sig", required=True)
    p.add_argument("--proof", required=True)
    p.add_argument("--theory", choices=("smc",))
    p.add_argument("--hyp", action="append", default=[])
    p.set_defaults(func=_cmd_prove)

    p = sub.add_parser("translate", parents=[common], help="standard translation")
    p.add_argument("--sig", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument(
        "--pivot", help="pivot variable (default: x, or a fresh name if x is used)"
    )
    p.add_argument("--out")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser(
        "correspond", parents=[common], help="compare modal and first-order truth"
    )
    p.add_argument("--sig", required=True)
    p.add_argument("--model")
    p.add_argument("--formula")
    p.add_argument("--depth", type=int, default=4)
    _random_options(p)
    p.set_defaults(func=_cmd_correspond)

    p = sub.add_parser(
        "soundness", parents=[common], help="randomized soundness sweep of schemes"
    )
    p.add_argument("--system", default="H_AT_FORALL", choices=sorted(SYSTEMS))
    p.add_argument("--scheme", action="append", help="sweep only these schemes")
    p.add_argument("--sig", help="signature (default: built-in three-sorted one)")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    _random_options(p)
    p.set_defaults(func=_cmd_soundness)

    p = sub.add_parser("library", parents=[common], help="emit a library proof")
    p.add_argument("name", choices=LIBRARY_NAMES)
    p.add_argument("--proof-out")
    p.add_argument("--sig-out")
    p.set_defaults(func=_cmd_library)

    p = sub.add_parser("smc", help="SMC machine and program proofs")
    smc = p.add_subparsers(dest="smc_command", required=True)
    q = smc.add_parser("run", parents=[common], help="run a program")
    q.add_argument("--program", required=True)
    q.add_argument("--mem", default="")
    q.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    q.set_defaults(func=_cmd_smc_run)
    q = smc.add_parser("verify", parents=[common], help="replay the P' proof")
    q.add_argument("--pprime", action="store_true", required=True)
    q.set_defaults(func=_cmd_smc_verify)
    return parser


def main(argv=None):
    """Run the command line and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    cfg = RunConfig.from_args(args)
    command = args.command if args.command != "smc" else "smc " + args.smc_command
    out = _Output(cfg, command)
    try:
        return args.func(args, cfg, out)
    except (MsmodalError, OSError, ValueError, KeyError) as e:
        print(f"msmodal {args.command}: error: {e}", file=sys.stderr)
        return EXIT_ERROR
