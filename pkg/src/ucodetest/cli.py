"""Command-line front end.

Exit codes: 0 = H0 accepted (or the run completed), 2 = H0 rejected
(``montecarlo``: the level bound was violated), 1 = usage or data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .codec import parse_codec
from .harness import DEFAULT_TABLE1_CODECS, Report, monte_carlo, run_table1_experiment
from .hypothesis import identity_test, independence_test
from .model import Alphabet, FiniteMemorySource, SampleSequence, bernoulli, binary_markov, build_markov_source, load_source
from .prng import ExtractionMode, LcgSpec, lcg_octets, parse_int, uniform_bits

EXIT_ACCEPT, EXIT_ERROR, EXIT_REJECT = 0, 1, 2
CODEC_ENV = "UCODETEST_CODEC"
FALLBACK_CODEC = "ctw:d=4"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def default_codec() -> str:
    return os.environ.get(CODEC_ENV, FALLBACK_CODEC)


def read_input(path: str, fmt: str) -> SampleSequence:
    raw = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    data = np.frombuffer(raw, dtype=np.uint8)
    if fmt == "bits":
        return SampleSequence(Alphabet(2), np.unpackbits(data))
    return SampleSequence(Alphabet(256), data)


def resolve_source(text: str, alphabet_size: int) -> FiniteMemorySource:
    """``uniform-iid``, ``bernoulli:P0``, ``markov:STAY`` or a JSON model file."""
    name, _, arg = text.partition(":")
    if name == "uniform-iid":
        src = build_markov_source(f"uniform-iid:{arg or alphabet_size}")
    elif name == "bernoulli":
        src = bernoulli(float(arg))
    elif name == "markov":
        src = binary_markov(float(arg))
    elif Path(text).is_file():
        src = load_source(text)
    else:
        raise UsageError(f"unknown model {text!r} (not a builtin and no such file)")
    if src.alphabet.size != alphabet_size:
        raise UsageError(f"model alphabet size {src.alphabet.size} does not match input ({alphabet_size})")
    return src


def _alphabet_for(fmt: str) -> int:
    return 2 if fmt == "bits" else 256


def _emit(reports: list[Report], style: str):
    for r in reports:
        print(r.to_json() if style == "json" else r.to_text())
        if style == "text" and len(reports) > 1:
            print()


def _cmd_test(args) -> int:
    x = read_input(args.input, args.format)
    codec = parse_codec(args.codec or default_codec(), x.alphabet)
    start = time.perf_counter()
    if args.command == "identity":
        pi = resolve_source(args.model, x.alphabet.size)
        out = identity_test(x, pi, codec, args.alpha)
    else:
        out = independence_test(x, args.m, codec, args.alpha)
    report = Report.from_outcome(out, x, wall_time=time.perf_counter() - start)
    _emit([report], args.report)
    return EXIT_REJECT if out.rejected else EXIT_ACCEPT


def _cmd_generate(args) -> int:
    if args.bits % 8:
        raise UsageError("--bits must be a multiple of 8")
    if args.lcg:
        parts = args.lcg.split(",")
        if len(parts) != 4:
            raise UsageError("--lcg expects M,A,C,X0")
        spec = LcgSpec(*(parse_int(p) for p in parts))
        payload = lcg_octets(spec, args.bits // 8, args.mode).symbols.astype(np.uint8).tobytes()
    else:
        payload = np.packbits(uniform_bits(args.seed, args.bits).symbols).tobytes()
    if args.output == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    else:
        Path(args.output).write_bytes(payload)
    return EXIT_ACCEPT


def _cmd_montecarlo(args) -> int:
    size = _alphabet_for(args.format)
    null = resolve_source(args.model, size)
    alt = resolve_source(args.alternative, size) if args.alternative else None
    codec = parse_codec(args.codec or default_codec(), Alphabet(size))
    summary = monte_carlo(
        args.test, null, codec, args.alpha, args.t, args.trials, args.seed, m=args.m, alternative=alt, workers=args.workers
    )
    if args.report == "json":
        print(summary.to_json())
    else:
        for k, v in json.loads(summary.to_json()).items():
            print(f"{k:<15} {v}")
    return EXIT_REJECT if summary.passed is False else EXIT_ACCEPT


def _cmd_table1(args) -> int:
    bits = 8_000_000 if args.long else args.bits
    reports = run_table1_experiment(bits=bits, mode=args.mode, codecs=args.codec or DEFAULT_TABLE1_CODECS, alpha=args.alpha)
    _emit(reports, args.report)
    return EXIT_ACCEPT


def _alpha(text: str) -> float:
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < a < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return a


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ucodetest", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        sp.add_argument("--format", choices=("bits", "bytes"), default="bits")
        sp.add_argument("--codec", help=f"codec descriptor (default ${CODEC_ENV} or {FALLBACK_CODEC})")
        sp.add_argument("--alpha", type=_alpha, default=0.01)
        sp.add_argument("--report", choices=("json", "text"), default="text")
        if model:
            sp.add_argument("--model", default="uniform-iid")

    for name in ("identity", "independence"):
        sp = sub.add_parser(name, help=f"{name} test of one input")
        sp.add_argument("--input", required=True, help="file path or - for stdin")
        common(sp, model=name == "identity")
        if name == "independence":
            sp.add_argument("--m", type=int, default=0, help="memory under H0")

    g = sub.add_parser("generate", help="write LCG octets or fair bits as raw bytes")
    g.add_argument("--lcg", help="M,A,C,X0 (2^k notation allowed)")
    g.add_argument("--mode", choices=[m.value for m in ExtractionMode], default="top8")
    g.add_argument("--bits", type=int, default=400_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", default="-")

    mc = sub.add_parser("montecarlo", help="level (or power) study over seeded trials")
    mc.add_argument("--test", choices=("identity", "independence"), default="identity")
    mc.add_argument("--m", type=int, default=0)
    mc.add_argument("--t", type=int, default=4096)
    mc.add_argument("--trials", type=int, default=2000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--alternative", help="data source for a power study")
    mc.add_argument("--workers", type=int, default=1)
    common(mc)

    tb = sub.add_parser("table1", help="identity test of the four LCGs")
    tb.add_argument("--bits", type=int, default=400_000)
    tb.add_argument("--long", action="store_true", help="use 8,000,000 bits (several minutes)")
    tb.add_argument("--mode", choices=[m.value for m in ExtractionMode], default="top8")
    tb.add_argument("--codec", default=None, help=f"default: {DEFAULT_TABLE1_CODECS}")
    tb.add_argument("--alpha", type=_alpha, default=0.01)
    tb.add_argument("--report", choices=("json", "text"), default="text")
    return p


COMMANDS = {
    "identity": _cmd_test,
    "independence": _cmd_test,
    "generate": _cmd_generate,
    "montecarlo": _cmd_montecarlo,
    "table1": _cmd_table1,
}


def run_cli(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"ucodetest: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run_cli())
