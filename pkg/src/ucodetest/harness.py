"""Reports, Monte Carlo level/power studies and the LCG experiment."""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .codec import Battery, Codec, parse_codec
from .hypothesis import TestOutcome, identity_test, independence_test
from .model import FiniteMemorySource, SampleSequence, sample, uniform_iid
from .prng import TABLE1_GENERATORS, ExtractionMode, LcgSpec, lcg_octets, substream

SCHEMA_VERSION = 1
MIN_TABLE1_BITS = 10_000


def input_digest(x: SampleSequence) -> str:
    h = hashlib.sha256()
    h.update(f"{x.alphabet.size}:{x.length}:".encode())
    h.update(x.symbols.tobytes())
    return "sha256:" + h.hexdigest()


@dataclass
class Report:
    test: str
    codec: str
    alpha: float
    t: int
    statistic_bits: float
    threshold_bits: float
    model_term_bits: float
    code_length_bits: int
    decision: str
    p_value_bound: float
    log2_p_value_bound: float
    input_digest: str
    seed: int | None = None
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_outcome(cls, outcome: TestOutcome, x: SampleSequence, wall_time: float = 0.0, seed=None, **details):
        return cls(
            test=outcome.test,
            codec=outcome.codec,
            alpha=outcome.alpha,
            t=outcome.t,
            statistic_bits=outcome.statistic,
            threshold_bits=outcome.threshold,
            model_term_bits=outcome.model_term,
            code_length_bits=outcome.code_length,
            decision=outcome.decision,
            p_value_bound=outcome.p_bound,
            log2_p_value_bound=min(0.0, -outcome.statistic),
            input_digest=input_digest(x),
            seed=seed,
            wall_time=wall_time,
            details=details,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_text(self) -> str:
        lines = [
            f"test            {self.test}",
            f"codec           {self.codec}",
            f"t               {self.t}",
            f"alpha           {self.alpha:g}",
            f"model term      {self.model_term_bits:.3f} bits",
            f"code length     {self.code_length_bits} bits",
            f"statistic       {self.statistic_bits:.3f} bits",
            f"threshold       {self.threshold_bits:.3f} bits",
            f"p-value bound   {self.p_value_bound:.6g} (log2 {self.log2_p_value_bound:.3f})",
            f"decision        {self.decision}",
        ]
        for k, v in self.details.items():
            lines.append(f"{k:<15} {v}")
        return "\n".join(lines)


@dataclass
class HarnessSummary:
    test: str
    codec: str
    trials: int
    rejections: int
    alpha: float
    t: int
    seed: int
    rate: float
    bound: float | None
    passed: bool | None
    mean_statistic: float
    min_statistic: float
    max_statistic: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def type1_bound(alpha: float, n: int) -> float:
    """Largest rejection rate consistent with level ``alpha`` over ``n`` trials (3 sigma)."""
    return alpha + 3.0 * math.sqrt(alpha * (1.0 - alpha) / n)


def _run_trial(test, source, codec, alpha, t, seed, m, null, i):
    x = sample(source, t, substream(seed, i))
    if test == "identity":
        out = identity_test(x, null, codec, alpha)
    else:
        out = independence_test(x, m, codec, alpha)
    return out.rejected, out.statistic


def _run_chunk(args):
    test, source, codec, alpha, t, seed, m, null, indices = args
    return [_run_trial(test, source, codec, alpha, t, seed, m, null, i) for i in indices]


def monte_carlo(
    test: str,
    null: FiniteMemorySource,
    codec: Codec,
    alpha: float,
    t: int,
    trials: int,
    seed: int,
    m: int = 0,
    alternative: FiniteMemorySource | None = None,
    workers: int = 1,
) -> HarnessSummary:
    """Rejection rate of ``test`` over ``trials`` seeded samples of length ``t``.

    Without ``alternative`` the data come from ``null`` and the rate is checked
    against :func:`type1_bound`. With ``alternative`` the data come from it and
    only the rate is reported (power study; ``passed`` is None).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if test not in ("identity", "independence"):
        raise ValueError(f"unknown test {test!r}")
    if test == "independence" and alternative is None and null.order > m:
        raise ValueError(f"null source has memory {null.order} > m={m}; it is not a null for this test")
    source = alternative if alternative is not None else null
    if source.alphabet.size != codec.alphabet.size:
        raise ValueError("source and codec alphabets differ")

    idx = list(range(trials))
    if workers > 1:
        chunks = [idx[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(test, source, codec, alpha, t, seed, m, null, c) for c in chunks])
            results = [r for part in parts for r in part]
    else:
        results = _run_chunk((test, source, codec, alpha, t, seed, m, null, idx))

    rejections = sum(1 for rej, _ in results if rej)
    stats = np.array([s for _, s in results], dtype=float)
    rate = rejections / trials
    bound = None if alternative is not None else type1_bound(alpha, trials)
    return HarnessSummary(
        test=test if test == "identity" else f"independence(m={m})",
        codec=codec.descriptor,
        trials=trials,
        rejections=rejections,
        alpha=alpha,
        t=t,
        seed=seed,
        rate=rate,
        bound=bound,
        passed=None if bound is None else rate <= bound,
        mean_statistic=float(stats.mean()),
        min_statistic=float(stats.min()),
        max_statistic=float(stats.max()),
    )


DEFAULT_TABLE1_CODECS = "ext:zlib+ctw:d=16,bin"


def run_table1_experiment(
    bits: int = 400_000,
    mode: ExtractionMode | str = ExtractionMode.TOP8,
    codecs: str = DEFAULT_TABLE1_CODECS,
    alpha: float = 0.01,
    generators: tuple[LcgSpec, ...] = TABLE1_GENERATORS,
) -> list[Report]:
    """Identity test of each generator's octet stream against fair coin flips.

    ``bits`` is the length after octet extraction. A code length at or above
    ``bits`` is flagged ``extended`` (and is always accepted).
    """
    if bits < MIN_TABLE1_BITS:
        raise ValueError(f"bit budget {bits} < {MIN_TABLE1_BITS}: the statistic is meaningless at this scale")
    if bits % 8:
        raise ValueError("bit budget must be a whole number of octets")
    null = uniform_iid(256)
    reports = []
    for spec in generators:
        start = time.perf_counter()
        x = lcg_octets(spec, bits // 8, mode)
        codec = parse_codec(codecs, x.alphabet)
        out = identity_test(x, null, codec, alpha)
        members = (
            {c.descriptor: c.code_length_bits(x) for c in codec.codecs} if isinstance(codec, Battery) else {}
        )
        reports.append(
            Report.from_outcome(
                out,
                x,
                wall_time=time.perf_counter() - start,
                generator=str(spec),
                mode=str(ExtractionMode(mode).value),
                original_bits=bits,
                extended=out.code_length >= bits,
                member_lengths=members,
            )
        )
    return reports
