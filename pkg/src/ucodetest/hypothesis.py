"""Compression-based identity and serial-independence tests.

Both tests compare a model code length with the length of a uniquely
decodable code and reject when the code wins by more than ``log2(1/alpha)``
bits. Kraft's inequality bounds the null probability of a margin of ``s``
bits by ``2**-s``, which is what ``p_bound`` reports.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .codec import Codec
from .entropy import plugin_code_length
from .model import FiniteMemorySource, SampleSequence, neg_log_prob

ACCEPT = "accept"
REJECT = "reject"


@dataclass(frozen=True)
class TestOutcome:
    test: str
    statistic: float
    threshold: float
    decision: str
    p_bound: float
    model_term: float
    code_length: int
    codec: str
    alpha: float
    t: int

    __test__ = False  # not a pytest class

    @property
    def rejected(self) -> bool:
        return self.decision == REJECT

    def to_dict(self) -> dict:
        return asdict(self)


def _check_alpha(alpha: float):
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


def threshold_bits(alpha: float) -> float:
    _check_alpha(alpha)
    return -math.log2(alpha)


def p_value_bound(statistic: float) -> float:
    """``min(1, 2**-statistic)``: an upper bound on the exact p-value."""
    if math.isnan(statistic):
        raise ValueError("statistic is NaN")
    if statistic <= 0:
        return 1.0
    if math.isinf(statistic):
        return 0.0
    return 2.0**-statistic


def _outcome(test, model_term, code_length, codec, alpha, t) -> TestOutcome:
    thr = threshold_bits(alpha)
    stat = model_term - code_length
    # equality accepts
    decision = REJECT if stat > thr else ACCEPT
    return TestOutcome(
        test=test,
        statistic=stat,
        threshold=thr,
        decision=decision,
        p_bound=p_value_bound(stat),
        model_term=model_term,
        code_length=int(code_length),
        codec=codec.descriptor,
        alpha=alpha,
        t=t,
    )


def identity_test(x: SampleSequence, pi: FiniteMemorySource, codec: Codec, alpha: float) -> TestOutcome:
    """Test H0: ``x`` was generated by ``pi``.

    Statistic ``-log2 pi(x) - |code(x)|``; an impossible ``x`` gives ``+inf``.
    """
    _check_alpha(alpha)
    if x.alphabet.size != pi.alphabet.size:
        raise ValueError("sample and null source alphabets differ")
    model_term = neg_log_prob(pi, x)
    return _outcome("identity", model_term, codec.code_length_bits(x), codec, alpha, x.length)


def independence_test(x: SampleSequence, m: int, codec: Codec, alpha: float) -> TestOutcome:
    """Test H0: ``x`` comes from a Markov source of memory at most ``m``.

    Statistic ``(t - m) h*_m(x) - |code(x)|``; ``m = 0`` tests serial independence.
    """
    _check_alpha(alpha)
    if not 0 <= m < x.length:
        raise ValueError(f"need 0 <= m < t (m={m}, t={x.length})")
    model_term = plugin_code_length(x, m)
    return _outcome(f"independence(m={m})", model_term, codec.code_length_bits(x), codec, alpha, x.length)
