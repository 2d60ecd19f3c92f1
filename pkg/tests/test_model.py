import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_words, direct_neg_log_prob, random_source
from ucodetest.model import (
    Alphabet,
    SampleSequence,
    ValidationError,
    bernoulli,
    binary_markov,
    build_markov_source,
    load_source,
    neg_log_prob,
    sample,
    source_entropy_rate,
    source_to_json,
    uniform_iid,
)


def seq(text, n=2):
    return SampleSequence.from_string(text, n)


class TestBuild:
    def test_uniform_iid(self):
        src = build_markov_source("uniform-iid")
        assert src.order == 0
        assert src.alphabet.size == 2
        np.testing.assert_array_equal(src.transitions, [[0.5, 0.5]])

    def test_uniform_iid_sized(self):
        src = build_markov_source("uniform-iid:5")
        assert src.transitions.shape == (1, 5)

    def test_order1(self):
        src = build_markov_source(
            {"alphabet_size": 2, "order": 1, "initial": "uniform", "transitions": {"0": [0.9, 0.1], "1": [0.1, 0.9]}}
        )
        assert src.order == 1
        np.testing.assert_allclose(src.initial, [0.5, 0.5])

    def test_bad_row_names_context(self):
        with pytest.raises(ValidationError, match="'1'"):
            build_markov_source(
                {"alphabet_size": 2, "order": 1, "transitions": {"0": [0.5, 0.5], "1": [0.9, 0.07]}}
            )

    def test_negative_probability(self):
        with pytest.raises(ValidationError):
            build_markov_source({"alphabet_size": 2, "order": 0, "transitions": {"": [1.5, -0.5]}})

    def test_missing_row(self):
        with pytest.raises(ValidationError, match="missing"):
            build_markov_source({"alphabet_size": 2, "order": 1, "transitions": {"0": [0.5, 0.5]}})

    def test_unknown_builtin(self):
        with pytest.raises(ValidationError):
            build_markov_source("gaussian")

    def test_alphabet_too_small(self):
        with pytest.raises(ValueError):
            Alphabet(1)

    def test_json_file_roundtrip(self, tmp_path):
        src = binary_markov(0.8)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(source_to_json(src)))
        back = load_source(path)
        np.testing.assert_array_equal(back.transitions, src.transitions)
        np.testing.assert_array_equal(back.initial, src.initial)

    def test_large_alphabet_context_labels(self):
        rows = {f"{a}": [1 / 12] * 12 for a in range(12)}
        src = build_markov_source({"alphabet_size": 12, "order": 1, "transitions": rows})
        assert src.n_contexts == 12


class TestSampleSequence:
    def test_symbol_range(self):
        with pytest.raises(ValueError):
            SampleSequence(Alphabet(2), np.array([0, 2]))

    def test_equality(self):
        assert seq("0110") == seq("0110")
        assert seq("0110") != seq("0111")
        assert len(seq("0110")) == 4


class TestNegLogProb:
    def test_uniform_eight_bits(self):
        assert neg_log_prob(uniform_iid(), seq("01101001")) == 8.0

    def test_bernoulli(self):
        assert neg_log_prob(bernoulli(0.75), seq("00")) == pytest.approx(0.8300749985576876, abs=1e-12)

    def test_order1(self):
        assert neg_log_prob(binary_markov(0.9), seq("000")) == pytest.approx(1.3040061868900998, abs=1e-12)

    def test_impossible(self):
        assert neg_log_prob(bernoulli(1.0), seq("0010")) == math.inf

    def test_short_sequence_uses_initial_marginal(self):
        src = build_markov_source(
            {
                "alphabet_size": 2,
                "order": 2,
                "initial": [0.1, 0.2, 0.3, 0.4],
                "transitions": {w: [0.5, 0.5] for w in ("00", "01", "10", "11")},
            }
        )
        assert neg_log_prob(src, seq("1")) == pytest.approx(-math.log2(0.7))
        assert neg_log_prob(src, seq("")) == 0.0

    @pytest.mark.parametrize("n,s", [(2, 0), (2, 1), (2, 2), (3, 0), (3, 1)])
    def test_probabilities_sum_to_one(self, n, s):
        rng = np.random.default_rng(10 * n + s)
        src = random_source(rng, n, s)
        for t in range(0, 9 if n == 2 else 6):
            total = math.fsum(2.0 ** -neg_log_prob(src, SampleSequence(src.alphabet, np.array(w, dtype=int)))
                              for w in all_words(n, t))
            assert total == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 3), st.integers(0, 2), st.integers(0, 2**32 - 1), st.integers(0, 30))
    def test_matches_direct_product(self, n, s, seed, t):
        rng = np.random.default_rng(seed)
        src = random_source(rng, n, s)
        word = rng.integers(0, n, t)
        got = neg_log_prob(src, SampleSequence(src.alphabet, word))
        want = direct_neg_log_prob(src, word.tolist())
        if math.isinf(want):
            assert math.isinf(got)
        else:
            assert got == pytest.approx(want, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.permutations([0, 1, 2]))
    def test_relabeling_invariance(self, seed, perm):
        rng = np.random.default_rng(seed)
        src = random_source(rng, 3, 1)
        word = rng.integers(0, 3, 25)
        x = SampleSequence(src.alphabet, word)
        y = SampleSequence(src.alphabet, np.asarray(perm)[word])
        assert neg_log_prob(src.relabel(perm), y) == pytest.approx(neg_log_prob(src, x), abs=1e-9)


class TestEntropyRate:
    def test_uniform(self):
        assert source_entropy_rate(uniform_iid(), 0) == pytest.approx(1.0)

    def test_bernoulli(self):
        assert source_entropy_rate(bernoulli(0.7), 0) == pytest.approx(0.8812908992306927, abs=1e-9)

    def test_stay_chain(self):
        assert source_entropy_rate(binary_markov(0.9), 1) == pytest.approx(0.4689955935892811, abs=1e-9)

    def test_periodic_chain(self):
        src = build_markov_source({"alphabet_size": 2, "order": 1, "transitions": {"0": [0, 1], "1": [1, 0]}})
        assert source_entropy_rate(src, 1) == pytest.approx(0.0, abs=1e-12)

    def test_non_ergodic(self):
        src = build_markov_source({"alphabet_size": 2, "order": 1, "transitions": {"0": [1, 0], "1": [0, 1]}})
        with pytest.raises(ValueError, match="ergodic"):
            source_entropy_rate(src, 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_nonincreasing_then_constant(self, seed):
        src = random_source(np.random.default_rng(seed), 3, 2)
        rates = [source_entropy_rate(src, k) for k in range(6)]
        for a, b in zip(rates, rates[1:]):
            assert b <= a + 1e-12
        assert rates[2] == rates[3] == rates[5]

    def test_sampled_frequencies(self):
        src = binary_markov(0.9)
        x = sample(src, 200_000, np.random.default_rng(1))
        stays = np.mean(x.symbols[1:] == x.symbols[:-1])
        assert stays == pytest.approx(0.9, abs=0.005)
