import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disfluency.decode import (argmax_decode, collapse_posteriors, constrained_decode_dp, decode,
                               ilp_decode, is_legal, lift_labels, sequence_score, solve_ilp)
from disfluency.schemes import EIGHT, EXTENDED, FIVE

from oracles import brute_force_decode


def peaked(labels, mass=0.6, states=FIVE.states):
    p = np.full((len(labels), len(states)), (1 - mass) / (len(states) - 1))
    for t, lab in enumerate(labels):
        p[t, states.index(lab)] = mass
    return p


def one_hot(labels, states=FIVE.states):
    return peaked(labels, 1.0, states)


def dirichlet(rng, T, K, alpha=0.5):
    return rng.dirichlet(np.full(K, alpha), size=T)


class TestLegality:
    @pytest.mark.parametrize("labels,ok", [
        ("O IE IE IP", False), ("BE IE IP O", True), ("O", True), ("BE", False),
        ("BE_IP BE_IP O", True), ("IP", False), ("", True),
    ])
    def test_examples(self, labels, ok):
        assert is_legal(labels.split()) is ok


class TestArgmax:
    def test_one_hot(self):
        assert argmax_decode(one_hot(["O", "BE", "IP"])) == ["O", "BE", "IP"]

    def test_failure_case_is_illegal(self):
        out = argmax_decode(peaked("O IE IE IP".split()))
        assert out == ["O", "IE", "IE", "IP"]
        assert not is_legal(out)

    def test_tie_goes_to_earlier_state(self):
        assert argmax_decode(np.array([[0.5, 0.5, 0, 0, 0]])) == ["O"]


class TestConstrained:
    def test_failure_case(self):
        p = peaked("O IE IE IP".split())
        want, _ = brute_force_decode(p)
        assert constrained_decode_dp(p) == want
        assert is_legal(want)

    def test_all_o(self):
        assert constrained_decode_dp(one_hot(["O"] * 6)) == ["O"] * 6

    def test_legal_argmax_kept(self, rng):
        p = peaked("BE IE IP O BE_IP".split(), 0.7)
        assert constrained_decode_dp(p) == argmax_decode(p)

    def test_ilp_one_hot_objective_zero(self):
        res = solve_ilp(one_hot("BE IP O".split()))
        assert res.labels == ["BE", "IP", "O"]
        assert res.objective == 0.0

    def test_empty(self):
        assert constrained_decode_dp(np.zeros((0, 5))) == []
        assert ilp_decode(np.zeros((0, 5))) == []

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_against_brute_force(self, T, seed):
        p = dirichlet(np.random.default_rng(seed), T, 5)
        want, score = brute_force_decode(p)
        got = constrained_decode_dp(p)
        assert got == want
        assert sequence_score(p, got) == pytest.approx(score, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_cold_ilp_reaches_optimum(self, T, seed):
        p = dirichlet(np.random.default_rng(seed), T, 5)
        _, score = brute_force_decode(p)
        res = solve_ilp(p, warm_start=False)
        assert is_legal(res.labels)
        assert res.objective == pytest.approx(score, abs=1e-7)


class TestCollapse:
    def test_worked_example(self):
        row = np.array([[.2, .1, .1, .1, .1, .3, .05, .05]])
        np.testing.assert_allclose(collapse_posteriors(row, EIGHT), [[.5, .1, .15, .15, .1]],
                                   atol=1e-15)

    def test_one_hot_c(self):
        np.testing.assert_array_equal(collapse_posteriors(one_hot(["C"], EIGHT.states), EIGHT),
                                      [[1, 0, 0, 0, 0]])

    def test_five_identity(self, rng):
        p = dirichlet(rng, 4, 5)
        np.testing.assert_array_equal(collapse_posteriors(p, FIVE), p)

    def test_wrong_width(self):
        with pytest.raises(ValueError):
            collapse_posteriors(np.ones((2, 5)) / 5, EIGHT)


class TestLift:
    @pytest.mark.parametrize("scheme", [EIGHT, EXTENDED])
    @pytest.mark.parametrize("method", ["dp", "ilp"])
    def test_lifted_output_legal(self, rng, scheme, method):
        for _ in range(20):
            p = dirichlet(rng, int(rng.integers(1, 7)), scheme.size)
            out = decode(p, scheme, method)
            assert is_legal(out, scheme.legality)
            assert [scheme.to_five[s] for s in out] == decode(collapse_posteriors(p, scheme), FIVE, "dp")

    def test_lift_picks_most_probable_preimage(self):
        p = np.array([[.1, 0, 0, 0, 0, .9, 0, 0]])
        assert lift_labels(["O"], p, EIGHT) == ["C"]

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="unknown decoding method"):
            decode(np.ones((1, 5)) / 5, FIVE, "beam")
