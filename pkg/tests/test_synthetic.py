import pytest
from scipy.stats import binomtest

from disfluency.corpus import derive_labels, render
from disfluency.decode import is_legal
from disfluency.schemes import EIGHT, EXTENDED, FIVE
from disfluency.synthetic import ConfigError, SyntheticConfig, generate_synthetic


def has_kind(s, kind):
    return any(sp.kind == kind for sp in s.spans)


class TestGenerate:
    def test_deterministic(self):
        a = generate_synthetic(n_sentences=50, seed=7)
        b = generate_synthetic(n_sentences=50, seed=7)
        assert [render(s, True) for s in a] == [render(s, True) for s in b]

    def test_seed_matters(self):
        a = generate_synthetic(n_sentences=20, seed=1)
        b = generate_synthetic(n_sentences=20, seed=2)
        assert [s.words for s in a] != [s.words for s in b]

    def test_zero_rates(self):
        c = generate_synthetic(n_sentences=100, repetition_rate=0, correction_rate=0,
                               restart_rate=0, seed=0)
        assert sum(len(s.spans) for s in c) == 0

    def test_all_repetitions(self):
        c = generate_synthetic(n_sentences=100, repetition_rate=1.0, seed=0)
        assert all(has_kind(s, "repetition") for s in c)

    def test_max_len(self):
        c = generate_synthetic(n_sentences=300, max_len=12, repetition_rate=1,
                               correction_rate=1, restart_rate=1, seed=4)
        assert max(len(s) for s in c) <= 12

    def test_ids_unique_and_prefixed(self):
        c = generate_synthetic(n_sentences=5, seed=9, id_prefix="x")
        assert [s.id for s in c] == [f"x-9-{k}" for k in range(5)]

    @pytest.mark.parametrize("kind,rate", [("repetition", 0.3), ("correction", 0.2),
                                           ("restart", 0.1)])
    def test_injection_rates(self, kind, rate):
        n = 3000
        c = generate_synthetic(n_sentences=n, seed=21)
        hits = sum(has_kind(s, kind) for s in c)
        # two-sided exact binomial test; a failure here at alpha 1e-3 means a biased generator
        assert binomtest(hits, n, rate).pvalue > 1e-3, hits / n

    @pytest.mark.parametrize("bad", [dict(repetition_rate=1.5), dict(max_len=2),
                                     dict(n_sentences=-1), dict(vocab_size=5)])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            generate_synthetic(**bad)

    @pytest.mark.parametrize("scheme", [FIVE, EIGHT, EXTENDED])
    def test_gold_labels_legal(self, scheme):
        c = generate_synthetic(n_sentences=500, seed=5)
        assert all(is_legal(derive_labels(s, scheme), scheme.legality) for s in c)

    def test_config_object(self):
        cfg = SyntheticConfig(n_sentences=3)
        assert len(generate_synthetic(cfg, seed=0)) == 3
