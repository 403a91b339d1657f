"""Per-token core features as categorical indices.

Feature ids:

==  ==========================================================
1   word index
2   POS index
3   filled pause
4   discourse marker
5   part of an editing term ("i mean", "sorry", ...)
6   incomplete word (fragment)
7   distance to the same word in the following window
8   distance to the same bigram in the following window
9   distance to the same word in the preceding window
10  distance to the same bigram in the preceding window
11  POS bigram repeated in the following window
12  POS bigram repeated in the preceding window
13  (word, next POS) repeated in the following window
14  (POS, next word) repeated in the following window
15  word bigram repeated within N words, gaps allowed
16  POS trigram repeated within N words
17  distance to the next conjunction
18  n-gram LM log-probability in the observed context
19  n-gram LM log-probability with the previous word skipped
20  difference of 19 and 18
==  ==========================================================

Distances are clipped to the window and 0 means "no match". Every compared
n-gram must lie entirely inside the window, so a feature of token ``t``
only depends on tokens ``t - W .. t + W``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Sentence

PAD = 0
UNK = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

CORE_FEATURES = tuple(range(1, 18))
LM_FEATURES = (18, 19, 20)
ALL_FEATURES = CORE_FEATURES + LM_FEATURES

DEFAULT_CONJUNCTIONS = frozenset({"and", "but", "or", "so", "because", "then", "well"})
DEFAULT_EDIT_TERMS = (("i", "mean"), ("sorry",), ("excuse", "me"), ("rather",),
                      ("oops",), ("no",), ("wait",))


class Vocab:
    """Index map with ``0 = PAD`` and ``1 = UNK``."""

    def __init__(self, words: Sequence[str], min_count: int = 1):
        self.itos = [PAD_TOKEN, UNK_TOKEN] + [w for w in words if w not in (PAD_TOKEN, UNK_TOKEN)]
        self.word_to_index = {w: i for i, w in enumerate(self.itos)}
        self.min_count = min_count

    @property
    def size(self) -> int:
        return len(self.itos)

    def __len__(self):
        return self.size

    def __contains__(self, word):
        return word in self.word_to_index

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.itos == other.itos

    def index(self, word: str) -> int:
        return self.word_to_index.get(word, UNK)

    def encode(self, words: Iterable[str]) -> list[int]:
        return [self.index(w) for w in words]


def build_vocab(c: Corpus, min_count: int = 1) -> Vocab:
    """Lower-cased word vocabulary in first-occurrence order."""
    if not len(c):
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t.norm for s in c for t in s.tokens)
    seen = {}
    for s in c:
        for t in s.tokens:
            if counts[t.norm] >= min_count:
                seen.setdefault(t.norm, None)
    return Vocab(list(seen), min_count)


def build_tag_vocab(c: Corpus) -> Vocab:
    seen = {}
    for s in c:
        for t in s.tokens:
            seen.setdefault(t.pos, None)
    return Vocab(list(seen), 1)


@dataclass(frozen=True)
class FeatureSchema:
    enabled: tuple = CORE_FEATURES
    window_follow: int = 8
    window_precede: int = 8
    ngram_window: int = 8  # N for features 15-16
    gap_max: int = 3
    conjunction_lexicon: frozenset = DEFAULT_CONJUNCTIONS
    edit_terms: tuple = DEFAULT_EDIT_TERMS
    lm_bins: int = 10

    def __post_init__(self):
        bad = [f for f in self.enabled if f not in ALL_FEATURES]
        if bad:
            raise ValueError(f"unknown feature ids {bad}")
        if len(set(self.enabled)) != len(self.enabled):
            raise ValueError("feature ids repeat")
        if min(self.window_follow, self.window_precede, self.ngram_window) < 1:
            raise ValueError("windows must be >= 1")
        if self.gap_max < 0:
            raise ValueError("gap_max must be >= 0")
        object.__setattr__(self, "enabled", tuple(sorted(self.enabled)))

    @property
    def distance_cap(self) -> int:
        return max(self.window_follow, self.window_precede)

    @property
    def radius(self) -> int:
        """Farthest token that can influence a feature value."""
        return max(self.window_follow, self.window_precede, self.ngram_window)

    @property
    def uses_lm(self) -> bool:
        return any(f in LM_FEATURES for f in self.enabled)

    def cardinality(self, fid: int, words: Vocab | None = None, tags: Vocab | None = None) -> int:
        if fid == 1:
            return words.size
        if fid == 2:
            return tags.size
        if fid in (7, 8, 17):
            return self.window_follow + 1
        if fid in (9, 10):
            return self.window_precede + 1
        if fid in LM_FEATURES:
            return self.lm_bins
        return 2

    def to_dict(self) -> dict:
        return {
            "enabled": list(self.enabled),
            "window_follow": self.window_follow,
            "window_precede": self.window_precede,
            "ngram_window": self.ngram_window,
            "gap_max": self.gap_max,
            "conjunction_lexicon": sorted(self.conjunction_lexicon),
            "edit_terms": [list(t) for t in self.edit_terms],
            "lm_bins": self.lm_bins,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        d = dict(d)
        d["enabled"] = tuple(d["enabled"])
        d["conjunction_lexicon"] = frozenset(d["conjunction_lexicon"])
        d["edit_terms"] = tuple(tuple(t) for t in d["edit_terms"])
        return cls(**d)


@dataclass
class FeatureVector:
    """``values[t, k]`` is the value of feature ``ids[k]`` at token ``t``."""

    ids: tuple
    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def column(self, fid: int) -> np.ndarray:
        return self.values[:, self.ids.index(fid)]


# --- pattern features --------------------------------------------------------

def _first_distance(n, t, window, match) -> int:
    for d in range(1, window + 1):
        if not 0 <= t + d < n:
            break
        if match(t + d):
            return d
    return 0


def _first_distance_back(t, window, match) -> int:
    for d in range(1, window + 1):
        if t - d < 0:
            break
        if match(t - d):
            return d
    return 0


def _lexicon_flags(words: Sequence[str], lexicon) -> list[bool]:
    flags = [False] * len(words)
    for i in range(len(words)):
        for term in lexicon:
            if tuple(words[i:i + len(term)]) == tuple(term):
                for j in range(i, i + len(term)):
                    flags[j] = True
    return flags


def pattern_features(words: Sequence[str], tags: Sequence[str], schema: FeatureSchema) -> dict:
    """Features 7-17 for already case-folded ``words``; one list per id."""
    n = len(words)
    wf, wp, big_n = schema.window_follow, schema.window_precede, schema.ngram_window
    w, p = words, tags
    out = {fid: [0] * n for fid in range(7, 18)}
    for t in range(n):
        has_next = t + 1 < n
        out[7][t] = _first_distance(n, t, wf, lambda u: w[u] == w[t])
        out[9][t] = _first_distance_back(t, wp, lambda u: w[u] == w[t])
        if has_next:
            # comparison bigram (u, u+1) must end inside the window
            out[8][t] = _first_distance(n, t, wf - 1, lambda u: u + 1 < n
                                        and w[u] == w[t] and w[u + 1] == w[t + 1])
            out[10][t] = _first_distance_back(t, wp, lambda u: w[u] == w[t]
                                              and w[u + 1] == w[t + 1])
            out[11][t] = int(_first_distance(n, t, wf - 1, lambda u: u + 1 < n
                                             and p[u] == p[t] and p[u + 1] == p[t + 1]) > 0)
            out[12][t] = int(_first_distance_back(t, wp, lambda u: p[u] == p[t]
                                                  and p[u + 1] == p[t + 1]) > 0)
            out[13][t] = int(_first_distance(n, t, wf - 1, lambda u: u + 1 < n
                                             and w[u] == w[t] and p[u + 1] == p[t + 1]) > 0)
            out[14][t] = int(_first_distance(n, t, wf - 1, lambda u: u + 1 < n
                                             and p[u] == p[t] and w[u + 1] == w[t + 1]) > 0)
            found = False
            for u in range(t + 1, min(n, t + big_n + 1)):
                if w[u] != w[t]:
                    continue
                for v in range(u + 1, min(n, u + schema.gap_max + 2, t + big_n + 1)):
                    if w[v] == w[t + 1]:
                        found = True
                        break
                if found:
                    break
            out[15][t] = int(found)
        if t + 2 < n:
            tri = (p[t], p[t + 1], p[t + 2])
            out[16][t] = int(any(
                (p[u], p[u + 1], p[u + 2]) == tri
                for u in range(t + 1, min(n - 2, t + big_n - 1))
            ))
        out[17][t] = _first_distance(n, t, wf, lambda u: w[u] in schema.conjunction_lexicon)
    return out


def extract_features(s: Sentence, schema: FeatureSchema, words: Vocab,
                     tags: Vocab | None = None, lm: "LmFeaturizer | None" = None) -> FeatureVector:
    """Categorical feature matrix for one sentence."""
    norm = [t.norm for t in s.tokens]
    pos = [t.pos for t in s.tokens]
    n = len(norm)
    cols = {}
    if 1 in schema.enabled:
        cols[1] = words.encode(norm)
    if 2 in schema.enabled:
        if tags is None:
            raise ValueError("feature 2 needs a tag vocabulary")
        cols[2] = tags.encode(pos)
    cols[3] = [int(t.is_filled_pause) for t in s.tokens]
    cols[4] = [int(t.is_discourse_marker) for t in s.tokens]
    cols[5] = [int(f) for f in _lexicon_flags(norm, schema.edit_terms)]
    cols[6] = [int(t.is_incomplete) for t in s.tokens]
    if any(7 <= f <= 17 for f in schema.enabled):
        cols.update(pattern_features(norm, pos, schema))
    if schema.uses_lm:
        if lm is None:
            raise ValueError("features 18-20 need a fitted LmFeaturizer")
        lm_cols = lm.transform(s)
        for k, fid in enumerate(LM_FEATURES):
            cols[fid] = lm_cols[:, k]
    values = np.zeros((n, len(schema.enabled)), dtype=np.int64)
    for k, fid in enumerate(schema.enabled):
        values[:, k] = cols[fid]
    return FeatureVector(schema.enabled, values)


# --- n-gram LM features --------------------------------------------------------

class NGramModel:
    """Add-k smoothed bigram model over lower-cased words.

    ``<s>`` pads the left context; words outside the vocabulary score as
    ``<unk>``.
    """

    BOS = "<s>"

    def __init__(self, k: float = 0.1):
        self.k = k
        self.unigrams: Counter = Counter()
        self.bigrams: Counter = Counter()
        self.context: Counter = Counter()
        self.vocab: set = set()
        self.uniform = False

    @classmethod
    def uniform_unigram(cls, vocab: Iterable[str]) -> "NGramModel":
        m = cls()
        m.vocab = set(vocab)
        m.uniform = True
        return m

    def fit(self, sentences: Iterable[Sequence[str]]) -> "NGramModel":
        for words in sentences:
            seq = [self.BOS] + [w.lower() for w in words]
            self.vocab.update(seq[1:])
            self.unigrams.update(seq[1:])
            for a, b in zip(seq, seq[1:]):
                self.bigrams[a, b] += 1
                self.context[a] += 1
        return self

    def logprob(self, word: str, prev: str | None) -> float:
        v = len(self.vocab) + 1  # + <unk>
        if self.uniform:
            return -math.log(v)
        word = word.lower() if word.lower() in self.vocab else "<unk>"
        prev = self.BOS if prev is None else (prev.lower() if prev.lower() in self.vocab else "<unk>")
        return math.log((self.bigrams[prev, word] + self.k) / (self.context[prev] + self.k * v))


def fit_fluent_lm(c: Corpus, k: float = 0.1) -> NGramModel:
    """Bigram LM trained on the corpus with reparanda and interregna removed."""
    from .corpus import cleaned_words
    return NGramModel(k).fit([s.words[i] for i in cleaned_words(s)] for s in c)


def lm_scores(words: Sequence[str], lm: NGramModel) -> np.ndarray:
    """``[T, 3]`` raw scores: observed context, skip-one context, difference."""
    out = np.zeros((len(words), 3))
    for t, w in enumerate(words):
        prev = words[t - 1] if t >= 1 else None
        skip = words[t - 2] if t >= 2 else None
        a = lm.logprob(w, prev)
        b = lm.logprob(w, skip)
        out[t] = (a, b, b - a)
    return out


class LmFeaturizer:
    """Quantises :func:`lm_scores` into equal-frequency bins fitted on training data."""

    def __init__(self, lm: NGramModel, bins: int = 10):
        self.lm = lm
        self.bins = bins
        self.edges = None

    def fit(self, c: Corpus) -> "LmFeaturizer":
        scores = np.concatenate([lm_scores(s.words, self.lm) for s in c]) if len(c) else np.zeros((1, 3))
        qs = np.arange(1, self.bins) / self.bins
        self.edges = np.quantile(scores, qs, axis=0).T  # [3, bins-1]
        return self

    def transform(self, s: Sentence) -> np.ndarray:
        if self.edges is None:
            raise ValueError("LmFeaturizer must be fitted first")
        scores = lm_scores(s.words, self.lm)
        out = np.zeros(scores.shape, dtype=np.int64)
        for k in range(3):
            out[:, k] = np.searchsorted(self.edges[k], scores[:, k], side="right")
        return out


def compute_lm_features(s: Sentence, lm: LmFeaturizer) -> np.ndarray:
    return lm.transform(s)


# --- dump ----------------------------------------------------------------------

def format_feature_tsv(items: Iterable[tuple[str, FeatureVector]], schema: FeatureSchema) -> str:
    lines = ["\t".join(f"f{fid}" for fid in schema.enabled)]
    for sid, fv in items:
        lines.append(f"# id = {sid}")
        lines.extend("\t".join(str(int(v)) for v in row) for row in fv.values)
        lines.append("")
    return "\n".join(lines) + "\n"
