"""Synthetic disfluent corpora with exact gold annotation.

Fluent sentences are drawn from a handful of POS templates, then
repetitions, corrections and restarts are injected independently with
their configured per-sentence rates. The generator writes bracket
annotation and parses it back, so gold spans are whatever the parser
produces for that text.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, parse_annotated_line

DETERMINERS = ("the", "a", "this", "that")
PRONOUNS = ("i", "we", "you", "they", "he", "she", "it")
PREPOSITIONS = ("in", "on", "with", "to", "for", "about", "at")
CONJUNCTIONS = ("and", "but", "so")
MODALS = ("would", "could", "will")
INTERREGNA = ((("uh", "UH"),), (("um", "UH"),), (("you", "PRP"), ("know", "VBP")))

FUNCTION_WORDS = {
    "DT": DETERMINERS, "PRP": PRONOUNS, "IN": PREPOSITIONS, "CC": CONJUNCTIONS, "MD": MODALS,
}
CONTENT_TAGS = ("NN", "VB", "JJ", "RB")
CONTENT_SHARE = {"NN": 0.4, "VB": 0.3, "JJ": 0.2, "RB": 0.1}
MIN_PER_TAG = 2

TEMPLATES = (
    "PRP VB DT NN",
    "PRP VB DT JJ NN",
    "PRP MD VB DT NN IN DT NN",
    "DT NN VB IN DT NN",
    "PRP RB VB DT NN",
    "DT JJ NN VB DT NN CC PRP VB",
    "PRP VB IN DT NN",
    "PRP VB DT NN CC DT NN",
    "PRP MD RB VB IN DT JJ NN",
)

_ONSETS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


class ConfigError(ValueError):
    pass


@dataclass
class SyntheticConfig:
    n_sentences: int = 1000
    vocab_size: int = 200
    repetition_rate: float = 0.3
    correction_rate: float = 0.2
    restart_rate: float = 0.1
    interregnum_rate: float = 0.3
    fragment_rate: float = 0.1
    max_len: int = 30
    split: str = "train"
    id_prefix: str = "syn"

    def validate(self):
        for name in ("repetition_rate", "correction_rate", "restart_rate",
                     "interregnum_rate", "fragment_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.max_len < 3:
            raise ConfigError("max_len must be >= 3")
        if self.n_sentences < 0:
            raise ConfigError("n_sentences must be >= 0")
        need = template_word_count() + MIN_PER_TAG * len(CONTENT_TAGS)
        if self.vocab_size < need:
            raise ConfigError(
                f"vocab_size {self.vocab_size} is smaller than the {need} words the templates need")


def template_word_count() -> int:
    words = {w for ws in FUNCTION_WORDS.values() for w in ws}
    words.update(w for group in INTERREGNA for w, _ in group)
    return len(words)


def _syllable(r: int) -> str:
    return _ONSETS[r // len(_VOWELS)] + _VOWELS[r % len(_VOWELS)]


def _pseudo_word(k: int) -> str:
    # distinct for distinct k: the third syllable encodes k // base
    base = len(_ONSETS) * len(_VOWELS)
    word = _syllable(k % base) + _syllable((37 * k + 11) % base)
    if k >= base:
        word += _syllable((k // base - 1) % base)
    return word


def content_lexicon(vocab_size: int) -> dict[str, list[str]]:
    budget = vocab_size - template_word_count()
    sizes = {t: max(MIN_PER_TAG, int(budget * CONTENT_SHARE[t])) for t in CONTENT_TAGS}
    lex = {}
    k = 0
    reserved = {w for ws in FUNCTION_WORDS.values() for w in ws} | {"uh", "um", "know"}
    for tag in CONTENT_TAGS:
        words = []
        while len(words) < sizes[tag]:
            w = _pseudo_word(k)
            k += 1
            if w not in reserved:
                words.append(w)
        lex[tag] = words
    return lex


class _Generator:
    def __init__(self, cfg: SyntheticConfig, seed: int):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.lex = content_lexicon(cfg.vocab_size)
        self.lex.update({k: list(v) for k, v in FUNCTION_WORDS.items()})
        self.weights = {}
        for tag, words in self.lex.items():
            w = 1.0 / np.arange(1, len(words) + 1)  # Zipf-like
            self.weights[tag] = w / w.sum()

    def word(self, tag):
        words = self.lex[tag]
        return words[int(self.rng.choice(len(words), p=self.weights[tag]))]

    def alternative(self, tag, word):
        choices = [w for w in self.lex[tag] if w != word]
        return choices[int(self.rng.integers(len(choices)))]

    def fluent(self, limit):
        options = [t for t in TEMPLATES if len(t.split()) <= limit]
        template = options[int(self.rng.integers(len(options)))].split()
        return [(self.word(tag), tag) for tag in template]

    def interregnum(self):
        if self.rng.random() < self.cfg.interregnum_rate:
            return list(INTERREGNA[int(self.rng.integers(len(INTERREGNA)))])
        return []

    def sentence(self):
        cfg = self.cfg
        fluent = self.fluent(cfg.max_len)
        n = len(fluent)
        # each injection: (first fluent index covered, end, annotation items)
        groups = {}
        used = [False] * n
        budget = cfg.max_len - n

        def place(start, end, items, extra):
            nonlocal budget
            if extra > budget or any(used[start:end]):
                return False
            for i in range(start, end):
                used[i] = True
            groups[start] = (end, items)
            budget -= extra
            return True

        if self.rng.random() < cfg.restart_rate:
            other = self.fluent(cfg.max_len)
            k = int(self.rng.integers(1, min(3, len(other) - 1) + 1))
            inter = self.interregnum()
            items = ["["] + other[:k] + ["+"] + ["{"] * bool(inter) + inter + ["}"] * bool(inter) + ["]"]
            extra = k + len(inter)
            restart = (items, extra)
        else:
            restart = None

        if self.rng.random() < cfg.repetition_rate:
            i = int(self.rng.integers(n))
            length = 2 if i + 1 < n and self.rng.random() < 0.4 else 1
            copy = fluent[i:i + length]
            inter = self.interregnum()
            chain = []
            word, tag = copy[-1]
            if length == 1 and len(word) >= 3 and self.rng.random() < cfg.fragment_rate:
                chain = [(word[:2] + "-", tag), "+"]
            items = (["[S"] + copy + ["+"] + chain + ["{"] * bool(inter) + inter
                     + ["}"] * bool(inter) + copy + ["]"])
            place(i, i + length, items, length + len(inter) + len(chain) // 2)

        if self.rng.random() < cfg.correction_rate:
            cands = [i for i, (_, tag) in enumerate(fluent)
                     if tag in CONTENT_TAGS and not used[i]]
            if cands:
                i = cands[int(self.rng.integers(len(cands)))]
                start = i - 1 if i > 0 and not used[i - 1] and self.rng.random() < 0.5 else i
                word, tag = fluent[i]
                repl = fluent[start:i] + [(self.alternative(tag, word), tag)]
                inter = self.interregnum()
                items = (["["] + repl + ["+"] + ["{"] * bool(inter) + inter
                         + ["}"] * bool(inter) + fluent[start:i + 1] + ["]"])
                place(start, i + 1, items, len(repl) + len(inter))

        out = []
        if restart is not None and restart[1] <= budget:
            out.extend(restart[0])
        i = 0
        while i < n:
            if i in groups:
                end, items = groups[i]
                out.extend(items)
                i = end
            else:
                out.append(fluent[i])
                i += 1
        return _annotation(out)


def _annotation(items) -> str:
    parts = []
    pending_open = False
    for it in items:
        if it == "{":
            pending_open = True
            continue
        if it == "}":
            parts[-1] += "}"
            continue
        if isinstance(it, tuple):
            word = f"{it[0]}/{it[1]}"
            if pending_open:
                word = "{" + word
                pending_open = False
            parts.append(word)
        else:
            parts.append(it)
    return " ".join(parts)


def generate_synthetic(cfg: SyntheticConfig | None = None, seed: int = 0, **overrides) -> Corpus:
    """Deterministic synthetic corpus; keyword overrides patch ``cfg`` fields."""
    cfg = SyntheticConfig(**{**(cfg.__dict__ if cfg else {}), **overrides})
    cfg.validate()
    gen = _Generator(cfg, seed)
    sentences = [
        parse_annotated_line(gen.sentence(), id=f"{cfg.id_prefix}-{seed}-{k}")
        for k in range(cfg.n_sentences)
    ]
    return Corpus(sentences, cfg.split)
