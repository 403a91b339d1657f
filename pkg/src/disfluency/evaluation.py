"""Word-level precision / recall / F scoring of edit and correction detection."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import CORRECTION, REPETITION, Corpus, edit_kinds
from .schemes import LabelScheme, check_labels


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def degenerate(self) -> bool:
        """True when precision or recall has an empty denominator."""
        return self.tp + self.fp == 0 or self.tp + self.fn == 0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def prf(pred: Iterable, gold: Iterable) -> PRF:
    """Micro counts over two sets of items (e.g. ``(sentence, index)`` pairs)."""
    pred, gold = set(pred), set(gold)
    tp = len(pred & gold)
    return PRF(tp, len(pred) - tp, len(gold) - tp)


def edit_word_set(labels: Sequence[str], scheme: LabelScheme) -> set[int]:
    check_labels(labels, scheme)
    return {i for i, lab in enumerate(labels) if lab in scheme.edit_states}


def _pairs(label_seqs, select):
    return {(s, i) for s, labels in enumerate(label_seqs) for i in select(labels)}


def _check_aligned(pred, gold_lengths, ids=None):
    if len(pred) != len(gold_lengths):
        raise EvaluationError(f"{len(pred)} predicted sentences but {len(gold_lengths)} gold sentences")
    for k, (p, n) in enumerate(zip(pred, gold_lengths)):
        if len(p) != n:
            sid = ids[k] if ids else k
            raise EvaluationError(f"sentence {sid}: {len(p)} predicted labels for {n} gold tokens")


def evaluate_edits(pred: Sequence[Sequence[str]], gold: Sequence[Sequence[str]],
                   scheme: LabelScheme, gold_scheme: LabelScheme | None = None) -> PRF:
    gold_scheme = gold_scheme or scheme
    _check_aligned(pred, [len(g) for g in gold])
    return prf(_pairs(pred, lambda l: edit_word_set(l, scheme)),
               _pairs(gold, lambda l: edit_word_set(l, gold_scheme)))


def correction_word_set(labels: Sequence[str], scheme: LabelScheme) -> set[int]:
    return {i for i, lab in enumerate(labels) if lab in scheme.correction_states}


def gold_correction_words(c: Corpus) -> set:
    """``(sentence, index)`` pairs inside the repair of a correction."""
    out = set()
    for s_idx, s in enumerate(c):
        for sp in s.spans:
            if sp.kind == CORRECTION:
                out.update((s_idx, i) for i in range(*sp.repair))
    return out


def evaluate_corrections(pred: Sequence[Sequence[str]], gold: Corpus, scheme: LabelScheme) -> PRF:
    if not scheme.has_typed_repairs:
        raise EvaluationError(
            f"correction detection requires typed repair states; scheme {scheme.name!r} has none")
    _check_aligned(pred, [len(s) for s in gold], [s.id for s in gold])
    for labels in pred:
        check_labels(labels, scheme)
    return prf(_pairs(pred, lambda l: correction_word_set(l, scheme)), gold_correction_words(gold))


@dataclass(frozen=True)
class TypeBreakdown:
    repetition: PRF
    other: PRF
    either: PRF


def breakdown_by_type(pred: Sequence[Sequence[str]], gold: Corpus, scheme: LabelScheme) -> TypeBreakdown:
    """Repetition vs. other (correction, restart) edit detection.

    Gold edit words take the kind of their innermost reparandum. A predicted
    edit word that hits a gold edit word counts for that word's type only;
    one that hits no gold edit word is a false positive for both types.
    """
    _check_aligned(pred, [len(s) for s in gold], [s.id for s in gold])
    gold_rep, gold_other = set(), set()
    for s_idx, s in enumerate(gold):
        for i, kind in edit_kinds(s).items():
            (gold_rep if kind == REPETITION else gold_other).add((s_idx, i))
    predicted = _pairs(pred, lambda l: edit_word_set(l, scheme))
    gold_all = gold_rep | gold_other
    stray = len(predicted - gold_all)
    rep = PRF(len(predicted & gold_rep), stray, len(gold_rep - predicted))
    other = PRF(len(predicted & gold_other), stray, len(gold_other - predicted))
    return TypeBreakdown(rep, other, prf(predicted, gold_all))


@dataclass
class EvalReport:
    edit: PRF
    corrections: PRF | None = None
    breakdown: TypeBreakdown | None = None
    extra: dict = field(default_factory=dict)

    @property
    def repetition_f(self):
        return self.breakdown.repetition.f1 if self.breakdown else None

    @property
    def other_f(self):
        return self.breakdown.other.f1 if self.breakdown else None

    @property
    def either_f(self):
        return self.breakdown.either.f1 if self.breakdown else None

    def rows(self) -> list[tuple[str, PRF]]:
        rows = [("edit", self.edit)]
        if self.corrections is not None:
            rows.append(("corrections", self.corrections))
        if self.breakdown is not None:
            rows += [("repetition", self.breakdown.repetition),
                     ("other", self.breakdown.other),
                     ("either", self.breakdown.either)]
        return rows

    def table(self) -> str:
        lines = [f"{'':<12}{'P':>8}{'R':>8}{'F':>8}{'tp':>8}{'fp':>8}{'fn':>8}"]
        for name, r in self.rows():
            flag = "  (degenerate)" if r.degenerate else ""
            lines.append(f"{name:<12}{100 * r.precision:8.1f}{100 * r.recall:8.1f}"
                         f"{100 * r.f1:8.1f}{r.tp:8d}{r.fp:8d}{r.fn:8d}{flag}")
        return "\n".join(lines)

    def key_values(self) -> str:
        lines = []
        for name, r in self.rows():
            lines += [f"{name}.p={r.precision:.6f}", f"{name}.r={r.recall:.6f}",
                      f"{name}.f={r.f1:.6f}", f"{name}.tp={r.tp}", f"{name}.fp={r.fp}",
                      f"{name}.fn={r.fn}", f"{name}.degenerate={int(r.degenerate)}"]
        lines += [f"{k}={v}" for k, v in sorted(self.extra.items())]
        return "\n".join(lines)


def evaluate(pred: Sequence[Sequence[str]], gold: Corpus, scheme: LabelScheme) -> EvalReport:
    """Full report against an annotated gold corpus."""
    from .corpus import derive_labels
    gold_labels = [derive_labels(s, scheme) for s in gold]
    _check_aligned(pred, [len(s) for s in gold], [s.id for s in gold])
    report = EvalReport(evaluate_edits(pred, gold_labels, scheme))
    if scheme.has_typed_repairs:
        report.corrections = evaluate_corrections(pred, gold, scheme)
    report.breakdown = breakdown_by_type(pred, gold, scheme)
    return report
