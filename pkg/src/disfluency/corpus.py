"""Disfluency-annotated sentences: parsing, rendering and label derivation.

Annotation grammar, one sentence per line, whitespace separated::

    [ I/PRP just/RB + I/PRP ] enjoy/VBP working/VBG
    [S it's + {uh} it's ] almost like
    [S the + th- + the ] decision was

``[`` or ``[S`` opens a disfluency, ``+`` marks the interruption point,
``{ ... }`` wraps interregnum words and must directly follow a ``+``,
``]`` closes. Brackets nest. A ``[S`` group may hold a flattened chain of
repetitions with several ``+``; a plain ``[`` group takes exactly one.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .schemes import (BE, BE_IP, C, C_IE, C_IP, IE, IP, O, LabelScheme,
                      check_labels, typed, untyped)

REPETITION = "repetition"
CORRECTION = "correction"
RESTART = "restart"
KINDS = (REPETITION, CORRECTION, RESTART)

UNK_POS = "UNK"
FRAGMENT_MARK = "-"

FILLED_PAUSES = frozenset({"uh", "um", "uh-huh", "er", "ah", "eh", "hm", "huh", "mm", "oh"})
DISCOURSE_MARKERS = (
    ("you", "know"), ("i", "mean"), ("you", "see"), ("kind", "of"), ("sort", "of"),
    ("well",), ("like",), ("so",), ("actually",), ("anyway",), ("okay",),
    ("right",), ("basically",),
)


class ParseError(ValueError):
    """Malformed annotation; ``offset`` is the character offset in the line."""

    def __init__(self, message: str, offset: int | None = None, location: str | None = None):
        self.message = message
        self.offset = offset
        self.location = location
        super().__init__(str(self))

    def __str__(self):
        where = []
        if self.location:
            where.append(self.location)
        if self.offset is not None:
            where.append(f"offset {self.offset}")
        return f"{': '.join(where)}: {self.message}" if where else self.message


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    position: int
    surface: str
    pos: str = UNK_POS
    is_filled_pause: bool = False
    is_discourse_marker: bool = False

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")

    @property
    def is_incomplete(self) -> bool:
        return self.surface.endswith(FRAGMENT_MARK)

    @property
    def norm(self) -> str:
        return self.surface.lower()


Range = tuple  # (start, end), end exclusive


@dataclass(frozen=True)
class DisfluencySpan:
    reparandum: Range
    interregnum: Range
    repair: Range
    kind: str
    bracket: int = 0  # spans of one flattened [S chain share a bracket id

    def __post_init__(self):
        (rs, re_), (is_, ie), (ps, pe) = self.reparandum, self.interregnum, self.repair
        if self.kind not in KINDS:
            raise AnnotationError(f"unknown disfluency kind {self.kind!r}")
        if not rs < re_:
            raise AnnotationError("reparandum must be non-empty")
        if not (re_ <= is_ <= ie <= ps <= pe):
            raise AnnotationError("reparandum, interregnum and repair must be ordered")
        if (self.kind == RESTART) != (ps == pe):
            raise AnnotationError("kind is restart iff the repair is empty")

    @property
    def extent(self) -> Range:
        return (self.reparandum[0], self.repair[1])


def _covers(r: Range, i: int) -> bool:
    return r[0] <= i < r[1]


def _length(r: Range) -> int:
    return r[1] - r[0]


@dataclass
class Sentence:
    tokens: list
    spans: list = field(default_factory=list)
    id: str = ""

    def __post_init__(self):
        n = len(self.tokens)
        for sp in self.spans:
            if sp.extent[1] > n or sp.reparandum[0] < 0:
                raise AnnotationError(f"sentence {self.id!r}: span {sp} lies outside the sentence")
        reps = [sp.reparandum for sp in self.spans]
        for i, a in enumerate(reps):
            for b in reps[i + 1:]:
                overlap = a[0] < b[1] and b[0] < a[1]
                nested = (a[0] <= b[0] and b[1] <= a[1]) or (b[0] <= a[0] and a[1] <= b[1])
                if overlap and not nested:
                    raise AnnotationError(
                        f"sentence {self.id!r}: reparanda {a} and {b} partially overlap")

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t.pos for t in self.tokens]


@dataclass
class Corpus:
    sentences: list
    split: str = "train"

    def __post_init__(self):
        if self.split not in ("train", "dev", "test"):
            raise ValueError(f"unknown split {self.split!r}")
        counts = Counter(s.id for s in self.sentences)
        dup = [k for k, v in counts.items() if v > 1]
        if dup:
            raise ValueError(f"duplicate sentence ids in {self.split} split: {dup[:5]}")

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


# --- parsing ---------------------------------------------------------------

def mark_discourse_markers(words: Sequence[str]) -> list[bool]:
    """Flag every word that is part of a lexicon discourse marker."""
    low = [w.lower() for w in words]
    flags = [False] * len(low)
    for i in range(len(low)):
        for marker in DISCOURSE_MARKERS:
            if tuple(low[i:i + len(marker)]) == marker:
                for j in range(i, i + len(marker)):
                    flags[j] = True
    return flags


def make_tokens(words: Sequence[str], tags: Sequence[str] | None = None) -> list[Token]:
    if tags is None:
        tags = [UNK_POS] * len(words)
    if len(tags) != len(words):
        raise ValueError("need exactly one POS tag per word")
    dm = mark_discourse_markers(words)
    return [
        Token(i, w, p, is_filled_pause=w.lower() in FILLED_PAUSES, is_discourse_marker=dm[i])
        for i, (w, p) in enumerate(zip(words, tags))
    ]


class _Frame:
    def __init__(self, offset, repetition, start):
        self.offset = offset
        self.repetition = repetition
        self.seg_start = start
        self.segments = []
        self.interregna = []
        self.phase = "seg"  # seg | after_plus | in_int
        self.int_start = 0


def _split_word(chunk: str) -> tuple[str, str | None]:
    surface, slash, tag = chunk.rpartition("/")
    if slash and surface and tag:
        return surface, tag
    return chunk, None


_CHUNK = re.compile(r"\S+")


def parse_annotated_line(line: str, pos: Sequence[str] | None = None, id: str = "") -> Sentence:
    """Parse one bracket-annotated sentence.

    POS tags come inline (``word/TAG``) or from the parallel ``pos`` list,
    which wins when both are present.
    """
    words: list[str] = []
    tags: list[str | None] = []
    spans: list[tuple[int, int, DisfluencySpan]] = []
    stack: list[_Frame] = []
    n_brackets = 0

    def enter_segment(frame):
        # first item after '+' with no interregnum
        frame.interregna.append((len(words), len(words)))
        frame.seg_start = len(words)
        frame.phase = "seg"

    for m in _CHUNK.finditer(line):
        chunk, off = m.group(), m.start()
        if chunk in ("[", "[S"):
            if stack:
                top = stack[-1]
                if top.phase == "in_int":
                    raise ParseError("bracket opened inside an interregnum", off)
                if top.phase == "after_plus":
                    enter_segment(top)
            frame = _Frame(off, chunk == "[S", len(words))
            frame.id = n_brackets
            n_brackets += 1
            stack.append(frame)
            continue
        if chunk == "+":
            if not stack:
                raise ParseError("'+' outside a bracket", off)
            top = stack[-1]
            if top.phase == "in_int":
                raise ParseError("'+' inside an interregnum", off)
            if top.phase == "after_plus" or top.seg_start == len(words):
                raise ParseError("empty reparandum before '+'", off)
            if top.segments and not top.repetition:
                raise ParseError("more than one '+' in a non-repetition bracket", off)
            top.segments.append((top.seg_start, len(words)))
            top.phase = "after_plus"
            continue
        if chunk == "]":
            if not stack:
                raise ParseError("unbalanced ']'", off)
            top = stack.pop()
            if top.phase == "in_int":
                raise ParseError("unclosed interregnum before ']'", off)
            if not top.segments:
                raise ParseError("bracket has no '+'", off)
            if top.phase == "after_plus":
                top.interregna.append((len(words), len(words)))
                top.seg_start = len(words)
            top.segments.append((top.seg_start, len(words)))
            segs = top.segments
            if top.repetition and segs[-1][0] == segs[-1][1]:
                raise ParseError("repetition bracket with an empty repair", off)
            for i in range(len(segs) - 1):
                repair = segs[i + 1]
                if top.repetition:
                    kind = REPETITION
                elif repair[0] == repair[1]:
                    kind = RESTART
                else:
                    kind = CORRECTION
                span = DisfluencySpan(segs[i], top.interregna[i], repair, kind, top.id)
                spans.append((top.id, i, span))
            if stack and stack[-1].phase == "after_plus":
                enter_segment(stack[-1])
            continue

        # a word, possibly wrapped in interregnum braces
        opens = chunk.startswith("{")
        if opens:
            chunk = chunk[1:]
            if not stack:
                raise ParseError("interregnum outside a bracket", off)
            top = stack[-1]
            just_closed = (top.phase == "seg" and top.interregna
                           and len(top.interregna) == len(top.segments)
                           and top.interregna[-1][1] == len(words) == top.seg_start
                           and top.interregna[-1][0] < top.interregna[-1][1])
            if just_closed:
                # `+ {uh} {you know}` continues the same interregnum
                top.int_start = top.interregna.pop()[0]
            elif top.phase == "after_plus":
                top.int_start = len(words)
            else:
                raise ParseError("interregnum must directly follow '+'", off)
            top.phase = "in_int"
        elif stack and stack[-1].phase == "after_plus":
            enter_segment(stack[-1])
        closes = chunk.endswith("}")
        if closes:
            chunk = chunk[:-1]
            if not stack or stack[-1].phase != "in_int":
                raise ParseError("'}' without an open interregnum", off + len(m.group()) - 1)
        if chunk:
            if chunk in ("[", "[S", "]", "+") or "{" in chunk or "}" in chunk:
                raise ParseError(f"misplaced annotation symbol in {m.group()!r}", off)
            surface, tag = _split_word(chunk)
            words.append(surface)
            tags.append(tag)
        if closes:
            top = stack[-1]
            top.interregna.append((top.int_start, len(words)))
            top.seg_start = len(words)
            top.phase = "seg"

    if stack:
        raise ParseError("unclosed bracket", stack[-1].offset)

    if pos is not None:
        if len(pos) != len(words):
            raise ParseError(f"{len(pos)} POS tags for {len(words)} words")
        final_tags = list(pos)
    else:
        final_tags = [t if t is not None else UNK_POS for t in tags]
    spans.sort(key=lambda x: (x[0], x[1]))
    return Sentence(make_tokens(words, final_tags), [s for _, _, s in spans], id)


def plain_sentence(words: Sequence[str], tags: Sequence[str] | None = None, id: str = "") -> Sentence:
    return Sentence(make_tokens(words, tags), [], id)


def render(s: Sentence, with_pos: bool | None = None) -> str:
    """Inverse of :func:`parse_annotated_line` up to whitespace."""
    if with_pos is None:
        with_pos = any(t.pos != UNK_POS for t in s.tokens)
    brackets: dict[int, list[DisfluencySpan]] = {}
    for sp in s.spans:
        brackets.setdefault(sp.bracket, []).append(sp)
    extents = {}
    for b, group in brackets.items():
        group.sort(key=lambda sp: sp.reparandum[0])
        extents[b] = (group[0].reparandum[0], group[-1].repair[1])

    def contains(a, b):
        (as_, ae), (bs, be) = extents[a], extents[b]
        return as_ <= bs and be <= ae and ((as_, ae) != (bs, be) or a < b)

    depth = {b: sum(contains(a, b) for a in extents if a != b) for b in extents}
    n = len(s.tokens)
    before = [[] for _ in range(n + 1)]
    after = [[] for _ in range(n + 1)]
    prefix = [""] * n
    suffix = [""] * n
    for b, group in brackets.items():
        start, end = extents[b]
        opener = "[S" if group[0].kind == REPETITION else "["
        before[start].append((depth[b], b, 0, opener))
        for sp in group:
            after[sp.reparandum[1] - 1].append((-depth[b], b, sp.reparandum[1], "+"))
            i0, i1 = sp.interregnum
            if i1 > i0:
                prefix[i0] += "{"
                suffix[i1 - 1] = "}" + suffix[i1 - 1]
        after[end - 1].append((-depth[b], b, n + 1, "]"))

    out = []
    for i, tok in enumerate(s.tokens):
        out.extend(m[-1] for m in sorted(before[i]))
        word = f"{tok.surface}/{tok.pos}" if with_pos else tok.surface
        out.append(prefix[i] + word + suffix[i])
        out.extend(m[-1] for m in sorted(after[i]))
    return " ".join(out)


# --- labels ----------------------------------------------------------------

def _innermost(spans, attr, i):
    best = None
    for sp in spans:
        r = getattr(sp, attr)
        if _covers(r, i) and (best is None or _length(r) <= _length(getattr(best, attr))):
            best = sp
    return best


def _kind_tag(kind: str) -> str:
    return "rep" if kind == REPETITION else "other"


def five_state_labels(s: Sentence) -> list[str]:
    """Reparandum union, split into regions at every interruption point."""
    n = len(s.tokens)
    edit = [False] * n
    ip_after = [False] * n
    for sp in s.spans:
        a, b = sp.reparandum
        for i in range(a, b):
            edit[i] = True
        ip_after[b - 1] = True
    labels = []
    for i in range(n):
        if not edit[i]:
            labels.append(O)
            continue
        begins = i == 0 or not edit[i - 1] or ip_after[i - 1]
        ends = ip_after[i] or i == n - 1 or not edit[i + 1]
        if begins and ends:
            labels.append(BE_IP)
        elif begins:
            labels.append(BE)
        elif ends:
            labels.append(IP)
        else:
            labels.append(IE)
    return labels


def derive_labels(s: Sentence, scheme: LabelScheme) -> list[str]:
    """Gold per-token states of ``s`` under ``scheme``.

    Interregnum words are ``O``. A repair word that also sits inside a later
    reparandum keeps its reparandum label, prefixed ``C_`` where the scheme
    has one (``IE -> C_IE``, ``IP -> C_IP``); ``BE``/``BE_IP`` stay as they are.
    """
    five = five_state_labels(s)
    if scheme.name == "five":
        return five
    in_repair = [any(_covers(sp.repair, i) for sp in s.spans) for i in range(len(s))]
    eight = []
    for lab, rep in zip(five, in_repair):
        if rep and lab == O:
            lab = C
        elif rep and lab == IE:
            lab = C_IE
        elif rep and lab == IP:
            lab = C_IP
        eight.append(lab)
    if scheme.name == "eight":
        return eight
    if scheme.name == "extended":
        out = []
        for i, lab in enumerate(eight):
            if lab == O:
                out.append(O)
                continue
            attr = "repair" if lab in (C, C_IE, C_IP) else "reparandum"
            sp = _innermost(s.spans, attr, i)
            out.append(typed(lab, _kind_tag(sp.kind)))
        return out
    # custom schemes: keep the eight-state label if the scheme knows it
    labels = [lab if lab in scheme.states else scheme_fallback(lab, scheme) for lab in eight]
    check_labels(labels, scheme)
    return labels


def scheme_fallback(label: str, scheme: LabelScheme) -> str:
    """Map an eight-state label onto a custom scheme via its five-state image."""
    five = {C: O, C_IE: IE, C_IP: IP}.get(label, label)
    for st in scheme.states:
        if scheme.to_five[st] == five and untyped(st) == five:
            return st
    raise AnnotationError(f"scheme {scheme.name!r} has no state for {label!r}")


def collapse_labels(labels: Iterable[str], scheme: LabelScheme) -> list[str]:
    labels = list(labels)
    check_labels(labels, scheme)
    return [scheme.to_five[lab] for lab in labels]


def cleaned_words(s: Sentence) -> list[int]:
    """Indices of tokens left after deleting every reparandum and interregnum."""
    drop = set()
    for sp in s.spans:
        drop.update(range(*sp.reparandum))
        drop.update(range(*sp.interregnum))
    return [i for i in range(len(s)) if i not in drop]


def edit_kinds(s: Sentence) -> dict[int, str]:
    """Gold edit words mapped to the kind of their innermost reparandum."""
    out = {}
    for sp in s.spans:
        for i in range(*sp.reparandum):
            inner = _innermost(s.spans, "reparandum", i)
            out[i] = inner.kind
    return out


def filter_by_length(c: Corpus, max_words: int = 50) -> Corpus:
    if max_words < 1:
        raise ValueError("max_words must be >= 1")
    return Corpus([s for s in c.sentences if len(s) <= max_words], c.split)


# --- files -------------------------------------------------------------------

def parse_dis_text(text: str, split: str = "train", name: str = "<string>") -> Corpus:
    """``.dis`` format: one sentence per line, optional ``id<TAB>`` prefix.

    Blank lines and lines starting with ``#`` are skipped.
    """
    sentences = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        sid, tab, body = line.partition("\t")
        if not tab:
            sid, body = f"{name}:{lineno}", line
        try:
            sentences.append(parse_annotated_line(body, id=sid.strip()))
        except (ParseError, AnnotationError) as exc:
            offset = getattr(exc, "offset", None)
            if offset is not None and tab:
                offset += len(sid) + 1
            raise ParseError(getattr(exc, "message", str(exc)), offset,
                             f"{name}:{lineno}") from None
    return Corpus(sentences, split)


def read_dis(path: str | Path, split: str = "train") -> Corpus:
    path = Path(path)
    return parse_dis_text(path.read_text(encoding="utf-8"), split, str(path))


def write_dis(c: Corpus, path: str | Path) -> None:
    lines = [f"{s.id}\t{render(s)}\n" for s in c.sentences]
    Path(path).write_text("".join(lines), encoding="utf-8")


@dataclass
class LabeledSentence:
    id: str
    words: list
    tags: list
    labels: list


def format_tsv(items: Iterable[LabeledSentence]) -> str:
    """``index<TAB>surface<TAB>pos<TAB>label`` rows, ``# id = ...`` headers."""
    blocks = []
    for it in items:
        rows = [f"# id = {it.id}"]
        rows += [f"{i}\t{w}\t{p}\t{lab}" for i, (w, p, lab) in
                 enumerate(zip(it.words, it.tags, it.labels))]
        blocks.append("\n".join(rows) + "\n")
    return "\n".join(blocks)


def parse_tsv_text(text: str, name: str = "<string>") -> list[LabeledSentence]:
    out = []
    cur = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            if cur is not None and cur.words:
                out.append(cur)
            cur = None
            continue
        if cur is None:
            cur = LabeledSentence(f"{name}:{lineno}", [], [], [])
        if line.startswith("#"):
            key, eq, val = line[1:].partition("=")
            if eq and key.strip() == "id":
                cur.id = val.strip()
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}",
                             location=f"{name}:{lineno}")
        idx, w, p, lab = fields
        if idx != str(len(cur.words)):
            raise ParseError(f"token index {idx} out of sequence", location=f"{name}:{lineno}")
        cur.words.append(w)
        cur.tags.append(p)
        cur.labels.append(lab)
    if cur is not None and cur.words:
        out.append(cur)
    return out


def read_tsv(path: str | Path) -> list[LabeledSentence]:
    path = Path(path)
    return parse_tsv_text(path.read_text(encoding="utf-8"), str(path))


def write_tsv(items: Iterable[LabeledSentence], path: str | Path) -> None:
    Path(path).write_text(format_tsv(items), encoding="utf-8")


def gold_labeled(c: Corpus, scheme: LabelScheme) -> list[LabeledSentence]:
    return [LabeledSentence(s.id, s.words, s.tags, derive_labels(s, scheme)) for s in c.sentences]
