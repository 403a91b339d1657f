"""Label state inventories and their legality automata.

Three built-in schemes are provided:

* ``five``: ``O BE IE IP BE_IP``
* ``eight``: five plus explicit repair states ``C C_IE C_IP``
* ``extended``: every non-``O`` eight-state label split into a repetition
  (``_rep``) and a non-repetition (``_other``) variant, 15 states in all.

The larger schemes derive their automaton by lifting the five-state one:
a transition ``a -> b`` is legal iff ``to_five(a) -> to_five(b)`` is legal.
Any lift of a legal five-state sequence is therefore legal in the larger
scheme, and projecting a legal sequence down always gives a legal one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

O = "O"
BE = "BE"
IE = "IE"
IP = "IP"
BE_IP = "BE_IP"
C = "C"
C_IE = "C_IE"
C_IP = "C_IP"

FIVE_STATES = (O, BE, IE, IP, BE_IP)
EIGHT_STATES = FIVE_STATES + (C, C_IE, C_IP)
KIND_SUFFIXES = ("rep", "other")

# Eight-state states that mark repair words.
REPAIR_STATES = frozenset({C, C_IE, C_IP})


class SchemeError(ValueError):
    pass


@dataclass(frozen=True)
class LegalityMatrix:
    """Start set, end set and allowed transitions of a label automaton."""

    start: frozenset
    end: frozenset
    transitions: frozenset  # of (from, to) pairs

    def allows(self, a: str, b: str) -> bool:
        return (a, b) in self.transitions

    def successors(self, a: str) -> list[str]:
        return sorted(b for x, b in self.transitions if x == a)


FIVE_LEGALITY = LegalityMatrix(
    start=frozenset({O, BE, BE_IP}),
    end=frozenset({O, IP, BE_IP}),
    transitions=frozenset(
        [(O, s) for s in (O, BE, BE_IP)]
        + [(BE, s) for s in (IE, IP)]
        + [(IE, s) for s in (IE, IP)]
        + [(IP, s) for s in (O, BE, BE_IP)]
        + [(BE_IP, s) for s in (O, BE, BE_IP)]
    ),
)


@dataclass(frozen=True)
class LabelScheme:
    name: str
    states: tuple
    legality: LegalityMatrix
    to_five: Mapping[str, str]
    edit_states: frozenset
    # states whose words count as repair words (explicit repair modelling)
    repair_states: frozenset = field(default=frozenset())
    # non-repetition repair states, used for correction detection
    correction_states: frozenset = field(default=frozenset())

    def __post_init__(self):
        if O not in self.states:
            raise SchemeError(f"scheme {self.name!r} has no O state")
        if len(set(self.states)) != len(self.states):
            raise SchemeError(f"scheme {self.name!r} repeats a state")
        missing = [s for s in self.states if s not in self.to_five]
        if missing:
            raise SchemeError(f"scheme {self.name!r}: no five-state image for {missing}")
        bad = [v for v in self.to_five.values() if v not in FIVE_STATES]
        if bad:
            raise SchemeError(f"scheme {self.name!r}: {bad} are not five-state labels")
        known = set(self.states)
        lm = self.legality
        for a, b in lm.transitions:
            if a not in known or b not in known:
                raise SchemeError(f"transition {a} -> {b} uses an unknown state")
        if not lm.start <= known or not lm.end <= known:
            raise SchemeError("start/end sets must be subsets of the states")
        unreachable = known - _reachable(lm.start, lm.transitions)
        if unreachable:
            raise SchemeError(f"states not reachable from start: {sorted(unreachable)}")
        reverse = frozenset((b, a) for a, b in lm.transitions)
        dead = known - _reachable(lm.end, reverse)
        if dead:
            raise SchemeError(f"states that cannot reach an end state: {sorted(dead)}")

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        return self.states.index(state)

    @property
    def has_typed_repairs(self) -> bool:
        return bool(self.correction_states)


def _reachable(seeds, transitions) -> set:
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        a = stack.pop()
        for x, b in transitions:
            if x == a and b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


def lift_legality(states: Sequence[str], to_five: Mapping[str, str],
                  base: LegalityMatrix = FIVE_LEGALITY) -> LegalityMatrix:
    """Legality automaton induced on ``states`` by the five-state projection."""
    return LegalityMatrix(
        start=frozenset(s for s in states if to_five[s] in base.start),
        end=frozenset(s for s in states if to_five[s] in base.end),
        transitions=frozenset(
            (a, b) for a in states for b in states
            if base.allows(to_five[a], to_five[b])
        ),
    )


def _five() -> LabelScheme:
    return LabelScheme(
        name="five",
        states=FIVE_STATES,
        legality=FIVE_LEGALITY,
        to_five={s: s for s in FIVE_STATES},
        edit_states=frozenset(FIVE_STATES) - {O},
    )


EIGHT_TO_FIVE = {O: O, BE: BE, IE: IE, IP: IP, BE_IP: BE_IP, C: O, C_IE: IE, C_IP: IP}


def _eight() -> LabelScheme:
    return LabelScheme(
        name="eight",
        states=EIGHT_STATES,
        legality=lift_legality(EIGHT_STATES, EIGHT_TO_FIVE),
        to_five=dict(EIGHT_TO_FIVE),
        edit_states=frozenset(EIGHT_STATES) - {O, C},
        repair_states=REPAIR_STATES,
    )


def typed(state: str, kind: str) -> str:
    """``typed("BE", "rep") == "BE_rep"``; ``O`` is never typed."""
    return state if state == O else f"{state}_{kind}"


def untyped(state: str) -> str:
    for suffix in KIND_SUFFIXES:
        if state.endswith("_" + suffix):
            return state[: -len(suffix) - 1]
    return state


def _extended() -> LabelScheme:
    states = (O,) + tuple(
        typed(s, kind) for kind in KIND_SUFFIXES for s in EIGHT_STATES if s != O
    )
    to_five = {s: EIGHT_TO_FIVE[untyped(s)] for s in states}
    return LabelScheme(
        name="extended",
        states=states,
        legality=lift_legality(states, to_five),
        to_five=to_five,
        edit_states=frozenset(s for s in states if untyped(s) not in (O, C)),
        repair_states=frozenset(s for s in states if untyped(s) in REPAIR_STATES),
        correction_states=frozenset(typed(s, "other") for s in REPAIR_STATES),
    )


FIVE = _five()
EIGHT = _eight()
EXTENDED = _extended()

_BUILTIN = {"five": FIVE, "eight": EIGHT, "extended": EXTENDED}
_CUSTOM: dict[str, LabelScheme] = {}


def get_scheme(name: str) -> LabelScheme:
    if name in _BUILTIN:
        return _BUILTIN[name]
    if name in _CUSTOM:
        return _CUSTOM[name]
    raise SchemeError(f"unknown label scheme {name!r}")


def register_scheme(scheme: LabelScheme) -> None:
    if scheme.name in _BUILTIN:
        raise SchemeError(f"cannot replace built-in scheme {scheme.name!r}")
    _CUSTOM[scheme.name] = scheme


# --- text formats ---------------------------------------------------------

def _split_list(text: str) -> list[str]:
    return [t for t in text.replace(",", " ").split() if t]


def parse_legality(text: str) -> LegalityMatrix:
    """Parse ``start:``, ``end:`` and ``trans: A -> B[,C]`` lines.

    ``#`` starts a comment. Unknown directives are an error.
    """
    start: set = set()
    end: set = set()
    trans: set = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise SchemeError(f"line {lineno}: expected 'key: value'")
        key = key.strip()
        if key == "start":
            start.update(_split_list(rest))
        elif key == "end":
            end.update(_split_list(rest))
        elif key == "trans":
            src, arrow, dst = rest.partition("->")
            if not arrow or not src.strip():
                raise SchemeError(f"line {lineno}: expected 'trans: FROM -> TO[,TO...]'")
            for b in _split_list(dst):
                trans.add((src.strip(), b))
        else:
            raise SchemeError(f"line {lineno}: unknown directive {key!r}")
    return LegalityMatrix(frozenset(start), frozenset(end), frozenset(trans))


def format_legality(lm: LegalityMatrix, order: Sequence[str] | None = None) -> str:
    states = list(order) if order else sorted({s for pair in lm.transitions for s in pair})
    rank = {s: i for i, s in enumerate(states)}
    lines = [
        "start: " + " ".join(sorted(lm.start, key=rank.get)),
        "end: " + " ".join(sorted(lm.end, key=rank.get)),
    ]
    for a in states:
        succ = sorted((b for x, b in lm.transitions if x == a), key=rank.get)
        if succ:
            lines.append(f"trans: {a} -> {','.join(succ)}")
    return "\n".join(lines) + "\n"


def parse_scheme(text: str, name: str | None = None) -> LabelScheme:
    """Load a custom scheme.

    Directives: ``name:``, ``states:`` (ordered), ``five: STATE -> FIVE``,
    ``edit:``, ``repair:``, ``correction:`` plus the legality directives
    (``start:``, ``end:``, ``trans:``). If no ``trans:`` lines are given the
    automaton is lifted from the five-state one through the ``five:`` map.
    """
    states: list[str] = []
    to_five: dict[str, str] = {}
    sets: dict[str, set] = {"edit": set(), "repair": set(), "correction": set()}
    legality_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        if key == "name":
            name = name or rest.strip()
        elif key == "states":
            states.extend(_split_list(rest))
        elif key == "five":
            src, arrow, dst = rest.partition("->")
            if not arrow:
                raise SchemeError(f"line {lineno}: expected 'five: STATE -> FIVE'")
            to_five[src.strip()] = dst.strip()
        elif key in sets:
            sets[key].update(_split_list(rest))
        elif key in ("start", "end", "trans"):
            legality_lines.append(line)
        else:
            raise SchemeError(f"line {lineno}: unknown directive {key!r}")
    if not states:
        raise SchemeError("scheme defines no states")
    for s in states:
        to_five.setdefault(s, s if s in FIVE_STATES else O)
    if any(line.startswith("trans") for line in legality_lines):
        legality = parse_legality("\n".join(legality_lines))
    else:
        legality = lift_legality(states, to_five)
    edit = sets["edit"] or {s for s in states if to_five[s] != O}
    return LabelScheme(
        name=name or "custom",
        states=tuple(states),
        legality=legality,
        to_five=to_five,
        edit_states=frozenset(edit),
        repair_states=frozenset(sets["repair"]),
        correction_states=frozenset(sets["correction"]),
    )


def load_scheme(path: str | Path) -> LabelScheme:
    path = Path(path)
    return parse_scheme(path.read_text(encoding="utf-8"), name=None)


def load_legality(path: str | Path) -> LegalityMatrix:
    return parse_legality(Path(path).read_text(encoding="utf-8"))


def check_labels(labels: Iterable[str], scheme: LabelScheme) -> None:
    known = set(scheme.states)
    for i, lab in enumerate(labels):
        if lab not in known:
            raise SchemeError(f"label {lab!r} at position {i} is not in scheme {scheme.name!r}")
