"""From per-token posteriors to label sequences.

Posteriors are ``[T, K]`` arrays whose columns follow the scheme's state
order. Larger schemes are collapsed to five states before constrained
decoding, since the legality constraints are stated over those five.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .schemes import FIVE, FIVE_LEGALITY, FIVE_STATES, LabelScheme, LegalityMatrix

LOG_FLOOR = 1e-12
METHODS = ("argmax", "dp", "ilp")


def check_posteriors(p: np.ndarray, k: int | None = None, atol: float = 1e-6) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("posteriors must be a [T, K] matrix")
    if k is not None and p.shape[1] != k:
        raise ValueError(f"posteriors have {p.shape[1]} columns, scheme has {k} states")
    if (p < 0).any() or not np.allclose(p.sum(axis=1), 1.0, atol=atol):
        raise ValueError("posterior rows must be non-negative and sum to 1")
    return p


def collapse_posteriors(p: np.ndarray, scheme: LabelScheme) -> np.ndarray:
    """Sum each five-state label's preimage, adding columns in state order."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[1] != scheme.size:
        raise ValueError(f"expected {scheme.size} columns, got {p.shape[1]}")
    out = np.zeros((p.shape[0], len(FIVE_STATES)))
    seen = [False] * len(FIVE_STATES)
    for k, state in enumerate(scheme.states):
        j = FIVE_STATES.index(scheme.to_five[state])
        if seen[j]:
            out[:, j] = out[:, j] + p[:, k]
        else:
            out[:, j] = p[:, k]
            seen[j] = True
    return out


def log_scores(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(np.asarray(p, dtype=np.float64), LOG_FLOOR))


def sequence_score(p: np.ndarray, labels: Sequence[str], states: Sequence[str] = FIVE_STATES) -> float:
    s = log_scores(p)
    return float(sum(s[t, list(states).index(lab)] for t, lab in enumerate(labels)))


def argmax_decode(p: np.ndarray, states: Sequence[str] = FIVE_STATES) -> list[str]:
    """Per-token argmax; ties go to the earlier state."""
    p = np.asarray(p)
    return [states[k] for k in np.argmax(p, axis=1)]


def is_legal(labels: Sequence[str], lm: LegalityMatrix = FIVE_LEGALITY) -> bool:
    if not labels:
        return True
    if labels[0] not in lm.start or labels[-1] not in lm.end:
        return False
    return all(lm.allows(a, b) for a, b in zip(labels, labels[1:]))


def count_illegal(sequences, lm: LegalityMatrix = FIVE_LEGALITY) -> int:
    return sum(not is_legal(seq, lm) for seq in sequences)


def _automaton(lm: LegalityMatrix, states: Sequence[str]):
    k = len(states)
    allowed = np.zeros((k, k), dtype=bool)
    for a, b in lm.transitions:
        if a in states and b in states:
            allowed[states.index(a), states.index(b)] = True
    start = np.array([s in lm.start for s in states])
    end = np.array([s in lm.end for s in states])
    return allowed, start, end


def constrained_decode_dp(p: np.ndarray, lm: LegalityMatrix = FIVE_LEGALITY,
                          states: Sequence[str] = FIVE_STATES) -> list[str]:
    """Highest-scoring legal sequence under ``sum_t log p[t, y_t]``.

    Scores-to-go are computed right to left, then the path is read off left
    to right taking the first (lowest-index) best state at every step, which
    yields the lexicographically smallest optimum.
    """
    states = list(states)
    S = log_scores(p)
    T, K = S.shape
    if T == 0:
        return []
    allowed, start, end = _automaton(lm, states)
    V = np.full((T, K), -np.inf)
    V[T - 1] = np.where(end, S[T - 1], -np.inf)
    for t in range(T - 2, -1, -1):
        nxt = np.where(allowed, V[t + 1][None, :], -np.inf).max(axis=1)
        V[t] = S[t] + nxt
    first = np.where(start, V[0], -np.inf)
    if not np.isfinite(first.max()):
        raise ValueError("no legal label sequence exists")
    path = [int(np.argmax(first))]
    for t in range(1, T):
        cand = np.where(allowed[path[-1]], V[t], -np.inf)
        path.append(int(np.argmax(cand)))
    return [states[k] for k in path]


@dataclass
class IlpResult:
    labels: list
    objective: float
    nodes: int
    improved_on_warm_start: bool


def solve_ilp(p: np.ndarray, lm: LegalityMatrix = FIVE_LEGALITY,
              states: Sequence[str] = FIVE_STATES, warm_start: bool = True,
              tol: float = 1e-9) -> IlpResult:
    """Binary program over ``x[t, k]`` solved by LP-based branch and bound.

    maximise ``sum x[t,k] log p[t,k]`` subject to one state per token,
    start/end restrictions, and ``x[t,k] + x[t+1,j] <= 1`` for every illegal
    transition ``k -> j``. With ``warm_start`` the DP path is the initial
    incumbent, so an equal-scoring alternative never displaces it.
    """
    states = list(states)
    S = log_scores(p)
    T, K = S.shape
    if T == 0:
        return IlpResult([], 0.0, 0, False)
    allowed, start, end = _automaton(lm, states)
    n = T * K
    c = -S.ravel()
    A_eq = np.zeros((T, n))
    for t in range(T):
        A_eq[t, t * K:(t + 1) * K] = 1.0
    b_eq = np.ones(T)
    rows = []
    bad = [(k, j) for k in range(K) for j in range(K) if not allowed[k, j]]
    for t in range(T - 1):
        for k, j in bad:
            row = np.zeros(n)
            row[t * K + k] = 1.0
            row[(t + 1) * K + j] = 1.0
            rows.append(row)
    A_ub = np.array(rows) if rows else None
    b_ub = np.ones(len(rows)) if rows else None
    base_bounds = [(0.0, 1.0)] * n
    for k in range(K):
        if not start[k]:
            base_bounds[k] = (0.0, 0.0)
        if not end[k]:
            base_bounds[(T - 1) * K + k] = (0.0, 0.0)

    best_x, best_obj = None, -np.inf
    if warm_start:
        path = constrained_decode_dp(p, lm, states)
        best_x = np.zeros(n)
        for t, lab in enumerate(path):
            best_x[t * K + states.index(lab)] = 1.0
        best_obj = float(S.ravel() @ best_x)
    warm_obj = best_obj
    improved = False

    nodes = 0
    stack = [dict()]
    while stack:
        fixed = stack.pop()
        nodes += 1
        bounds = list(base_bounds)
        for i, v in fixed.items():
            lo, hi = bounds[i]
            if v < lo or v > hi:
                bounds = None
                break
            bounds[i] = (v, v)
        if bounds is None:
            continue
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                      method="highs")
        if res.status != 0:
            continue
        bound = -res.fun
        if bound <= best_obj + tol:
            continue
        x = res.x
        frac = np.abs(x - np.round(x))
        i = int(np.argmax(frac))
        if frac[i] <= 1e-7:
            best_x = np.round(x)
            best_obj = float(S.ravel() @ best_x)
            improved = warm_start and best_obj > warm_obj + tol
            continue
        # explore x_i = 1 first (pushed last)
        stack.append({**fixed, i: 0.0})
        stack.append({**fixed, i: 1.0})
    if best_x is None:
        raise ValueError("no legal label sequence exists")
    grid = best_x.reshape(T, K)
    labels = [states[int(np.argmax(grid[t]))] for t in range(T)]
    return IlpResult(labels, best_obj, nodes, improved)


def ilp_decode(p: np.ndarray, lm: LegalityMatrix = FIVE_LEGALITY,
               states: Sequence[str] = FIVE_STATES, warm_start: bool = True) -> list[str]:
    return solve_ilp(p, lm, states, warm_start).labels


def lift_labels(five_labels: Sequence[str], p: np.ndarray, scheme: LabelScheme) -> list[str]:
    """Pick, per token, the most probable scheme state among the preimages of its five-state label."""
    out = []
    for t, lab in enumerate(five_labels):
        cands = [k for k, s in enumerate(scheme.states) if scheme.to_five[s] == lab]
        k = max(cands, key=lambda k: (p[t, k], -k))
        out.append(scheme.states[k])
    return out


def decode(p: np.ndarray, scheme: LabelScheme, method: str = "dp") -> list[str]:
    """Labels in ``scheme`` for one sentence.

    ``argmax`` decodes in the full scheme and may be illegal. ``dp`` and
    ``ilp`` collapse to five states, decode under the five-state automaton
    and lift the result back; the lift is legal because larger schemes use
    the five-state automaton lifted through ``to_five``.
    """
    if method == "argmax":
        return argmax_decode(p, scheme.states)
    five = collapse_posteriors(p, scheme)
    if method == "dp":
        labels = constrained_decode_dp(five, FIVE_LEGALITY, FIVE_STATES)
    elif method == "ilp":
        labels = ilp_decode(five, FIVE_LEGALITY, FIVE_STATES)
    else:
        raise ValueError(f"unknown decoding method {method!r}; use one of {METHODS}")
    if scheme.name == FIVE.name:
        return labels
    return lift_labels(labels, p, scheme)
