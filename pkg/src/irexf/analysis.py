"""Capacity analysis: move costs, Markov source statistics, entropy and rate.

Also hosts the timing-regularity detector a defender could run against an
infrared sniffer: scripted transmitters fire commands at a near constant
pace, people do not.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .codec import plan_move
from .errors import DimensionMismatch, EmptyCorpus, InvalidSymbol, NotADistribution
from .ime import ALPHABET64, SYMBOL_INDEX, ImeLayout

N_SYMBOLS = len(ALPHABET64)


@dataclass(frozen=True)
class CostMatrix:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DimensionMismatch(f"cost matrix must be square, got {counts.shape}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def __getitem__(self, pair: tuple[str, str]) -> int:
        a, b = pair
        return int(self.counts[SYMBOL_INDEX[a], SYMBOL_INDEX[b]])

    def to_csv(self) -> str:
        header = ",".join(["from\\to"] + [str(j) for j in range(self.counts.shape[1])])
        rows = [",".join([str(i)] + [str(int(v)) for v in row]) for i, row in enumerate(self.counts)]
        return "\n".join([header] + rows) + "\n"


@dataclass(frozen=True)
class SourceModel:
    transition: np.ndarray
    stationary: np.ndarray

    @property
    def symbol_probs(self) -> np.ndarray:
        return self.stationary

    @classmethod
    def uniform(cls, n: int = N_SYMBOLS) -> "SourceModel":
        return cls(np.full((n, n), 1.0 / n), np.full(n, 1.0 / n))


@dataclass(frozen=True)
class RateQuery:
    n: float
    entropy_bits: float
    total_time_s: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.total_time_s <= 0:
            raise ValueError("total_time_s must be positive")


def cost_matrix(layout: ImeLayout) -> CostMatrix:
    counts = np.array(
        [[len(plan_move(layout, a, b)) for b in ALPHABET64] for a in ALPHABET64],
        dtype=np.int64,
    )
    return CostMatrix(counts)


def uniform_average(cost: CostMatrix) -> float:
    return float(np.mean(cost.counts))


def _stationary(P: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    # The lazy chain (I + P) / 2 shares P's stationary distribution but
    # cannot oscillate on periodic chains.
    lazy = 0.5 * (np.eye(n) + P)
    for _ in range(max_iter):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        pi = nxt
        if np.abs(pi @ P - pi).sum() < tol:
            break
    return pi


def markov_from_corpus(texts: Iterable[str]) -> SourceModel:
    """Bigram transition statistics over the 64-symbol alphabet.

    Rows for symbols never followed by anything stay uniform.  Transitions
    do not cross text boundaries.
    """
    counts = np.zeros((N_SYMBOLS, N_SYMBOLS), dtype=np.float64)
    for text in texts:
        try:
            idx = np.fromiter((SYMBOL_INDEX[ch] for ch in text), dtype=np.int64, count=len(text))
        except KeyError as exc:
            raise InvalidSymbol(f"{exc.args[0]!r} is not a payload symbol") from None
        if len(idx) >= 2:
            np.add.at(counts, (idx[:-1], idx[1:]), 1.0)
    if counts.sum() < 1:
        raise EmptyCorpus("corpus holds no symbol transitions")
    totals = counts.sum(axis=1, keepdims=True)
    P = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / N_SYMBOLS)
    return SourceModel(P, _stationary(P))


def entropy_bits(probs: Sequence[float]) -> float:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise NotADistribution("probabilities must be non-negative and sum to 1")
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log2(nz)))
    return h + 0.0  # normalise -0.0


def channel_rate(q: RateQuery) -> float:
    """Bits per second for ``n`` codewords of ``entropy_bits`` each in ``total_time_s``."""
    return q.n * q.entropy_bits / q.total_time_s


def expected_moves(source: SourceModel, cost: CostMatrix) -> float:
    P, pi, C = source.transition, source.stationary, cost.counts
    if P.shape != C.shape or pi.shape[0] != C.shape[0]:
        raise DimensionMismatch(f"source is {P.shape}, cost matrix is {C.shape}")
    return float(pi @ (P * C).sum(axis=1))


class TypingClass(str, enum.Enum):
    MACHINE = "MACHINE"
    HUMAN = "HUMAN"
    UNKNOWN = "UNKNOWN"


def detect_machine_typing(intervals_s: Sequence[float], machine_cv: float = 0.05,
                          human_cv: float = 0.20) -> TypingClass:
    """Classify a stream of inter-command gaps by its coefficient of variation."""
    gaps = [float(g) for g in intervals_s]
    if len(gaps) < 2:
        return TypingClass.UNKNOWN
    mean = statistics.fmean(gaps)
    if mean <= 0:
        return TypingClass.UNKNOWN
    cv = statistics.pstdev(gaps, mu=mean) / mean
    if cv < machine_cv:
        return TypingClass.MACHINE
    if cv > human_cv:
        return TypingClass.HUMAN
    return TypingClass.UNKNOWN


def base64_rate(cost: CostMatrix, per_command_s: float) -> float:
    """Rate for a uniformly distributed base64url source, one symbol at a time."""
    bits = math.log2(N_SYMBOLS)
    return channel_rate(RateQuery(1, bits, uniform_average(cost) * per_command_s))


def corpus_texts(raw: str) -> list[str]:
    """Split free text into maximal runs of payload symbols."""
    runs, current = [], []
    for ch in raw:
        if ch in SYMBOL_INDEX:
            current.append(ch)
        elif current:
            runs.append("".join(current))
            current = []
    if current:
        runs.append("".join(current))
    return runs


def sample_corpus() -> list[str]:
    raw = resources.files("irexf.data").joinpath("english_sample.txt").read_text(encoding="utf-8")
    return corpus_texts(raw)
