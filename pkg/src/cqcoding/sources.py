"""Stationary (and periodic) input processes over a finite alphabet.

Block marginals are dense probability vectors of length ``|A|**n`` indexed
lexicographically: sequence ``(x_1, ..., x_n)`` sits at index
``x_1 |A|^(n-1) + ... + x_n``, the same order as ``itertools.product``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .operators import check_size, shannon_entropy

PROB_ATOL = 1e-12
STATIONARY_ATOL = 1e-10


@dataclass(frozen=True)
class Alphabet:
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ValidationError("alphabet must be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("alphabet labels must be distinct")
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @classmethod
    def of_size(cls, size: int) -> "Alphabet":
        return cls(tuple(str(i) for i in range(size)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise DomainError(f"unknown symbol {label!r}") from None


def sequences(size: int, n: int) -> Iterator[tuple[int, ...]]:
    """All length-``n`` sequences in lexicographic (index) order."""
    return itertools.product(range(size), repeat=n)


def sequence_index(x: Sequence[int], size: int) -> int:
    idx = 0
    for s in x:
        idx = idx * size + int(s)
    return idx


def _prob_vector(p, name: str) -> np.ndarray:
    p = np.array(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a nonempty vector")
    if np.any(p < -PROB_ATOL) or abs(p.sum() - 1.0) > PROB_ATOL:
        raise ValidationError(f"{name} is not a probability vector")
    p = np.clip(p, 0.0, None)
    p.setflags(write=False)
    return p


def _stochastic(q, name: str) -> np.ndarray:
    q = np.array(q, dtype=float)
    if q.ndim != 2:
        raise ValidationError(f"{name} must be a matrix")
    if np.any(q < -PROB_ATOL) or np.any(np.abs(q.sum(axis=1) - 1.0) > PROB_ATOL):
        raise ValidationError(f"{name} rows are not probability vectors")
    q = np.clip(q, 0.0, None)
    q.setflags(write=False)
    return q


def lift_transition(transition: np.ndarray, size: int, order: int) -> np.ndarray:
    """First-order chain on ``A^order`` equivalent to an order-``order`` chain.

    ``transition[c, a]`` is the probability of ``a`` after context ``c``
    (lexicographic index into ``A^order``).
    """
    k = size**order
    lifted = np.zeros((k, k))
    for c in range(k):
        shifted = (c * size) % k
        lifted[c, shifted:shifted + size] = transition[c]
    return lifted


def stationary_distribution(transition: np.ndarray, max_iter: int = 100_000) -> np.ndarray:
    """Stationary vector of an irreducible chain.

    Uses the eigenvector of ``Q^T`` at eigenvalue 1 and falls back to Cesàro
    power iteration. Raises :class:`DomainError` if eigenvalue 1 is degenerate,
    i.e. the chain is reducible and the stationary vector is ambiguous.
    """
    q = np.asarray(transition, dtype=float)
    w, v = np.linalg.eig(q.T)
    ones = np.flatnonzero(np.abs(w - 1.0) < 1e-9)
    if ones.size > 1:
        raise DomainError("reducible chain: stationary vector must be supplied")
    if ones.size == 1:
        pi = np.real(v[:, ones[0]])
        pi = pi / pi.sum()
        if np.all(pi > -1e-12):
            pi = np.clip(pi, 0.0, None)
            pi /= pi.sum()
            if np.allclose(pi @ q, pi, atol=STATIONARY_ATOL, rtol=0):
                return pi
    pi = np.full(q.shape[0], 1.0 / q.shape[0])
    acc = np.zeros_like(pi)
    for it in range(1, max_iter + 1):
        acc += pi
        pi = pi @ q
        avg = acc / it
        if it % 64 == 0 and np.allclose(avg @ q, avg, atol=STATIONARY_ATOL / 10, rtol=0):
            return avg / avg.sum()
    raise DomainError("power iteration did not find a stationary vector")


class InputProcess:
    """Interface of an input process: exact block marginals and entropy rate."""

    alphabet: Alphabet
    kind: str = "abstract"

    @property
    def size(self) -> int:
        return self.alphabet.size

    def block_marginal(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def entropy_rate(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _check_n(self, n: int) -> None:
        if n < 0:
            raise DomainError("block length must be nonnegative")
        check_size(self.size**n, "block table size")


@dataclass(frozen=True)
class IIDProcess(InputProcess):
    probs: np.ndarray
    alphabet: Alphabet = None
    kind: str = field(default="iid", init=False)

    def __post_init__(self):
        p = _prob_vector(self.probs, "probs")
        object.__setattr__(self, "probs", p)
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", Alphabet.of_size(p.size))
        if self.alphabet.size != p.size:
            raise ValidationError("alphabet size does not match probs")

    def block_marginal(self, n: int) -> np.ndarray:
        self._check_n(n)
        out = np.ones(1)
        for _ in range(n):
            out = np.outer(out, self.probs).ravel()
        return out

    def entropy_rate(self) -> float:
        return shannon_entropy(self.probs)

    def to_dict(self) -> dict:
        return {"kind": "iid", "probs": self.probs.tolist(),
                "labels": list(self.alphabet.labels)}


@dataclass(frozen=True)
class MarkovProcess(InputProcess):
    """Stationary Markov chain of finite order.

    ``transition`` has shape ``(|A|**order, |A|)``; row ``c`` is the law of the
    next symbol given the previous ``order`` symbols (lexicographic index).
    ``stationary`` is the law of ``order`` consecutive symbols; if omitted it
    is computed, which fails for reducible chains.
    """

    transition: np.ndarray
    stationary: np.ndarray | None = None
    order: int = 1
    alphabet: Alphabet = None
    kind: str = field(default="markov", init=False)

    def __post_init__(self):
        q = _stochastic(self.transition, "transition")
        size = q.shape[1]
        if self.order < 1 or q.shape[0] != size**self.order:
            raise ValidationError("transition must have shape (|A|**order, |A|)")
        object.__setattr__(self, "transition", q)
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", Alphabet.of_size(size))
        if self.alphabet.size != size:
            raise ValidationError("alphabet size does not match transition")
        lifted = self.lifted_transition()
        if self.stationary is None:
            pi = stationary_distribution(lifted)
        else:
            pi = _prob_vector(self.stationary, "stationary")
            if pi.size != lifted.shape[0]:
                raise ValidationError("stationary vector has the wrong length")
        if np.max(np.abs(pi @ lifted - pi)) > STATIONARY_ATOL:
            raise ValidationError("stationary vector is not invariant")
        pi = np.array(pi)
        pi.setflags(write=False)
        object.__setattr__(self, "stationary", pi)

    def lifted_transition(self) -> np.ndarray:
        return lift_transition(self.transition, self.size, self.order)

    def block_marginal(self, n: int) -> np.ndarray:
        self._check_n(n)
        k, size = self.order, self.size
        if n <= k:
            return self.stationary.reshape(size**n, size ** (k - n)).sum(axis=1)
        p = np.array(self.stationary)
        ctx = size**k
        for m in range(k, n):
            idx = np.arange(size**m) % ctx
            p = (p[:, None] * self.transition[idx]).ravel()
        return p

    def entropy_rate(self) -> float:
        return float(sum(pc * shannon_entropy(row)
                         for pc, row in zip(self.stationary, self.transition)))

    def to_dict(self) -> dict:
        return {"kind": "markov", "order": self.order,
                "transition": self.transition.tolist(),
                "stationary": self.stationary.tolist(),
                "labels": list(self.alphabet.labels)}


@dataclass(frozen=True)
class PeriodicProductProcess(InputProcess):
    """Independent repetitions of a block law on ``A^period``.

    Position 1 is the first site of a block (phase 0). The process is
    ``period``-periodic but in general not shift invariant.
    """

    block_dist: np.ndarray
    period: int
    alphabet: Alphabet = None
    kind: str = field(default="periodic_product", init=False)

    def __post_init__(self):
        p = _prob_vector(self.block_dist, "block_dist")
        object.__setattr__(self, "block_dist", p)
        if self.period < 1:
            raise ValidationError("period must be positive")
        size = round(p.size ** (1.0 / self.period))
        if size**self.period != p.size:
            for s in range(1, p.size + 1):
                if s**self.period == p.size:
                    size = s
                    break
            else:
                raise ValidationError("block_dist length is not |A|**period")
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", Alphabet.of_size(size))
        if self.alphabet.size**self.period != p.size:
            raise ValidationError("alphabet size does not match block_dist")

    def phase_marginal(self, n: int, phase: int = 0) -> np.ndarray:
        """Law of ``n`` consecutive symbols starting ``phase`` sites into a block."""
        self._check_n(n + phase)
        t, size = self.period, self.size
        length = phase + n
        blocks = math.ceil(length / t) if length else 0
        p = np.ones(1)
        for _ in range(blocks):
            p = np.outer(p, self.block_dist).ravel()
        tail = blocks * t - length
        p = p.reshape(size**phase, size**n, size**tail).sum(axis=(0, 2))
        return p

    def block_marginal(self, n: int) -> np.ndarray:
        return self.phase_marginal(n, 0)

    def entropy_rate(self) -> float:
        return shannon_entropy(self.block_dist) / self.period

    def to_dict(self) -> dict:
        return {"kind": "periodic_product", "period": self.period,
                "block_dist": self.block_dist.tolist(),
                "labels": list(self.alphabet.labels)}


@dataclass(frozen=True)
class ShiftAveragedProcess(InputProcess):
    """Uniform mixture of the ``period`` phase shifts of a periodic product law."""

    base: PeriodicProductProcess
    kind: str = field(default="shift_average", init=False)

    @property
    def alphabet(self) -> Alphabet:
        return self.base.alphabet

    def block_marginal(self, n: int) -> np.ndarray:
        t = self.base.period
        return sum(self.base.phase_marginal(n, i) for i in range(t)) / t

    def entropy_rate(self) -> float:
        return self.base.entropy_rate()

    def to_dict(self) -> dict:
        return {"kind": "shift_average", "base": self.base.to_dict()}


def block_marginal(p: InputProcess, n: int) -> np.ndarray:
    return p.block_marginal(n)


def entropy_rate(p: InputProcess) -> float:
    """Shannon entropy rate in bits per site."""
    return p.entropy_rate()


def shift_average(p: InputProcess) -> InputProcess:
    """Stationary shift-average of a periodic product process.

    Shift-invariant processes are returned unchanged.
    """
    if isinstance(p, PeriodicProductProcess):
        if p.period == 1:
            return IIDProcess(p.block_dist, p.alphabet)
        return ShiftAveragedProcess(p)
    if isinstance(p, (IIDProcess, MarkovProcess, ShiftAveragedProcess)):
        return p
    raise DomainError(f"cannot shift-average a {type(p).__name__}")


def process_from_dict(desc: dict) -> InputProcess:
    """Build a process from its JSON description."""
    kind = desc.get("kind")
    labels = desc.get("labels")
    alphabet = Alphabet(tuple(labels)) if labels is not None else None
    if kind == "iid":
        return IIDProcess(desc["probs"], alphabet)
    if kind == "markov":
        return MarkovProcess(desc["transition"], desc.get("stationary"),
                             int(desc.get("order", 1)), alphabet)
    if kind == "periodic_product":
        return PeriodicProductProcess(desc["block_dist"], int(desc["period"]), alphabet)
    if kind == "shift_average":
        base = process_from_dict(desc["base"])
        return shift_average(base)
    raise ValidationError(f"unknown process kind {kind!r}")
