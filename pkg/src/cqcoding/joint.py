"""Block-diagonal joint input-output states and Holevo quantities.

The joint state ``sum_x p(x) |x><x| ⊗ D_x`` is stored as its blocks; the
``|A|^n d^n`` matrix is only built by :meth:`JointBlockState.to_dense`, which
exists for test oracles.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .channels import CqBlockChannel
from .errors import DomainError, ResourceError
from .operators import (
    Spectrum,
    check_size,
    entropy_of_weights,
    hermitize,
    shannon_entropy,
)
from .sources import InputProcess, sequence_index, sequences

SUPPORT_TOL = 0.0


@dataclass(frozen=True)
class JointBlockState:
    """Weighted list of ``(x^n, p(x^n), D_{x^n})`` over the support of ``p^n``."""

    n: int
    sequences: tuple
    probs: np.ndarray
    states: tuple
    alphabet_size: int
    site_dim: int

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if abs(probs.sum() - 1.0) > 1e-10:
            raise DomainError("block weights do not sum to 1")
        if len(set(self.sequences)) != len(self.sequences):
            raise DomainError("block sequences must be distinct")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_index", {x: i for i, x in enumerate(self.sequences)})

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def output_dim(self) -> int:
        return self.site_dim**self.n

    def output_state(self, x: Sequence[int]) -> np.ndarray:
        """``D_x`` for a supported sequence; lets the state act as a block map."""
        try:
            return self.states[self._index[tuple(x)]]
        except KeyError:
            raise DomainError(f"sequence {tuple(x)} has probability 0") from None

    def probability(self, x: Sequence[int]) -> float:
        i = self._index.get(tuple(x))
        return 0.0 if i is None else float(self.probs[i])

    @cached_property
    def spectra(self) -> tuple[Spectrum, ...]:
        """Eigen-decomposition of every block state, largest eigenvalue first."""
        out = []
        for d in self.states:
            w, v = np.linalg.eigh(d)
            out.append(Spectrum(np.clip(w[::-1], 0.0, 1.0), v[:, ::-1]))
        return tuple(out)

    @cached_property
    def average_state(self) -> np.ndarray:
        """Output marginal ``D_q(p) = sum_x p(x) D_x``."""
        acc = np.zeros((self.output_dim, self.output_dim), dtype=complex)
        for p, d in zip(self.probs, self.states):
            acc += p * d
        return hermitize(acc)

    def joint_eigenvalues(self) -> np.ndarray:
        """Spectrum of the joint operator: all products ``p(x) lambda_j(D_x)``."""
        return np.concatenate([p * s.eigenvalues for p, s in zip(self.probs, self.spectra)])

    def to_dense(self) -> np.ndarray:
        """Materialize the full ``|A|^n d^n`` joint density matrix (tests only)."""
        big = self.alphabet_size**self.n
        check_size(big * self.output_dim)
        out = np.zeros((big * self.output_dim,) * 2, dtype=complex)
        dim = self.output_dim
        for x, p, d in zip(self.sequences, self.probs, self.states):
            i = sequence_index(x, self.alphabet_size) * dim
            out[i:i + dim, i:i + dim] = p * d
        return out


class EntropyTriple(NamedTuple):
    s_input: float
    s_output: float
    s_joint: float

    @property
    def chi(self) -> float:
        return self.s_input + self.s_output - self.s_joint


class InducedChannel:
    """Context-averaged block channel ``x^n -> psi_{p,W}(|x><x| ⊗ .) / p^n(x)``.

    For a channel with memory ``m`` the ``m`` letters before the block are
    averaged with the law of ``p`` on ``m + n`` consecutive sites (contexts
    first). For memoryless-input (IMC) channels this is the channel itself.
    """

    def __init__(self, process: InputProcess, channel: CqBlockChannel, n: int):
        self.process = process
        self.channel = channel
        self.n = n
        self.memory = channel.memory
        m = channel.memory
        check_size(process.size ** (m + n), "context-block table")
        joint = process.block_marginal(m + n).reshape(process.size**m, process.size**n)
        self._context_weights = joint
        self._marginal = joint.sum(axis=0)
        self._contexts = list(sequences(process.size, m))

    @property
    def site_dim(self) -> int:
        return self.channel.site_dim

    def probability(self, x: Sequence[int]) -> float:
        return float(self._marginal[sequence_index(x, self.process.size)])

    @property
    def support(self) -> list[tuple[int, ...]]:
        return [x for x, p in zip(sequences(self.process.size, self.n), self._marginal)
                if p > SUPPORT_TOL]

    def context_weights(self, x: Sequence[int]) -> list[tuple[tuple, float]]:
        """Conditional law of the preceding context given block ``x``."""
        col = sequence_index(x, self.process.size)
        px = self._marginal[col]
        if px <= SUPPORT_TOL:
            raise DomainError(f"sequence {tuple(x)} has probability 0")
        return [(c, w / px) for c, w in zip(self._contexts, self._context_weights[:, col])
                if w > 0]

    def output_state(self, x: Sequence[int]) -> np.ndarray:
        x = tuple(int(s) for s in x)
        if len(x) != self.n:
            raise DomainError(f"expected a block of length {self.n}")
        if self.memory == 0:
            if self.probability(x) <= SUPPORT_TOL:
                raise DomainError(f"sequence {x} has probability 0")
            return self.channel.output_state(x)
        acc = None
        for c, w in self.context_weights(x):
            d = w * self.channel.output_state(x, c)
            acc = d if acc is None else acc + d
        return hermitize(acc)


def induced_channel_block(p: InputProcess, ch: CqBlockChannel, n: int) -> InducedChannel:
    return InducedChannel(p, ch, n)


def build_joint(p: InputProcess, ch: CqBlockChannel, n: int, workers: int = 1) -> JointBlockState:
    """Joint state of input law ``p^n`` and the (induced) block channel."""
    if p.size != ch.size:
        raise DomainError("process and channel alphabets differ")
    check_size(ch.site_dim**n)
    check_size(p.size**n, "input block count")
    induced = InducedChannel(p, ch, n)
    marg = induced._marginal
    support = [x for x, w in zip(sequences(p.size, n), marg) if w > SUPPORT_TOL]
    weights = np.array([marg[sequence_index(x, p.size)] for x in support])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            states = list(pool.map(induced.output_state, support))
    else:
        states = [induced.output_state(x) for x in support]
    return JointBlockState(n, tuple(support), weights / weights.sum(), tuple(states),
                           p.size, ch.site_dim)


def entropies(j: JointBlockState) -> EntropyTriple:
    """Block entropies of the input, output and joint states (bits per block)."""
    s_in = shannon_entropy(j.probs)
    s_out = entropy_of_weights(np.linalg.eigvalsh(j.average_state))
    s_cond = float(sum(p * entropy_of_weights(s.eigenvalues)
                       for p, s in zip(j.probs, j.spectra)))
    return EntropyTriple(s_in, s_out, s_in + s_cond)


def holevo_information(j: JointBlockState) -> float:
    """``S(sum p D_x) - sum p S(D_x)`` in bits."""
    e = entropies(j)
    return max(e.chi, 0.0)


def entropy_record(j: JointBlockState) -> dict:
    e = entropies(j)
    chi = max(e.chi, 0.0)
    return {"n": j.n, "s_input": e.s_input, "s_output": e.s_output,
            "s_joint": e.s_joint, "chi": chi, "chi_per_site": chi / j.n}


def information_rate_sequence(p: InputProcess, ch: CqBlockChannel,
                              n_max: int) -> list[tuple[int, float]]:
    """Per-site Holevo rates ``chi(p^n, W^n)/n`` for ``n = 1 .. n_max``.

    Stops early with a :class:`ResourceWarning` when a block exceeds the
    dimension cap.
    """
    out = []
    for n in range(1, n_max + 1):
        try:
            j = build_joint(p, ch, n)
        except ResourceError as exc:
            warnings.warn(f"information rates truncated at n={n - 1}: {exc}",
                          ResourceWarning, stacklevel=2)
            break
        out.append((n, holevo_information(j) / n))
    return out
