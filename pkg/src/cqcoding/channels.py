"""Classical-quantum block channels ``x^n -> D_{x^n}``.

Every channel here is described by

* window signal states ``D'_w`` on the input site space, indexed by the
  current letter and the ``memory`` letters before it (``memory = 0`` gives
  one state per letter), and
* a stationary Markov noise process selecting, at every site, a CPTP map
  ``E'_y`` that is applied to that site's signal state.

The memoryless, Markov-correlated-noise, finite-memory and classical kinds are
special cases. Maps are stored on the state side (Schrödinger picture).
Block states are computed with the transfer recursion

    Phi_k[y] = (sum_y' Q(y|y') Phi_{k-1}[y']) ⊗ E'_y(D'_{w_k}),

started from ``Phi_1[y] = q(y) E'_y(D'_{w_1})``; the output is ``sum_y Phi_n[y]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedError, ValidationError
from .operators import (
    as_density,
    as_hermitian,
    check_size,
    hermitize,
    matrix_from_json,
    matrix_to_json,
    trace_distance_unchecked,
)
from .sources import Alphabet, MarkovProcess, lift_transition, sequence_index, sequences

KRAUS_ATOL = 1e-10


@dataclass(frozen=True)
class CPTPMap:
    """Trace-preserving completely positive map given by Kraus operators."""

    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ValidationError("a CPTP map needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ops):
            raise ValidationError("Kraus operators must share one 2-d shape")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(shape[1]))) > KRAUS_ATOL:
            raise ValidationError("Kraus operators are not trace preserving")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @property
    def input_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return hermitize(sum(k @ rho @ k.conj().T for k in self.kraus))

    @classmethod
    def identity(cls, dim: int) -> "CPTPMap":
        return cls((np.eye(dim),))

    @classmethod
    def unitary(cls, u) -> "CPTPMap":
        return cls((np.asarray(u),))

    @classmethod
    def depolarizing(cls, dim: int, p: float) -> "CPTPMap":
        """``rho -> (1 - p) rho + p tr(rho) 1/dim`` via the Weyl operator basis."""
        if not 0 <= p <= 1 + 1 / (dim * dim - 1):
            raise ValidationError("depolarizing parameter out of range")
        omega = np.exp(2j * np.pi / dim)
        shift = np.roll(np.eye(dim), 1, axis=0)
        clock = np.diag(omega ** np.arange(dim))
        ops = []
        for a in range(dim):
            for b in range(dim):
                w = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
                weight = 1 - p + p / dim**2 if a == b == 0 else p / dim**2
                ops.append(math.sqrt(weight) * w)
        return cls(tuple(ops))

    @classmethod
    def dephasing(cls, p: float) -> "CPTPMap":
        z = np.diag([1.0, -1.0])
        return cls((math.sqrt(1 - p) * np.eye(2), math.sqrt(p) * z))

    @classmethod
    def amplitude_damping(cls, gamma: float) -> "CPTPMap":
        k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]])
        k1 = np.array([[0, math.sqrt(gamma)], [0, 0]])
        return cls((k0, k1))

    def to_json(self) -> list:
        return [matrix_to_json(k) for k in self.kraus]


@dataclass(frozen=True)
class MarkovNoise:
    """Stationary first-order Markov chain on noise symbols with one map each."""

    transition: np.ndarray
    maps: tuple
    stationary: np.ndarray | None = None

    def __post_init__(self):
        chain = MarkovProcess(self.transition, self.stationary)
        maps = tuple(self.maps)
        if len(maps) != chain.size:
            raise ValidationError("need one CPTP map per noise symbol")
        dims = {(m.input_dim, m.output_dim) for m in maps}
        if len(dims) != 1:
            raise ValidationError("noise maps must share input and output dimensions")
        object.__setattr__(self, "transition", chain.transition)
        object.__setattr__(self, "stationary", chain.stationary)
        object.__setattr__(self, "maps", maps)

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def input_dim(self) -> int:
        return self.maps[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.maps[0].output_dim

    @classmethod
    def trivial(cls, dim: int) -> "MarkovNoise":
        return cls(np.ones((1, 1)), (CPTPMap.identity(dim),))

    @classmethod
    def constant(cls, cptp: CPTPMap) -> "MarkovNoise":
        return cls(np.ones((1, 1)), (cptp,))

    @classmethod
    def of_order(cls, transition, maps: Sequence[CPTPMap], order: int,
                 stationary=None) -> "MarkovNoise":
        """Order-``order`` noise chain flattened to first order on ``I^order``.

        The map applied in flattened state ``(y_1, ..., y_order)`` is the one of
        the most recent symbol ``y_order``.
        """
        size = len(maps)
        lifted = lift_transition(np.asarray(transition, float), size, order)
        flat_maps = tuple(maps[c % size] for c in range(size**order))
        return cls(lifted, flat_maps, stationary)

    def second_eigenvalue(self) -> float:
        """Modulus of the subdominant eigenvalue of the transition matrix."""
        w = np.sort(np.abs(np.linalg.eigvals(self.transition)))[::-1]
        return float(w[1]) if w.size > 1 else 0.0


@dataclass(frozen=True)
class CqBlockChannel:
    """A stationary cq-channel with finite input memory and Markov noise.

    Args:
        alphabet: Input alphabet ``A``.
        window_states: Array of shape ``(|A|**(memory+1), d_in, d_in)``; entry
            ``w`` is the signal state for the window of the current letter and
            the ``memory`` letters before it (lexicographic, oldest first).
        noise: Noise process; its maps act ``d_in -> d_out``.
        memory: Number of past letters influencing a site.
        kind: Descriptive tag used for serialization.
    """

    alphabet: Alphabet
    window_states: np.ndarray
    noise: MarkovNoise
    memory: int = 0
    kind: str = "memoryless"
    _emitted: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        states = np.array(self.window_states, dtype=complex)
        size = self.alphabet.size
        if states.ndim != 3 or states.shape[0] != size ** (self.memory + 1):
            raise ValidationError("window_states must have shape (|A|**(m+1), d, d)")
        states = np.stack([as_density(s) for s in states])
        if states.shape[1] != self.noise.input_dim:
            raise DimensionError("signal states and noise maps have different dimensions")
        states.setflags(write=False)
        object.__setattr__(self, "window_states", states)
        emitted = np.stack([[m.apply(s) for s in states] for m in self.noise.maps])
        emitted.setflags(write=False)
        object.__setattr__(self, "_emitted", emitted)

    @property
    def site_dim(self) -> int:
        return self.noise.output_dim

    @property
    def size(self) -> int:
        return self.alphabet.size

    def _windows(self, x: Sequence[int], context: Sequence[int] | None) -> list[int]:
        x = [self._symbol(s) for s in x]
        m = self.memory
        if m == 0:
            return x
        if context is None:
            raise DomainError(f"channel has memory {m}: a length-{m} context is required")
        context = [self._symbol(s) for s in context]
        if len(context) != m:
            raise DomainError(f"context must have length {m}")
        full = context + x
        return [sequence_index(full[i:i + m + 1], self.size) for i in range(len(x))]

    def _symbol(self, s) -> int:
        if isinstance(s, (int, np.integer)) and 0 <= s < self.size:
            return int(s)
        if isinstance(s, str):
            return self.alphabet.index(s)
        raise DomainError(f"unknown symbol {s!r}")

    def output_state(self, x: Sequence, context: Sequence | None = None) -> np.ndarray:
        """Density operator of the outputs on the block carrying ``x``.

        ``context`` holds the ``memory`` letters preceding the block.
        """
        windows = self._windows(x, context)
        n = len(windows)
        if n == 0:
            return np.ones((1, 1), dtype=complex)
        check_size(self.site_dim**n)
        q = self.noise.transition
        e = self._emitted
        phi = self.noise.stationary[:, None, None] * e[:, windows[0]]
        for w in windows[1:]:
            psi = np.tensordot(q.T, phi, axes=1)
            phi = np.stack([np.kron(psi[y], e[y, w]) for y in range(e.shape[0])])
        return hermitize(phi.sum(axis=0))

    def block_states(self, n: int, context: Sequence | None = None) -> list[np.ndarray]:
        """Output states for every ``x`` in ``A^n`` in lexicographic order."""
        check_size(self.size**n, "input block count")
        return [self.output_state(x, context) for x in sequences(self.size, n)]

    def expectation(self, x: Sequence, segments: Sequence[tuple[int, np.ndarray]],
                    context: Sequence | None = None) -> complex:
        """``W(x, o_1 ⊗ 1 ⊗ o_2 ⊗ ...)`` without building the block state.

        ``segments`` lists ``(start_site, operator)`` pairs: 0-based start,
        operator on whole consecutive sites, non-overlapping. Unlisted sites
        carry the identity, across which only the noise chain advances.
        """
        windows = self._windows(x, context)
        d = self.site_dim
        spans = []
        for start, op in sorted(segments, key=lambda s: s[0]):
            op = np.asarray(op, dtype=complex)
            k = _sites_of(op.shape, d)
            if spans and start < spans[-1][1]:
                raise DimensionError("segments overlap")
            spans.append((start, start + k, op))
        if spans and spans[-1][1] > len(windows):
            raise DimensionError("segments extend beyond the input block")
        q = self.noise.transition
        e = self._emitted
        # u: weights over the noise symbol of the next unprocessed site
        u = np.asarray(self.noise.stationary, dtype=complex)
        pos = 0
        for start, stop, op in spans:
            if start > pos:
                u = u @ np.linalg.matrix_power(q, start - pos)
            phi = u[:, None, None] * e[:, windows[start]]
            for i in range(start + 1, stop):
                psi = np.tensordot(q.T, phi, axes=1)
                phi = np.stack([np.kron(psi[y], e[y, windows[i]])
                                for y in range(e.shape[0])])
            u = np.einsum("yij,ji->y", phi, op) @ q
            pos = stop
        return complex(u.sum())

    def to_dict(self) -> dict:
        return channel_to_dict(self)


def _sites_of(shape: tuple, d: int) -> int:
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionError("observable must be square")
    k = 0
    dim = shape[0]
    while dim > 1 and dim % d == 0:
        dim //= d
        k += 1
    if dim != 1 or k == 0:
        raise DimensionError(f"dimension {shape[0]} is not a positive power of {d}")
    return k


def _alphabet(size_or_labels) -> Alphabet:
    if isinstance(size_or_labels, Alphabet):
        return size_or_labels
    if isinstance(size_or_labels, int):
        return Alphabet.of_size(size_or_labels)
    return Alphabet(tuple(size_or_labels))


def _build(signals, noise, memory, kind, alphabet) -> CqBlockChannel:
    states = np.array([np.asarray(sig, dtype=complex) for sig in signals])
    if alphabet is None:
        alphabet = round(len(states) ** (1.0 / (memory + 1)))
    noise = MarkovNoise.trivial(states.shape[1]) if noise is None else noise
    return CqBlockChannel(_alphabet(alphabet), states, noise, memory, kind)


def memoryless(signals: Sequence, alphabet=None) -> CqBlockChannel:
    """Memoryless channel ``a -> D_a`` (outputs are tensor products)."""
    return _build(signals, None, 0, "memoryless", alphabet)


def markov_noise(signals: Sequence, noise: MarkovNoise, alphabet=None) -> CqBlockChannel:
    """Channel with Markov-correlated noise acting on signal states ``D'_a``."""
    return _build(signals, noise, 0, "markov_noise", alphabet)


def finite_memory(window_signals: Sequence, memory: int, noise: MarkovNoise | None = None,
                  alphabet=None) -> CqBlockChannel:
    """Channel whose site state depends on the last ``memory + 1`` letters.

    ``window_signals`` is indexed lexicographically by ``(x_{i-m}, ..., x_i)``.
    """
    return _build(window_signals, noise, memory, "finite_memory", alphabet)


def classical(stochastic, alphabet=None) -> CqBlockChannel:
    """Classical channel ``W(b|a)`` embedded as diagonal output states."""
    w = np.asarray(stochastic, dtype=float)
    if w.ndim != 2 or np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1) > 1e-12):
        raise ValidationError("stochastic matrix rows must be probability vectors")
    return _build([np.diag(row) for row in w], None, 0, "classical", alphabet)


def from_quantum_channel(ensemble: Sequence[tuple[float, np.ndarray]],
                         site_maps: CPTPMap | MarkovNoise) -> CqBlockChannel:
    """cq-channel induced by feeding product ensemble states into a quantum channel.

    Letter ``i`` of the new alphabet stands for ensemble state ``phi_i``; the
    block output of ``x`` is the image of ``phi_{x_1} ⊗ ... ⊗ phi_{x_n}``.
    ``site_maps`` is either one CPTP map applied at every site or a Markov
    noise description. The ensemble weights define the product input law and
    are only validated here.
    """
    probs = np.array([p for p, _ in ensemble], dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
        raise ValidationError("ensemble weights must form a probability vector")
    states = [as_density(s) for _, s in ensemble]
    if isinstance(site_maps, CPTPMap):
        site_maps = MarkovNoise.constant(site_maps)
    if any(s.shape[0] != site_maps.input_dim for s in states):
        raise DimensionError("ensemble states do not match the channel input dimension")
    kind = "markov_noise" if site_maps.size > 1 else "memoryless"
    return _build(states, site_maps, 0, kind, None)


def block_output_state(ch: CqBlockChannel, x: Sequence, context: Sequence | None = None):
    return ch.output_state(x, context)


def mixing_defect(ch: CqBlockChannel, x: Sequence, b1, b2, gap: int,
                  context: Sequence | None = None) -> float:
    """``|W(x, b1 ⊗ 1^gap ⊗ b2) - W(x, b1 ⊗ 1) W(x, 1 ⊗ b2)|``.

    ``b1`` and ``b2`` act on ``k`` consecutive sites; ``b2`` starts ``gap``
    sites after ``b1`` ends. Only the first ``2k + gap`` letters of ``x`` are
    used.
    """
    b1 = as_hermitian(b1)
    b2 = as_hermitian(b2)
    k = _sites_of(b1.shape, ch.site_dim)
    if _sites_of(b2.shape, ch.site_dim) != k:
        raise DimensionError("b1 and b2 must act on the same number of sites")
    length = 2 * k + gap
    if len(x) < length:
        raise DomainError(f"need at least {length} input letters")
    check_size(ch.site_dim**k, "observable dimension")
    x = list(x)[:length]
    joint = ch.expectation(x, [(0, b1), (k + gap, b2)], context)
    first = ch.expectation(x, [(0, b1)], context)
    second = ch.expectation(x, [(k + gap, b2)], context)
    return float(abs(joint - first * second))


def cesaro_mixing_defect(ch: CqBlockChannel, x: Sequence, b1, b2, terms: int,
                         context: Sequence | None = None) -> float:
    """Cesàro average of :func:`mixing_defect` over gaps ``0 .. terms-1``."""
    return float(np.mean([mixing_defect(ch, x, b1, b2, g, context)
                          for g in range(terms)]))


def memory_decay_profile(ch: CqBlockChannel, n: int, window: int) -> list[float]:
    """Worst-case output distance between contexts that agree on a suffix.

    Entry ``w`` (for ``w = 0 .. window``) is the largest variational distance
    between the ``n``-block outputs for contexts in ``A^memory`` that agree on
    their last ``w`` letters, maximized over the block input as well.
    """
    if not isinstance(ch, CqBlockChannel):
        raise UnsupportedError("memory profiles need a finite-memory channel")
    m = ch.memory
    profile = [0.0] * (window + 1)
    if m == 0:
        return profile
    check_size(ch.size ** (m + n), "context-block enumeration")
    contexts = list(sequences(ch.size, m))
    for x in sequences(ch.size, n):
        outs = [ch.output_state(x, c) for c in contexts]
        for i, j in itertools.combinations(range(len(contexts)), 2):
            ci, cj = contexts[i], contexts[j]
            agree = 0
            while agree < m and ci[m - 1 - agree] == cj[m - 1 - agree]:
                agree += 1
            dist = trace_distance_unchecked(outs[i], outs[j])
            for w in range(min(agree, window) + 1):
                profile[w] = max(profile[w], dist)
    return profile


def channel_to_dict(ch: CqBlockChannel) -> dict:
    labels = list(ch.alphabet.labels)
    noise = ch.noise
    out = {"kind": ch.kind, "labels": labels, "memory": ch.memory}
    if ch.kind == "classical":
        out["stochastic"] = [np.real(np.diag(s)).tolist() for s in ch.window_states]
        return out
    if ch.memory == 0:
        out["signals"] = {a: matrix_to_json(s) for a, s in zip(labels, ch.window_states)}
    else:
        out["window_signals"] = [
            {"window": [labels[i] for i in w], "state": matrix_to_json(s)}
            for w, s in zip(sequences(ch.size, ch.memory + 1), ch.window_states)]
    if noise.size > 1 or ch.kind in ("markov_noise",) or not _is_identity(noise):
        out["noise_symbols"] = [str(i) for i in range(noise.size)]
        out["transition"] = noise.transition.tolist()
        out["stationary"] = noise.stationary.tolist()
        out["kraus"] = {str(i): m.to_json() for i, m in enumerate(noise.maps)}
    return out


def _is_identity(noise: MarkovNoise) -> bool:
    m = noise.maps[0]
    return (noise.size == 1 and len(m.kraus) == 1 and m.input_dim == m.output_dim
            and np.allclose(m.kraus[0], np.eye(m.input_dim)))


def channel_from_dict(desc: dict) -> CqBlockChannel:
    """Build a channel from its JSON description.

    Recognized kinds: ``memoryless``, ``classical``, ``markov_noise`` and
    ``finite_memory``. Noise is given by ``noise_symbols``, ``transition``,
    optional ``stationary`` and ``kraus`` (symbol -> list of matrices).
    """
    kind = desc.get("kind")
    if kind == "classical":
        return classical(desc["stochastic"], desc.get("labels"))
    noise = None
    if "kraus" in desc:
        symbols = desc.get("noise_symbols") or list(desc["kraus"].keys())
        maps = [CPTPMap(tuple(matrix_from_json(k) for k in desc["kraus"][str(y)]))
                for y in symbols]
        order = int(desc.get("noise_order", 1))
        if order > 1:
            noise = MarkovNoise.of_order(desc["transition"], maps, order, desc.get("stationary"))
        else:
            noise = MarkovNoise(np.asarray(desc["transition"], float), tuple(maps),
                                desc.get("stationary"))
    if kind in ("memoryless", "markov_noise"):
        signals = desc["signals"]
        labels = desc.get("labels") or list(signals.keys())
        states = [matrix_from_json(signals[a]) for a in labels]
        if kind == "markov_noise" and noise is None:
            raise ValidationError("markov_noise channel needs transition and kraus")
        return _build(states, noise, 0, kind, labels)
    if kind == "finite_memory":
        m = int(desc["memory"])
        labels = desc.get("labels")
        entries = desc["window_signals"]
        if labels is None:
            labels = sorted({s for e in entries for s in e["window"]})
        alphabet = Alphabet(tuple(labels))
        table = {}
        for e in entries:
            w = tuple(alphabet.index(s) for s in e["window"])
            if len(w) != m + 1:
                raise ValidationError("every window must have memory + 1 letters")
            table[w] = matrix_from_json(e["state"])
        try:
            states = [table[w] for w in sequences(alphabet.size, m + 1)]
        except KeyError as exc:
            raise ValidationError(f"missing window {exc.args[0]}") from None
        return finite_memory(states, m, noise, alphabet)
    raise ValidationError(f"unknown channel kind {kind!r}")
