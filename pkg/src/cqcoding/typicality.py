"""Entropy-typical projections and the conditional typicality pipeline.

Every projection of the pipeline commutes with the classical register, so
it is stored per input block as a matrix ``F`` of orthonormal columns with
projection ``F F*``. Only the output typical projection is a dense object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, DomainError, InvariantError
from .joint import JointBlockState, build_joint, entropies
from .operators import (
    BOUND_SLACK,
    RANGE_REL_TOL,
    Spectrum,
    as_density,
    as_projection,
    entropy_of_weights,
    hermitize,
    positive_entropy,
    range_basis,
)

COVERING_TOL = 1e-12


@dataclass(frozen=True)
class BlockSpectrumView:
    """Spectrum of a block-diagonal state without its eigenvectors merged.

    Args:
        values: Per-block arrays of contributions to the total spectrum.
        vectors: Per-block eigenvector matrices (columns) or ``None`` for a
            purely classical view.
        source: ``"joint"``, ``"output"`` or ``"input"``.
    """

    values: tuple
    vectors: tuple | None
    source: str

    def __post_init__(self):
        total = float(sum(np.sum(v) for v in self.values))
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"spectrum contributions sum to {total}, not 1")

    @classmethod
    def joint(cls, j: JointBlockState) -> "BlockSpectrumView":
        return cls(tuple(p * s.eigenvalues for p, s in zip(j.probs, j.spectra)),
                   tuple(s.eigenvectors for s in j.spectra), "joint")

    @classmethod
    def input(cls, j: JointBlockState) -> "BlockSpectrumView":
        return cls(tuple(np.array([p]) for p in j.probs), None, "input")

    @classmethod
    def output(cls, j: JointBlockState) -> "BlockSpectrumView":
        w, v = np.linalg.eigh(j.average_state)
        return cls((np.clip(w[::-1], 0.0, 1.0),), (v[:, ::-1],), "output")

    def flat(self) -> np.ndarray:
        return np.concatenate(self.values)


def _values(spectrum) -> np.ndarray:
    if isinstance(spectrum, BlockSpectrumView):
        return spectrum.flat()
    if isinstance(spectrum, Spectrum):
        return np.asarray(spectrum.eigenvalues, dtype=float)
    return np.asarray(spectrum, dtype=float).ravel()


def typical_mask(values, n: int, s: float, eps: float) -> np.ndarray:
    """Boolean mask of ``2^{-n(s+eps)} < v < 2^{-n(s-eps)}`` (strict).

    The test is done on the exponent ``-log2(v)/n``; zero values and values
    on the boundary are excluded.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    v = np.asarray(values, dtype=float)
    mask = v > 0
    rate = np.full(v.shape, np.inf)
    rate[mask] = -np.log2(v[mask]) / n
    return mask & (rate > s - eps) & (rate < s + eps)


def entropy_typical_projection(spectrum, n: int, s: float, eps: float):
    """Projection onto the eigenvectors whose eigenvalue is in the AEP window.

    Args:
        spectrum: A :class:`Spectrum` (returns the dense projection) or a
            :class:`BlockSpectrumView` (returns one column basis per block, or
            one boolean mask per block for a classical view).
        n: Block length.
        s: Entropy rate in bits per site.
        eps: Half-width of the window in the exponent.
    """
    if isinstance(spectrum, BlockSpectrumView):
        masks = [typical_mask(v, n, s, eps) for v in spectrum.values]
        if spectrum.vectors is None:
            return masks
        return [vec[:, m] for vec, m in zip(spectrum.vectors, masks)]
    if not isinstance(spectrum, Spectrum):
        raise DomainError("expected a Spectrum or BlockSpectrumView")
    v = spectrum.eigenvectors[:, typical_mask(spectrum.eigenvalues, n, s, eps)]
    return hermitize(v @ v.conj().T)


def covering_rank(spectrum, eps: float) -> int:
    """Smallest number of eigenvalues whose sum reaches ``1 - eps``."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    v = np.sort(_values(spectrum))[::-1]
    reached = np.nonzero(np.cumsum(v) >= 1.0 - eps - COVERING_TOL)[0]
    if reached.size == 0:
        raise DomainError("total mass is below 1 - eps")
    return int(reached[0]) + 1


def dimension_covering_exponent(spectrum, eps: float) -> float:
    """``log2`` of the least rank of a projection carrying mass ``>= 1 - eps``.

    For a state the optimum is attained by the largest eigenvalues, so the
    greedy count is exact.
    """
    return math.log2(covering_rank(spectrum, eps))


def covering_rank_bruteforce(values, eps: float) -> int:
    """Exhaustive minimum over eigen-subsets; exponential, for test oracles."""
    v = np.asarray(values, dtype=float)
    for k in range(1, v.size + 1):
        for subset in combinations(range(v.size), k):
            if v[list(subset)].sum() >= 1.0 - eps - COVERING_TOL:
                return k
    raise DomainError("total mass is below 1 - eps")


class PinchingReport(NamedTuple):
    s_pinched_in: float
    s_pinched_out: float
    s_original: float

    @property
    def s_pinched(self) -> float:
        return self.s_pinched_in + self.s_pinched_out

    @property
    def gap(self) -> float:
        return self.s_pinched - self.s_original


def pinched_entropy(q, d, tol: float = BOUND_SLACK) -> PinchingReport:
    """Entropies of ``qDq`` and ``q⊥Dq⊥`` against ``S(D)``.

    The two pieces live on orthogonal subspaces, so their entropy functionals
    add up to ``S(qDq + q⊥Dq⊥)``. Raises :class:`InvariantError` unless
    ``S(D) <= S_pinched <= S(D) + 1`` within ``tol``.
    """
    q = as_projection(q)
    d = as_density(d)
    if q.shape != d.shape:
        raise DimensionError(f"shapes {q.shape} and {d.shape} differ")
    qp = np.eye(q.shape[0]) - q
    report = PinchingReport(positive_entropy(q @ d @ q), positive_entropy(qp @ d @ qp),
                            entropy_of_weights(np.linalg.eigvalsh(d)))
    if not -tol <= report.gap <= 1.0 + tol:
        raise InvariantError(f"pinching gap {report.gap} outside [0, 1]")
    return report


def restricted_typical_basis(basis: np.ndarray, d: np.ndarray, n: int, s: float,
                             eps: float, scale: float = 1.0) -> np.ndarray:
    """Columns spanning the eigenvectors of ``q (scale D) q`` inside the window.

    ``basis`` holds orthonormal columns spanning ``q``.
    """
    if basis.shape[1] == 0:
        return basis
    m = hermitize(basis.conj().T @ d @ basis) * scale
    w, u = np.linalg.eigh(m)
    return basis @ u[:, typical_mask(w, n, s, eps)]


def restricted_typical(q, d, n: int, s: float, eps: float) -> np.ndarray:
    """Typical projection of ``qDq`` inside the range of ``q``; ``r <= q``."""
    q = as_projection(q)
    d = as_density(d)
    if q.shape != d.shape:
        raise DimensionError(f"shapes {q.shape} and {d.shape} differ")
    r = restricted_typical_basis(range_basis(q), d, n, s, eps)
    return hermitize(r @ r.conj().T)


def _column_range(g: np.ndarray, rel_tol: float = RANGE_REL_TOL) -> np.ndarray:
    """Orthonormal basis of the range of ``g g*``."""
    if g.shape[1] == 0:
        return g
    u, sv, _ = np.linalg.svd(g, full_matrices=False)
    if sv.size == 0 or sv[0] <= 0:
        return g[:, :0]
    return u[:, sv**2 > rel_tol * sv[0] ** 2]


def _mass(d: np.ndarray, f: np.ndarray) -> float:
    """``tr(D F F*)``."""
    if f.shape[1] == 0:
        return 0.0
    return float(np.real(np.vdot(f, d @ f)))


@dataclass
class TypicalityReport:
    """Output of the probability-bounds construction at one block length.

    Attributes:
        T: Sequences of the good set ``T_n`` (lexicographic).
        c: Column bases of the projections ``c_x`` for ``x`` in ``P_n``.
        W: ``W(x, c_x)`` for ``x`` in ``P_n``.
        delta: ``max_{x in T_n} 1 - W(x, c_x)`` (0 when ``T_n`` is empty).
        eta: ``1 -`` mass of ``j_n = sum_{T_n} |x><x| ⊗ c_x``.
        eta_prime: ``1 -`` mass of ``t''_n``.
        rates: Finite-n entropy rates (bits per site) used for the windows.
        eps_realized: Smallest ``eps'`` with
            ``2^{-n(s_cond+eps')} <= W(x, e) <= 2^{-n(s_cond-eps')}`` for all
            rank-one ``e <= c_x``, ``x`` in ``T_n``.
        masses: Measured masses of every layer.
    """

    n: int
    epsilon: float
    joint: JointBlockState
    rates: dict
    T: tuple
    c: dict
    W: dict
    delta: float
    eta: float
    eta_prime: float
    p_T: float
    eps_realized: float
    masses: dict
    diagnostic: str = ""
    layers: dict | None = field(default=None, repr=False)

    def projection(self, x: Sequence[int]) -> np.ndarray:
        f = self.c[tuple(x)]
        return hermitize(f @ f.conj().T)

    def trace_c(self, x: Sequence[int]) -> int:
        return int(self.c[tuple(x)].shape[1])

    @property
    def s_cond(self) -> float:
        return self.rates["s_cond"]

    def to_dict(self) -> dict:
        return {
            "n": self.n, "epsilon": self.epsilon, "uniform_epsilon": True,
            "rates": dict(self.rates), "size_T": len(self.T),
            "T": [list(x) for x in self.T], "p_T": self.p_T,
            "delta": self.delta, "eta": self.eta, "eta_prime": self.eta_prime,
            "eps_realized": self.eps_realized, "masses": dict(self.masses),
            "trace_c": {"".join(map(str, x)): self.trace_c(x) for x in self.T},
            "window_exponents": {
                "cond_lower": -self.n * (self.s_cond + self.eps_realized),
                "cond_upper": -self.n * (self.s_cond - self.eps_realized),
            },
            "diagnostic": self.diagnostic,
        }


def conditional_typicality_pipeline(p, ch, n: int, eps: float = 0.25,
                                    keep_layers: bool = False,
                                    joint: JointBlockState | None = None) -> TypicalityReport:
    """Run the full probability-bounds construction block by block.

    Args:
        p: Input process.
        ch: Channel; channels with memory are replaced by their induced
            channel through :func:`build_joint`.
        n: Block length.
        eps: Window half-width used for all typicality layers.
        keep_layers: Keep the intermediate per-block projections.
        joint: A prebuilt joint state (skips :func:`build_joint`).
    """
    j = joint if joint is not None else build_joint(p, ch, n)
    ent = entropies(j)
    s_p, s_q, s_j = ent.s_input / n, ent.s_output / n, ent.s_joint / n
    rates = {"s_input": s_p, "s_output": s_q, "s_joint": s_j, "s_cond": s_j - s_p}

    # t_n: joint typical, per block
    t_joint = entropy_typical_projection(BlockSpectrumView.joint(j), n, s_j, eps)
    # t_p: classical typical sequences
    in_tp = typical_mask(j.probs, n, s_p, eps)
    # t_q: dense output typical projection of D_q
    out_view = BlockSpectrumView.output(j)
    uq = entropy_typical_projection(out_view, n, s_q, eps)[0]
    pq = uq @ uq.conj().T

    masses = {"joint_typical": 0.0, "input_typical": float(j.probs[in_tp].sum()),
              "output_typical": _mass(j.average_state, uq), "product": 0.0,
              "sandwich": 0.0, "t_prime": 0.0, "t_double_prime": 0.0}
    layers = ({"t_joint": {}, "t_prime": {}, "t_output": uq,
               "input_typical": {x: bool(t) for x, t in zip(j.sequences, in_tp)}}
              if keep_layers else None)
    c, w = {}, {}
    for x, px, d, fn, typ in zip(j.sequences, j.probs, j.states, t_joint, in_tp):
        masses["joint_typical"] += px * _mass(d, fn)
        if keep_layers:
            layers["t_joint"][x] = fn
        if not typ:
            continue
        masses["product"] += px * _mass(d, uq)
        g = pq @ fn
        # tr(D (t_q t_x t_q)) = tr(D g g*) since t_x is a projection
        masses["sandwich"] += px * _mass(d, g)
        tp = _column_range(g)
        masses["t_prime"] += px * _mass(d, tp)
        if keep_layers:
            layers["t_prime"][x] = tp
        r = restricted_typical_basis(tp, d, n, s_j, eps, scale=px)
        if r.shape[1] == 0:
            continue
        c[x] = r
        w[x] = min(_mass(d, r), 1.0)
        masses["t_double_prime"] += px * w[x]

    eta_prime = max(1.0 - masses["t_double_prime"], 0.0)
    thresh = 1.0 - math.sqrt(eta_prime)
    T = tuple(x for x in j.sequences if x in w and w[x] >= thresh)
    p_T = float(sum(j.probability(x) for x in T))
    j_mass = float(sum(j.probability(x) * w[x] for x in T))
    delta = max((1.0 - w[x] for x in T), default=0.0)

    s_cond = rates["s_cond"]
    eps_real = 0.0
    for x in T:
        f = c[x]
        ev = np.linalg.eigvalsh(hermitize(f.conj().T @ j.output_state(x) @ f))
        if ev.min() <= 0:
            raise InvariantError(f"c_x of {x} contains a null direction")
        dev = np.abs(-np.log2(ev) / n - s_cond)
        eps_real = max(eps_real, float(dev.max()))
    if eps_real > 2 * eps + 1e-9:
        raise InvariantError(f"realized window {eps_real} exceeds 2*eps")

    diagnostic = "" if T else (
        f"T_n is empty at n={n}, eps={eps}: t'' carries mass {masses['t_double_prime']:.4g}")
    return TypicalityReport(n=n, epsilon=eps, joint=j, rates=rates, T=T, c=c, W=w,
                            delta=delta, eta=max(1.0 - j_mass, 0.0), eta_prime=eta_prime,
                            p_T=p_T, eps_realized=eps_real, masses=masses,
                            diagnostic=diagnostic, layers=layers)
