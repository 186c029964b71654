"""Holevo capacities, the weak-converse floor and measured mutual information."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import CqBlockChannel
from .coding import Code, factor_of
from .errors import DomainError, InvariantError, UnsupportedError
from .joint import build_joint, holevo_information
from .operators import (
    BOUND_SLACK,
    check_size,
    entropy_of_weights,
    hermitize,
    shannon_entropy,
)
from .sources import PeriodicProductProcess, sequences, shift_average

MAX_ITER = 10_000
MONOTONE_SLACK = 1e-12
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class CapacityResult:
    """``C_n(W)`` with the maximizing input law on ``A^n``."""

    n: int
    value: float
    optimizer: np.ndarray
    method: str
    gap_estimate: float
    iterations: int = 0
    history: tuple = field(default=(), repr=False)

    @property
    def per_site(self) -> float:
        return self.value / self.n


def _log_support(sigma: np.ndarray) -> np.ndarray:
    """``log2`` of a density operator on its support (zero elsewhere)."""
    w, v = np.linalg.eigh(sigma)
    top = max(w[-1], 0.0)
    logs = np.where(w > 1e-14 * max(top, 1.0), np.log2(np.maximum(w, LOG_FLOOR)), 0.0)
    return (v * logs) @ v.conj().T


class _Ensemble:
    """Fixed signal states with vectorized Holevo quantities."""

    def __init__(self, states: np.ndarray):
        self.states = np.asarray(states, dtype=complex)
        self.entropies = np.array([entropy_of_weights(np.linalg.eigvalsh(s))
                                   for s in self.states])

    def average(self, p: np.ndarray) -> np.ndarray:
        return hermitize(np.tensordot(p, self.states, axes=1))

    def divergences(self, p: np.ndarray) -> np.ndarray:
        """``D(D_x || D_p)`` for every signal, in bits."""
        log_avg = _log_support(self.average(p))
        cross = np.real(np.einsum("xij,ji->x", self.states, log_avg))
        return np.maximum(-self.entropies - cross, 0.0)

    def chi(self, p: np.ndarray) -> float:
        s_avg = entropy_of_weights(np.linalg.eigvalsh(self.average(p)))
        return max(s_avg - float(p @ self.entropies), 0.0)

    def chi_batch(self, ps: np.ndarray) -> np.ndarray:
        avg = np.einsum("kx,xij->kij", ps, self.states)
        w = np.clip(np.linalg.eigvalsh(avg), 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -np.sum(np.where(w > 0, w * np.log2(w), 0.0), axis=1)
        return s - ps @ self.entropies


def _block_states(ch, n: int, context) -> np.ndarray:
    if isinstance(ch, CqBlockChannel):
        if ch.memory > 0 and context is None:
            raise UnsupportedError("C_n of a channel with memory needs a fixed context")
        return np.stack(ch.block_states(n, context))
    return np.stack([ch.output_state(x) for x in sequences(ch.size, n)])


def blahut_arimoto(states, tol: float = 1e-9, max_iter: int = MAX_ITER) -> CapacityResult:
    """Multiplicative update ``p <- p 2^{D(D_x || D_p)}`` on a fixed ensemble.

    Stops when the increment of ``chi`` drops below ``tol`` or the upper
    bound ``max_x D(D_x || D_p)`` is within ``tol`` of ``chi``. Raises
    :class:`InvariantError` if ``chi`` ever decreases.
    """
    ens = _Ensemble(states)
    k = ens.states.shape[0]
    p = np.full(k, 1.0 / k)
    div = ens.divergences(p)
    chi = float(p @ div)
    history = [chi]
    it = 0
    for it in range(1, max_iter + 1):
        logits = np.log(p) + div * math.log(2.0)
        new = np.exp(logits - logits.max())
        new /= new.sum()
        new_div = ens.divergences(new)
        new_chi = float(new @ new_div)
        if new_chi < chi - MONOTONE_SLACK:
            raise InvariantError(f"chi decreased from {chi} to {new_chi} at step {it}")
        p, div, inc, chi = new, new_div, new_chi - chi, new_chi
        history.append(chi)
        if inc < tol or div.max() - chi < tol:
            break
    gap = float(max(div.max() - chi, 0.0))
    return CapacityResult(0, chi, p, "iterative", gap, it, tuple(history))


def _simplex_grid(k: int, step: float) -> np.ndarray:
    m = int(round(1.0 / step))
    pts = [c for c in itertools.product(range(m + 1), repeat=k - 1) if sum(c) <= m]
    arr = np.array([list(c) + [m - sum(c)] for c in pts], dtype=float) / m
    return arr


def grid_search(states, step: float | None = None) -> CapacityResult:
    """Exhaustive grid over the input simplex (oracle for small alphabets)."""
    ens = _Ensemble(states)
    k = ens.states.shape[0]
    if step is None:
        step = 1e-3 if k <= 2 else 1e-2
    check_size(int((1 / step) ** (k - 1)), "grid size")
    grid = _simplex_grid(k, step)
    best, best_val = None, -np.inf
    for chunk in np.array_split(grid, max(1, len(grid) // 4096)):
        vals = ens.chi_batch(chunk)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best, best_val = chunk[i], float(vals[i])
    gap = float(max(ens.divergences(best).max() - best_val, 0.0))
    return CapacityResult(0, max(best_val, 0.0), best, "grid", gap, len(grid))


def holevo_cn(ch, n: int, tol: float = 1e-9, method: str = "iterative",
              context: Sequence[int] | None = None, grid_step: float | None = None,
              max_iter: int = MAX_ITER) -> CapacityResult:
    """``C_n(W) = max_p chi(p, W^n)`` over laws on ``A^n``.

    Args:
        ch: Channel; a channel with memory needs a fixed ``context``.
        n: Block length.
        tol: Stopping tolerance of the iteration.
        method: ``"iterative"`` (Blahut–Arimoto type) or ``"grid"``.
    """
    check_size(ch.size**n, "input block count")
    states = _block_states(ch, n, context)
    if method == "iterative":
        res = blahut_arimoto(states, tol, max_iter)
    elif method == "grid":
        res = grid_search(states, grid_step)
    else:
        raise DomainError(f"unknown method {method!r}")
    bound = min(n * math.log2(ch.size), n * math.log2(states.shape[1])) + BOUND_SLACK
    if not 0 <= res.value <= bound:
        raise InvariantError(f"C_n = {res.value} outside [0, {bound}]")
    return CapacityResult(n, res.value, res.optimizer, res.method, res.gap_estimate,
                          res.iterations, res.history)


def multi_letter_lower_bound(ch, n_list: Sequence[int], tol: float = 1e-9,
                             check_tol: float = 1e-6) -> list[dict]:
    """Per-site values ``C_n/n`` and their running maximum.

    The running maximum is a nondecreasing lower bound on the Holevo
    capacity. Whenever both ``n`` and ``2n`` are computed,
    ``C_{2n}/(2n) >= C_n/n - check_tol`` is asserted.
    """
    per = {}
    rows, best = [], 0.0
    for n in sorted(set(n_list)):
        res = holevo_cn(ch, n, tol)
        per[n] = res.per_site
        best = max(best, res.per_site)
        rows.append({"n": n, "C_n": res.value, "per_site": res.per_site,
                     "lower_bound": best, "gap_estimate": res.gap_estimate,
                     "iterations": res.iterations, "asymptotic_lower_bound_only": True})
    for n, v in per.items():
        if 2 * n in per and per[2 * n] < v - check_tol:
            raise InvariantError(f"C_{2 * n}/{2 * n} = {per[2 * n]} < C_{n}/{n} = {v}")
    return rows


def weak_converse_floor(C: float, n: int, eps: float) -> float:
    """``1 - (C + 1/n)/(C + eps)`` clamped to ``[0, 1)``."""
    if C < 0 or eps <= 0 or n < 1:
        raise DomainError("need C >= 0, eps > 0 and n >= 1")
    v = 1.0 - (C + 1.0 / n) / (C + eps)
    return min(max(v, 0.0), math.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class MutualInfoReport:
    K: np.ndarray
    mutual_info: float
    chi: float
    avg_error: float
    fano_floor: float
    completed: bool

    @property
    def holevo_slack(self) -> float:
        return self.chi - self.mutual_info


def _stacked_factors(factors: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    sizes = np.array([f.shape[1] for f in factors])
    return np.hstack(factors), sizes


def _group_sum(values: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Sum consecutive column groups of the given sizes (empty groups give 0)."""
    out = np.zeros(values.shape[:-1] + (sizes.size,))
    csum = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)],
                          axis=-1)
    ends = np.cumsum(sizes)
    starts = ends - sizes
    out[...] = csum[..., ends] - csum[..., starts]
    return out


def transition_matrix(states: Sequence[np.ndarray], decoders: Sequence[np.ndarray]) -> np.ndarray:
    """``K[i, j] = tr(D_i F_j F_j*)`` for states ``D_i`` and decoder factors ``F_j``."""
    big, sizes = _stacked_factors(decoders)
    rows = []
    for d in states:
        a = factor_of(d)
        vals = np.sum(np.abs(a.conj().T @ big) ** 2, axis=0)
        rows.append(_group_sum(vals, sizes))
    return np.array(rows)


def mutual_information(px: np.ndarray, K: np.ndarray) -> float:
    py = px @ K
    h_y = shannon_entropy(np.clip(py, 0.0, 1.0))
    h_cond = float(sum(w * shannon_entropy(np.clip(row, 0.0, 1.0)) for w, row in zip(px, K)))
    return max(h_y - h_cond, 0.0)


def measured_mutual_info(code: Code, ch, tol: float = BOUND_SLACK) -> MutualInfoReport:
    """Classical channel ``K(j|i) = tr(D_{u_i} b_j)`` induced by a code.

    The decoders are completed with ``1 - sum b_i`` so ``K`` is stochastic.
    Asserts the Holevo bound ``chi(uniform on codewords) >= I(uniform, K)``
    and the Fano inequality for the measured average error.
    """
    if not code.size:
        raise DomainError("empty code")
    words = list(dict.fromkeys(code.codewords))
    states = {u: hermitize(np.asarray(ch.output_state(u), dtype=complex)) for u in words}
    rest = np.eye(code.output_dim) - code.total()
    top_rest = np.linalg.eigvalsh(rest)
    if top_rest[0] < -1e-9:
        raise InvariantError("decoders do not form a sub-POVM")
    factors = list(code.factors)
    completed = top_rest[-1] > 1e-12
    if completed:
        factors.append(factor_of(_psd_part(rest)))
    unique_K = transition_matrix([states[u] for u in words], factors)
    index = {u: i for i, u in enumerate(words)}
    K = unique_K[[index[u] for u in code.codewords]]
    if np.abs(K.sum(axis=1) - 1.0).max() > 1e-9:
        raise InvariantError("K is not row-stochastic")
    M = code.size
    px = np.full(M, 1.0 / M)
    info = mutual_information(px, K)
    weights = np.array([code.codewords.count(u) for u in words], dtype=float) / M
    chi = _Ensemble(np.stack([states[u] for u in words])).chi(weights)
    if chi < info - tol:
        raise InvariantError(f"Holevo bound violated: chi={chi} < I={info}")
    avg_err = float(1.0 - np.mean(np.diag(K[:, :M])))
    fano = 0.0
    if M > 1:
        fano = max((math.log2(M) - 1.0 - info) / math.log2(M - 1) if M > 2 else 0.0, 0.0)
        if avg_err < fano - 1e-9:
            raise InvariantError(f"Fano inequality violated: {avg_err} < {fano}")
    return MutualInfoReport(K, info, chi, avg_err, fano, bool(completed))


def _psd_part(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(a))
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def periodic_product_rate(block_dist, ch: CqBlockChannel, n_max: int,
                          period: int | None = None, slack: float = BOUND_SLACK) -> list[dict]:
    """Per-site Holevo rates of a periodic product input and its shift average.

    For memoryless channels superadditivity and concavity give, at finite ``n``,
    ``chi(shift average)/n >= mean_i(k_i) chi(block)/n`` with ``k_i`` the
    number of whole blocks seen from phase ``i``; this is asserted.
    """
    block_dist = np.asarray(block_dist, dtype=float)
    if period is None:
        period = round(math.log(block_dist.size, ch.size))
    base = PeriodicProductProcess(block_dist, period, ch.alphabet)
    avg = shift_average(base)
    check_size(ch.size ** (period * math.ceil(n_max / period)), "input block count")
    chi_block = None
    if ch.memory == 0:
        chi_block = _Ensemble(np.stack(ch.block_states(period))).chi(block_dist)
    rows = []
    for n in range(1, n_max + 1):
        prod = holevo_information(build_joint(base, ch, n)) / n
        shift = holevo_information(build_joint(avg, ch, n)) / n
        row = {"n": n, "product_rate": prod, "shift_average_rate": shift}
        if chi_block is not None:
            k = np.mean([max(n - (period - i) % period, 0) // period for i in range(period)])
            bound = k * chi_block / n
            row["bound"] = bound
            if shift < bound - slack:
                raise InvariantError(f"shift-average rate {shift} below {bound} at n={n}")
        rows.append(row)
    return rows


def capacity_csv(results: Sequence[CapacityResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "C_n", "C_n_per_site", "method", "iterations", "gap_estimate"])
    for r in results:
        w.writerow([r.n, f"{r.value:.12g}", f"{r.per_site:.12g}", r.method, r.iterations,
                    f"{r.gap_estimate:.6g}"])
    return buf.getvalue()
