"""Greedy maximal codes, error evaluation and lifting to channels with memory.

Decoders are stored as factors ``F`` with ``b = F F*``; greedy decoders are
projections, so their factors have orthonormal columns.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import CqBlockChannel
from .errors import DomainError, InvariantError, ValidationError
from .operators import (
    DENSITY_EIG_ATOL,
    RANGE_REL_TOL,
    check_size,
    hermitize,
    matrix_from_json,
    matrix_to_json,
)
from .sources import sequences
from .typicality import TypicalityReport, _column_range, _mass

SUBPOVM_TOL = 1e-9
ORTHO_TOL = 1e-8
ACCEPT_TOL = 1e-12


def factor_of(b) -> np.ndarray:
    """Factor ``F`` with ``F F* = b`` for a positive operator ``b``."""
    b = hermitize(np.asarray(b, dtype=complex))
    w, v = np.linalg.eigh(b)
    if w.size and w[0] < -DENSITY_EIG_ATOL:
        raise ValidationError(f"decoder has eigenvalue {w[0]:.3e} < 0")
    keep = w > RANGE_REL_TOL * max(w[-1] if w.size else 0.0, 0.0)
    return v[:, keep] * np.sqrt(w[keep])


@dataclass(frozen=True)
class Code:
    """Codewords ``u_i`` in ``A^n`` with decoding operators ``b_i = F_i F_i*``."""

    n: int
    codewords: tuple
    factors: tuple
    output_dim: int
    projective: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.codewords) != len(self.factors):
            raise ValidationError("one decoder per codeword is required")
        for u, f in zip(self.codewords, self.factors):
            if len(u) != self.n:
                raise ValidationError(f"codeword {u} does not have length {self.n}")
            if f.shape[0] != self.output_dim:
                raise ValidationError("decoder factor has the wrong dimension")

    @classmethod
    def from_decoders(cls, n: int, codewords: Sequence, decoders: Sequence,
                      projective: bool = False) -> "Code":
        decoders = [np.asarray(b, dtype=complex) for b in decoders]
        if not decoders:
            raise ValidationError("from_decoders needs at least one decoder")
        return cls(n, tuple(tuple(int(s) for s in u) for u in codewords),
                   tuple(factor_of(b) for b in decoders), decoders[0].shape[0], projective)

    @classmethod
    def empty(cls, n: int, output_dim: int) -> "Code":
        return cls(n, (), (), output_dim, True)

    @property
    def size(self) -> int:
        return len(self.codewords)

    @property
    def rate(self) -> float:
        return math.log2(self.size) / self.n if self.size else 0.0

    def decoder(self, i: int) -> np.ndarray:
        f = self.factors[i]
        return hermitize(f @ f.conj().T)

    def total(self) -> np.ndarray:
        acc = np.zeros((self.output_dim, self.output_dim), dtype=complex)
        for f in self.factors:
            acc += f @ f.conj().T
        return hermitize(acc)

    def check_subpovm(self, tol: float = SUBPOVM_TOL) -> float:
        """Largest eigenvalue of ``sum b_i``; raises if it exceeds ``1 + tol``."""
        if not self.size:
            return 0.0
        top = float(np.linalg.eigvalsh(self.total())[-1])
        if top > 1.0 + tol:
            raise InvariantError(f"sum of decoders has eigenvalue {top} > 1")
        return top

    def check_orthogonality(self, tol: float = ORTHO_TOL) -> float:
        """Max entrywise deviation from ``b_i b_j = delta_ij b_i``."""
        worst = 0.0
        for i in range(self.size):
            bi = self.decoder(i)
            worst = max(worst, float(np.abs(bi @ bi - bi).max()))
            for k in range(i + 1, self.size):
                cross = self.factors[i].conj().T @ self.factors[k]
                if cross.size:
                    worst = max(worst, float(np.abs(cross).max()))
        if worst > tol:
            raise InvariantError(f"decoders deviate from orthogonal projections by {worst}")
        return worst

    def to_json(self) -> dict:
        return {"n": self.n, "size": self.size, "rate": self.rate,
                "codewords": [list(u) for u in self.codewords],
                "decoders": [matrix_to_json(self.decoder(i)) for i in range(self.size)],
                "meta": self.meta}

    @classmethod
    def from_json(cls, data: dict) -> "Code":
        decoders = [matrix_from_json(b) for b in data["decoders"]]
        if not decoders:
            raise ValidationError("cannot restore an empty code without a dimension")
        return cls.from_decoders(data["n"], data["codewords"], decoders)


def _state_of(ch, x, context=None) -> np.ndarray:
    if context is not None:
        return ch.output_state(x, context)
    return ch.output_state(x)


def _test_value(d: np.ndarray, f: np.ndarray, q: np.ndarray) -> tuple[float, np.ndarray]:
    """``tr(D (1-B) c (1-B))`` with ``B = Q Q*`` and ``c = F F*``."""
    g = f - q @ (q.conj().T @ f) if q.shape[1] else f
    return _mass(d, g), g


def greedy_code(report: TypicalityReport, channel, lam: float, *,
                order: str = "lex", seed: int | None = None) -> Code:
    """Greedy maximal code on the good set of a typicality report.

    A candidate ``x`` in ``T_n`` is accepted while
    ``W(x, (1-B) c_x (1-B)) >= 1 - lam``, where ``B`` is the sum of the
    decoders chosen so far, and gets decoder ``R((1-B) c_x (1-B))``. Passes
    over the candidates repeat until one adds nothing, so the result is
    maximal.

    Args:
        report: Output of the typicality pipeline.
        channel: Block output map, or ``None`` for the report's joint state
            (the induced channel).
        lam: Error level in (0, 1).
        order: ``"lex"``, ``"reverse"`` or ``"shuffle"`` (uses ``seed``).
    """
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    ch = report.joint if channel is None else channel
    dim = report.joint.output_dim
    cands = list(report.T)
    if order == "reverse":
        cands.reverse()
    elif order == "shuffle":
        np.random.default_rng(seed).shuffle(cands)
    elif order != "lex":
        raise DomainError(f"unknown candidate order {order!r}")
    states = {x: _state_of(ch, x) for x in cands}

    q = np.zeros((dim, 0), dtype=complex)
    words, factors = [], []
    remaining = list(cands)
    added = True
    while added and remaining:
        added = False
        for x in list(remaining):
            val, g = _test_value(states[x], report.c[x], q)
            if val < 1.0 - lam - ACCEPT_TOL:
                continue
            b = _column_range(g)
            if q.shape[1]:
                b = b - q @ (q.conj().T @ b)
                b, _ = np.linalg.qr(b)
            words.append(x)
            factors.append(b)
            q = np.hstack([q, b])
            remaining.remove(x)
            added = True

    code = Code(report.n, tuple(words), tuple(factors), dim, True,
                meta={"lambda": lam, "order": order, "seed": seed,
                      "epsilon": report.epsilon, "size_T": len(report.T)})
    shadow = min(1.0 - lam, lam**2 / 16)
    if report.delta < lam / 2:
        for x in cands:
            got = _mass(states[x], q)
            if got < shadow - 1e-9:
                raise InvariantError(f"shadow bound fails at {x}: {got} < {shadow}")
    return code


def prolongation_values(code: Code, report: TypicalityReport, channel=None) -> dict:
    """Greedy acceptance value of every unused candidate against the final code."""
    ch = report.joint if channel is None else channel
    q = np.hstack(code.factors) if code.size else np.zeros((code.output_dim, 0), complex)
    used = set(code.codewords)
    return {x: _test_value(_state_of(ch, x), report.c[x], q)[0]
            for x in report.T if x not in used}


def success_probabilities(code: Code, ch, context=None) -> np.ndarray:
    """``W(u_i, b_i)`` for every codeword."""
    states = {u: _state_of(ch, u, context) for u in dict.fromkeys(code.codewords)}
    return np.array([_mass(states[u], f) for u, f in zip(code.codewords, code.factors)])


def evaluate_errors(code: Code, ch, process=None) -> tuple[float, float]:
    """Maximal and average error of a code.

    For a :class:`CqBlockChannel` with memory ``m`` the error of each word is
    the worst case over all ``|A|^m`` preceding contexts, or the
    context-averaged error under ``process`` when one is given. Other block
    maps (joint states, induced channels) are evaluated directly.
    """
    if not code.size:
        return 0.0, 0.0
    if isinstance(ch, CqBlockChannel) and ch.memory > 0:
        if process is not None:
            from .joint import InducedChannel

            succ = success_probabilities(code, InducedChannel(process, ch, code.n))
        else:
            check_size(ch.size**ch.memory, "context count")
            succ = np.min([success_probabilities(code, ch, c)
                           for c in sequences(ch.size, ch.memory)], axis=0)
    else:
        succ = success_probabilities(code, ch)
    err = np.clip(1.0 - succ, 0.0, 1.0)
    return float(err.max()), float(err.mean())


def best_context(ch: CqBlockChannel, word: Sequence[int], f: np.ndarray):
    """Context in ``A^m`` maximizing the success of ``word`` with decoder ``F F*``."""
    check_size(ch.size**ch.memory, "context count")
    best, best_val = None, -1.0
    for c in sequences(ch.size, ch.memory):
        val = _mass(ch.output_state(word, c), f)
        if val > best_val:
            best, best_val = c, val
    return best, best_val


def lift_code_to_dim(code: Code, ch: CqBlockChannel, lam: float) -> Code:
    """Turn an induced-channel code into a code on the block ``[1-m, n]``.

    Each codeword is prefixed with its best length-``m`` context; the decoder
    acts as the identity on the ``m`` prefix outputs. If the induced success
    is at least ``1 - lam`` the context average guarantees a lifted success
    of at least ``1 - lam``, hence at least ``1 - sqrt(lam)``.
    """
    m = ch.memory
    if m == 0:
        return code
    check_size(ch.site_dim ** (m + code.n))
    pad = np.eye(ch.site_dim**m)
    words, factors, contexts = [], [], []
    for u, f in zip(code.codewords, code.factors):
        c, val = best_context(ch, u, f)
        words.append(tuple(c) + tuple(u))
        factors.append(np.kron(pad, f))
        contexts.append({"context": list(c), "success": val})
    meta = dict(code.meta, lifted_from=code.n, memory=m, lambda_lift=lam,
                lift_bound=1.0 - math.sqrt(lam), contexts=contexts)
    return Code(code.n + m, tuple(words), tuple(factors), ch.site_dim ** (m + code.n),
                code.projective, meta)


def code_summary_csv(rows: Sequence[dict]) -> str:
    """CSV table ``n,M,rate,max_err,avg_err`` with LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "M", "rate", "max_err", "avg_err"])
    for r in rows:
        writer.writerow([r["n"], r["M"], f"{r['rate']:.12g}", f"{r['max_err']:.12g}",
                         f"{r['avg_err']:.12g}"])
    return buf.getvalue()


def code_to_json(code: Code) -> str:
    return json.dumps(code.to_json(), sort_keys=True)
