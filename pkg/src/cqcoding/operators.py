"""Dense operator algebra on finite-dimensional Hilbert spaces.

Operators are plain ``numpy`` complex arrays. The ``as_*`` validators check
the structural invariants of hermitian, density and projection operators and
return a read-only, exactly hermitian copy; every public function in the
package validates its inputs through them.

All logarithms are base 2.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionError,
    InvariantError,
    NumericError,
    ResourceError,
    ValidationError,
)

HERMITIAN_ATOL = 1e-12
DENSITY_EIG_ATOL = 1e-10
DENSITY_TRACE_ATOL = 1e-9
PROJECTION_ATOL = 1e-10
PROJECTION_EIG_ATOL = 1e-8
RANGE_REL_TOL = 1e-10
BOUND_SLACK = 1e-9

_dim_cap = 2**16


def dim_cap() -> int:
    """Current cap on matrix dimensions and enumeration sizes."""
    return _dim_cap


def set_dim_cap(cap: int) -> int:
    """Set the dimension cap and return the previous value."""
    global _dim_cap
    if cap < 1:
        raise ValueError("dimension cap must be positive")
    previous, _dim_cap = _dim_cap, int(cap)
    return previous


@contextlib.contextmanager
def dimension_cap(cap: int):
    """Temporarily override the dimension cap."""
    previous = set_dim_cap(cap)
    try:
        yield
    finally:
        set_dim_cap(previous)


def check_size(size: int, what: str = "dimension") -> int:
    if size > _dim_cap:
        raise ResourceError(f"{what} {size} exceeds cap {_dim_cap}")
    return size


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a^H) / 2`` as a fresh array."""
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2


def as_hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate a square hermitian matrix and return a read-only copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    if a.size and np.max(np.abs(a - a.conj().T)) > atol:
        raise ValidationError("matrix is not hermitian")
    return _frozen(hermitize(a))


def as_density(d, eig_atol: float = DENSITY_EIG_ATOL,
               trace_atol: float = DENSITY_TRACE_ATOL) -> np.ndarray:
    """Validate a density operator (positive, unit trace)."""
    d = as_hermitian(d)
    if abs(np.trace(d).real - 1.0) > trace_atol:
        raise ValidationError(f"trace {np.trace(d).real!r} differs from 1")
    if np.linalg.eigvalsh(d)[0] < -eig_atol:
        raise ValidationError("density operator has a negative eigenvalue")
    return d


def as_projection(p, atol: float = PROJECTION_ATOL,
                  eig_atol: float = PROJECTION_EIG_ATOL) -> np.ndarray:
    """Validate an orthogonal projection."""
    p = as_hermitian(p)
    if p.size and np.max(np.abs(p @ p - p)) > atol:
        raise ValidationError("operator is not idempotent")
    w = np.linalg.eigvalsh(p)
    if np.any(np.minimum(np.abs(w), np.abs(w - 1.0)) > eig_atol):
        raise ValidationError("projection eigenvalues are not in {0, 1}")
    return p


def as_effect(d, tol: float = DENSITY_EIG_ATOL) -> np.ndarray:
    """Validate ``0 <= d <= 1`` with ``tr d <= 1``."""
    d = as_hermitian(d)
    w = np.linalg.eigvalsh(d)
    if w.size and (w[0] < -tol or w[-1] > 1 + tol):
        raise ValidationError("operator is not between 0 and the identity")
    if np.trace(d).real > 1 + DENSITY_TRACE_ATOL:
        raise ValidationError("operator trace exceeds 1")
    return d


class Spectrum(NamedTuple):
    """Eigen-decomposition with eigenvalues in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigh(a) -> Spectrum:
    """Spectral decomposition of a hermitian operator, largest first."""
    a = as_hermitian(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(a)
        raise NumericError(
            f"eigendecomposition did not converge (condition number {cond:.3e})"
        ) from exc
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    check_size(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def kron_all(ops: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = tensor_product(out, op)
    return out


def reduce_sites(d, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of ``d`` over every tensor factor not listed in ``keep``."""
    d = np.asarray(d, dtype=complex)
    dims = [int(k) for k in dims]
    total = math.prod(dims)
    if d.shape != (total, total):
        raise DimensionError(f"operator of shape {d.shape} does not factor as {dims}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"site indices {keep} out of range")
    n = len(dims)
    t = d.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many tensor factors")
    rows = list(letters[:n])
    cols = [letters[n + i] if i in keep else rows[i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    kd = math.prod(dims[i] for i in keep)
    return r.reshape(kd, kd)


def partial_trace(d, dims: tuple[int, int], trace_out: str = "second") -> np.ndarray:
    """Reduced density operator of a bipartite state.

    Args:
        d: Density operator on ``H1 ⊗ H2``.
        dims: ``(dim H1, dim H2)``.
        trace_out: ``"first"`` or ``"second"``, the factor that is traced away.
    """
    d = as_density(d)
    if len(dims) != 2:
        raise DimensionError("dims must be a pair")
    if trace_out not in ("first", "second"):
        raise ValueError("trace_out must be 'first' or 'second'")
    keep = [1] if trace_out == "first" else [0]
    return _frozen(hermitize(reduce_sites(d, dims, keep)))


def clamp_eigenvalues(w: np.ndarray, neg_tol: float = DENSITY_EIG_ATOL) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -neg_tol:
        raise ValidationError(f"eigenvalue {w.min():.3e} below clamp tolerance")
    return np.clip(w, 0.0, 1.0)


def entropy_of_weights(w) -> float:
    """``-Σ w log2 w`` with ``0 log 0 = 0``; weights need not sum to 1."""
    w = clamp_eigenvalues(w)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


shannon_entropy = entropy_of_weights


def positive_entropy(a) -> float:
    """Entropy functional of a positive (possibly subnormalized) operator."""
    return entropy_of_weights(np.linalg.eigvalsh(hermitize(a)))


def von_neumann_entropy(d) -> float:
    """von Neumann entropy ``-tr(D log2 D)`` in bits."""
    d = as_density(d)
    s = entropy_of_weights(np.linalg.eigvalsh(d))
    return min(max(s, 0.0), math.log2(d.shape[0]))


def range_basis(a, rel_tol: float = RANGE_REL_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the range of a positive operator."""
    w, v = np.linalg.eigh(hermitize(a))
    top = w[-1] if w.size else 0.0
    if top <= 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    return v[:, w > rel_tol * top]


def range_projection(a, rel_tol: float = RANGE_REL_TOL) -> np.ndarray:
    """Projection onto the range of a positive semidefinite operator."""
    a = as_hermitian(a)
    if a.size and np.linalg.eigvalsh(a)[0] < -DENSITY_EIG_ATOL:
        raise ValidationError("range_projection needs a positive operator")
    v = range_basis(a, rel_tol)
    return _frozen(hermitize(v @ v.conj().T))


def variational_distance(d1, d2) -> float:
    """``sup_{0<=b<=1} |tr((D1 - D2) b)|``, i.e. half the trace norm."""
    d1 = as_density(d1)
    d2 = as_density(d2)
    if d1.shape != d2.shape:
        raise DimensionError(f"shapes {d1.shape} and {d2.shape} differ")
    return trace_distance_unchecked(d1, d2)


def trace_distance_unchecked(d1: np.ndarray, d2: np.ndarray) -> float:
    w = np.linalg.eigvalsh(hermitize(d1 - d2))
    return float(min(max(w[w > 0].sum(), 0.0), 1.0))


@dataclass(frozen=True)
class GentleReport:
    """Both sides of a gentle-pinching inequality ``lhs >= bound``."""

    part: int
    lhs: float
    bound: float
    eps1: float
    eps2: float

    @property
    def slack(self) -> float:
        return self.lhs - self.bound

    @property
    def holds(self) -> bool:
        return self.slack >= -BOUND_SLACK


def _check_gentle(report: GentleReport) -> GentleReport:
    if not report.holds:
        raise InvariantError(f"gentle pinching violated: {report}")
    return report


def gentle_bounds(d, q1, q2) -> GentleReport:
    """Sandwich bound ``tr(D q2 q1 q2) >= 1 - eps1 - 2 sqrt(eps2)``.

    ``d`` must satisfy ``0 <= d <= 1`` and ``tr d <= 1``; the epsilons are the
    measured defects ``eps_i = 1 - tr(d q_i)``.
    """
    d = as_effect(d)
    q1 = as_projection(q1)
    q2 = as_projection(q2)
    if not d.shape == q1.shape == q2.shape:
        raise DimensionError("d, q1 and q2 must have equal dimensions")
    eps1 = 1.0 - float(np.trace(d @ q1).real)
    eps2 = 1.0 - float(np.trace(d @ q2).real)
    lhs = float(np.trace(d @ q2 @ q1 @ q2).real)
    bound = 1.0 - eps1 - 2.0 * math.sqrt(max(eps2, 0.0))
    return _check_gentle(GentleReport(1, lhs, bound, eps1, eps2))


def gentle_bounds_product(d, q1, q2) -> GentleReport:
    """Local-projection bound ``tr(D (q1 ⊗ q2)) >= 1 - eps1 - sqrt(eps2)``.

    ``q1`` and ``q2`` act on the two factors of ``d``; the epsilons come from
    the reduced states.
    """
    q1 = as_projection(q1)
    q2 = as_projection(q2)
    dims = (q1.shape[0], q2.shape[0])
    d = as_density(d)
    if d.shape[0] != dims[0] * dims[1]:
        raise DimensionError("d does not act on dom(q1) ⊗ dom(q2)")
    d1 = reduce_sites(d, dims, [0])
    d2 = reduce_sites(d, dims, [1])
    eps1 = 1.0 - float(np.trace(d1 @ q1).real)
    eps2 = 1.0 - float(np.trace(d2 @ q2).real)
    lhs = float(np.trace(d @ np.kron(q1, q2)).real)
    bound = 1.0 - eps1 - math.sqrt(max(eps2, 0.0))
    return _check_gentle(GentleReport(2, lhs, bound, eps1, eps2))


def expectation(d, b) -> float:
    """``tr(d b)`` for hermitian ``b`` (real part)."""
    return float(np.einsum("ij,ji->", np.asarray(d), np.asarray(b)).real)


def matrix_to_json(a) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ValidationError("matrix must be a 2-d array of [re, im] pairs")


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def pure_state(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())
