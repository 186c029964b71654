"""Random states, projections and channels for property tests and demos."""

from __future__ import annotations

import numpy as np

from .operators import hermitize


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    rng = _rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure(dim: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density(dim: int, rng=None, rank: int | None = None) -> np.ndarray:
    """Random density operator of the given rank (Hilbert-Schmidt measure for full rank)."""
    rng = _rng(rng)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    d = g @ g.conj().T
    return hermitize(d / np.trace(d).real)


def random_hermitian(dim: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitize(g)


def random_projection(dim: int, rank: int | None = None, rng=None) -> np.ndarray:
    rng = _rng(rng)
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    v = random_unitary(dim, rng)[:, :rank]
    return hermitize(v @ v.conj().T)


def random_probability(size: int, rng=None, alpha: float = 1.0) -> np.ndarray:
    return _rng(rng).dirichlet(np.full(size, alpha))


def random_stochastic(rows: int, cols: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    return np.vstack([rng.dirichlet(np.ones(cols)) for _ in range(rows)])


def random_kraus(dim_in: int, dim_out: int | None = None, n_ops: int = 2,
                 rng=None) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map (isometry slicing)."""
    rng = _rng(rng)
    dim_out = dim_in if dim_out is None else dim_out
    big = dim_out * n_ops
    g = rng.standard_normal((big, dim_in)) + 1j * rng.standard_normal((big, dim_in))
    q, _ = np.linalg.qr(g)
    return [q[k * dim_out:(k + 1) * dim_out, :] for k in range(n_ops)]
