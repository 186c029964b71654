import itertools

import numpy as np
import pytest

from cqcoding import sources as S
from cqcoding.errors import DomainError, ResourceError, ValidationError
from cqcoding.operators import dimension_cap
from cqcoding.random_ops import random_probability, random_stochastic


def test_alphabet():
    a = S.Alphabet(("a", "b"))
    assert a.size == 2 and a.index("b") == 1
    with pytest.raises(ValidationError):
        S.Alphabet(("a", "a"))
    assert list(S.sequences(2, 2)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert S.sequence_index((1, 0, 1), 2) == 5


def test_iid_examples():
    p = S.IIDProcess([0.5, 0.5])
    assert np.allclose(p.block_marginal(3), 1 / 8)
    assert S.entropy_rate(p) == pytest.approx(1.0)
    assert S.entropy_rate(S.IIDProcess([0.75, 0.25])) == pytest.approx(0.8112781244591328)


def test_frozen_chain():
    p = S.MarkovProcess(np.eye(2), [0.5, 0.5])
    m = p.block_marginal(2)
    assert np.allclose(m, [0.5, 0, 0, 0.5])
    assert S.entropy_rate(p) == pytest.approx(0.0)


def test_reducible_chain_needs_stationary():
    with pytest.raises(DomainError):
        S.MarkovProcess(np.eye(2))


def test_invalid_inputs():
    with pytest.raises(ValidationError):
        S.IIDProcess([0.6, 0.6])
    with pytest.raises(ValidationError):
        S.MarkovProcess([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValidationError):
        S.MarkovProcess([[0.9, 0.1], [0.2, 0.8]], [0.5, 0.5])


def test_markov_vs_path_sum(rng):
    q = random_stochastic(2, 2, rng)
    p = S.MarkovProcess(q)
    pi = p.stationary
    assert np.allclose(pi @ q, pi, atol=1e-10)
    n = 6
    marg = p.block_marginal(n)
    for x in itertools.product(range(2), repeat=n):
        w = pi[x[0]]
        for a, b in zip(x, x[1:]):
            w *= q[a, b]
        assert marg[S.sequence_index(x, 2)] == pytest.approx(w, abs=1e-12)


def test_second_order_chain_vs_path_sum(rng):
    q = random_stochastic(4, 2, rng)
    p = S.MarkovProcess(q, order=2)
    pi = p.stationary  # over pairs
    marg = p.block_marginal(5)
    for x in itertools.product(range(2), repeat=5):
        w = pi[2 * x[0] + x[1]]
        for i in range(2, 5):
            w *= q[2 * x[i - 2] + x[i - 1], x[i]]
        assert marg[S.sequence_index(x, 2)] == pytest.approx(w, abs=1e-12)
    ent = sum(pi[s] * -np.sum(q[s] * np.log2(q[s])) for s in range(4))
    assert p.entropy_rate() == pytest.approx(ent)


def _consistent(p, n):
    a, b = p.block_marginal(n + 1).reshape(-1, p.size), p.block_marginal(n)
    left = p.block_marginal(n + 1).reshape(p.size, -1).sum(axis=0)
    return np.allclose(a.sum(axis=1), b, atol=1e-12), np.allclose(left, b, atol=1e-12)


@pytest.mark.parametrize("n", range(1, 8))
def test_kolmogorov_consistency(rng, n):
    procs = [S.IIDProcess(random_probability(3, rng)),
             S.MarkovProcess(random_stochastic(2, 2, rng)),
             S.MarkovProcess(random_stochastic(4, 2, rng), order=2),
             S.shift_average(S.PeriodicProductProcess(random_probability(4, rng), 2))]
    for p in procs:
        assert np.sum(p.block_marginal(n)) == pytest.approx(1.0, abs=1e-10)
        assert all(_consistent(p, n))
    # the periodic product law is consistent at the trailing end only
    pp = S.PeriodicProductProcess(random_probability(4, rng), 2)
    assert _consistent(pp, n)[0]


def test_periodic_entropy_rate(rng):
    bd = random_probability(9, rng)
    p = S.PeriodicProductProcess(bd, 2)
    assert p.entropy_rate() == pytest.approx(S.shannon_entropy(bd) / 2)


def test_shift_average_examples(rng):
    bd = random_probability(2, rng)
    avg = S.shift_average(S.PeriodicProductProcess(bd, 1))
    assert isinstance(avg, S.IIDProcess) and np.allclose(avg.probs, bd)
    pp = S.PeriodicProductProcess([0, 1, 0, 0], 2)  # mass 1 on "01"
    avg = S.shift_average(pp)
    assert np.allclose(avg.block_marginal(1), [0.5, 0.5])
    for n in range(1, 7):
        assert avg.block_marginal(n).sum() == pytest.approx(1.0)
        mean = (pp.phase_marginal(n, 0) + pp.phase_marginal(n, 1)) / 2
        assert np.allclose(avg.block_marginal(n), mean)


@pytest.mark.parametrize("n", range(1, 7))
def test_shift_average_is_shift_invariant(rng, n):
    avg = S.shift_average(S.PeriodicProductProcess(random_probability(9, rng), 2))
    big = avg.block_marginal(n + 1).reshape(avg.size, -1)
    assert np.allclose(big.sum(axis=0), avg.block_marginal(n), atol=1e-12)


def test_size_cap():
    with dimension_cap(16):
        with pytest.raises(ResourceError):
            S.IIDProcess([0.5, 0.5]).block_marginal(5)


def test_process_json_roundtrip(rng):
    for p in [S.IIDProcess([0.2, 0.8]), S.MarkovProcess(random_stochastic(2, 2, rng)),
              S.PeriodicProductProcess(random_probability(4, rng), 2)]:
        q = S.process_from_dict(p.to_dict())
        assert np.allclose(q.block_marginal(3), p.block_marginal(3))
    spec = {"kind": "markov", "order": 1, "transition": [[0.9, 0.1], [0.3, 0.7]],
            "stationary": [0.75, 0.25]}
    assert S.process_from_dict(spec).block_marginal(1) == pytest.approx([0.75, 0.25])
