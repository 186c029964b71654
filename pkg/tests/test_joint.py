import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqcoding import channels as C
from cqcoding import joint as J
from cqcoding import sources as S
from cqcoding.errors import DomainError
from cqcoding.operators import dimension_cap, kron_all, pure_state, von_neumann_entropy
from cqcoding.random_ops import random_density, random_kraus, random_probability, random_stochastic
from cqcoding.sources import sequences


def dense_entropy(a):
    w = np.linalg.eigvalsh(a)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def test_build_joint_examples(noiseless):
    j = J.build_joint(S.IIDProcess([0.5, 0.5]), noiseless, 1)
    assert len(j) == 2 and np.allclose(j.probs, 0.5)
    assert von_neumann_entropy(j.states[0]) == pytest.approx(0.0)
    # zero-probability sequences are dropped
    j2 = J.build_joint(S.MarkovProcess(np.eye(2), [0.5, 0.5]), noiseless, 2)
    assert j2.sequences == ((0, 0), (1, 1))
    with pytest.raises(DomainError):
        j2.output_state((0, 1))


def test_dense_materialization(rng):
    noise = C.MarkovNoise(random_stochastic(2, 2, rng),
                          tuple(C.CPTPMap(random_kraus(2, 2, 2, rng)) for _ in range(2)))
    ch = C.markov_noise([random_density(2, rng) for _ in range(2)], noise)
    p = S.MarkovProcess(random_stochastic(2, 2, rng))
    for n in range(1, 5):
        j = J.build_joint(p, ch, n)
        big = j.to_dense()
        assert np.trace(big).real == pytest.approx(1.0, abs=1e-10)
        if n <= 3:
            w = np.sort(np.linalg.eigvalsh(big))
            assert np.allclose(w, np.sort(j.joint_eigenvalues()), atol=1e-10)
            e = J.entropies(j)
            assert e.s_joint == pytest.approx(dense_entropy(big), abs=1e-8)
            out = big.reshape(2**n, 2**n, 2**n, 2**n).trace(axis1=0, axis2=2)
            assert e.s_output == pytest.approx(dense_entropy(out), abs=1e-8)
            assert e.s_input == pytest.approx(S.shannon_entropy(p.block_marginal(n)))
            cond = sum(px * von_neumann_entropy(d) for px, d in zip(j.probs, j.states))
            assert e.s_joint == pytest.approx(e.s_input + cond, abs=1e-9)


def test_entropy_examples(noiseless, identical):
    p = S.IIDProcess([0.5, 0.5])
    assert tuple(J.entropies(J.build_joint(p, noiseless, 1))) == pytest.approx((1, 1, 1))
    q = S.IIDProcess([0.3, 0.7])
    sig = random_density(2, np.random.default_rng(3))
    ch = C.memoryless([sig, sig])
    e = J.entropies(J.build_joint(q, ch, 1))
    h, s = S.shannon_entropy([0.3, 0.7]), von_neumann_entropy(sig)
    assert tuple(e) == pytest.approx((h, s, h + s))
    assert J.holevo_information(J.build_joint(q, ch, 2)) == pytest.approx(0.0, abs=1e-12)


def test_holevo_examples(noiseless):
    p = S.IIDProcess([0.5, 0.5])
    assert J.holevo_information(J.build_joint(p, noiseless, 1)) == pytest.approx(1.0)
    a, b = np.array([1, 0]), np.array([0.5, math.sqrt(0.75)])  # overlap 0.5
    ch = C.memoryless([pure_state(a), pure_state(b)])
    avg = 0.5 * pure_state(a) + 0.5 * pure_state(b)
    lam = np.array([0.75, 0.25])  # eigenvalues (1 +- |<a|b>|)/2
    assert np.allclose(np.linalg.eigvalsh(avg), np.sort(lam))
    expected = -np.sum(lam * np.log2(lam))
    assert J.holevo_information(J.build_joint(p, ch, 1)) == pytest.approx(expected)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_holevo_bounds(seed):
    rng = np.random.default_rng(seed)
    ch = C.memoryless([random_density(2, rng) for _ in range(3)])
    p = S.IIDProcess(random_probability(3, rng))
    for n in (1, 2):
        j = J.build_joint(p, ch, n)
        chi = J.holevo_information(j)
        assert -1e-12 <= chi <= min(J.entropies(j).s_input, n) + 1e-9


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), m=st.integers(1, 3))
def test_superadditivity_product_inputs(seed, n, m):
    rng = np.random.default_rng(seed)
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    bd1, bd2 = random_probability(2**n, rng), random_probability(2**m, rng)
    states = lambda k: ch.block_states(k)  # noqa: E731

    def chi(probs, sts):
        avg = sum(p * s for p, s in zip(probs, sts))
        return dense_entropy(avg) - sum(p * dense_entropy(s) for p, s in zip(probs, sts))

    joint = np.kron(bd1, bd2)
    c_nm = chi(joint, states(n + m))
    assert c_nm >= chi(bd1, states(n)) + chi(bd2, states(m)) - 1e-9


def test_information_rates(noiseless, rng):
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    rates = J.information_rate_sequence(S.IIDProcess([0.4, 0.6]), ch, 4)
    assert np.allclose([r for _, r in rates], rates[0][1], atol=1e-10)
    noise = C.MarkovNoise(np.array([[0.8, 0.2], [0.4, 0.6]]),
                          (C.CPTPMap.identity(2), C.CPTPMap.depolarizing(2, 0.5)))
    mk = C.markov_noise([pure_state([1, 0]), pure_state([1, 1])], noise)
    for _, r in J.information_rate_sequence(S.IIDProcess([0.5, 0.5]), mk, 4):
        assert 0 <= r <= 1


def test_information_rates_truncate_with_warning(noiseless):
    with dimension_cap(16):
        with pytest.warns(ResourceWarning):
            rates = J.information_rate_sequence(S.IIDProcess([0.5, 0.5]), noiseless, 6)
    assert [n for n, _ in rates] == [1, 2, 3, 4]


def test_frozen_noise_rates_vs_mixture_oracle():
    maps = (C.CPTPMap.identity(2), C.CPTPMap.depolarizing(2, 0.7))
    sig = [pure_state([1, 0]), pure_state([1, 1])]
    ch = C.markov_noise(sig, C.MarkovNoise(np.eye(2), maps, [0.5, 0.5]))
    rates = dict(J.information_rate_sequence(S.IIDProcess([0.5, 0.5]), ch, 2))
    for n in (1, 2):
        outs = []
        for x in sequences(2, n):
            branches = [kron_all([m.apply(sig[a]) for a in x]) for m in maps]
            outs.append(0.5 * branches[0] + 0.5 * branches[1])
        avg = sum(outs) / len(outs)
        chi = dense_entropy(avg) - np.mean([dense_entropy(o) for o in outs])
        assert rates[n] == pytest.approx(chi / n, abs=1e-9)


def test_induced_channel_imc_is_identity(rng):
    noise = C.MarkovNoise(random_stochastic(2, 2, rng),
                          tuple(C.CPTPMap(random_kraus(2, 2, 2, rng)) for _ in range(2)))
    ch = C.markov_noise([random_density(2, rng) for _ in range(2)], noise)
    ind = J.induced_channel_block(S.MarkovProcess(random_stochastic(2, 2, rng)), ch, 3)
    for x in sequences(2, 3):
        assert np.abs(ind.output_state(x) - ch.output_state(x)).max() <= 1e-12


def test_induced_channel_finite_memory(rng):
    fm = C.finite_memory([random_density(2, rng) for _ in range(4)], 1)
    p = S.MarkovProcess(np.array([[0.9, 0.1], [0.4, 0.6]]))
    ind = J.induced_channel_block(p, fm, 1)
    pair = p.block_marginal(2).reshape(2, 2)
    for x in (0, 1):
        ref = sum(pair[c, x] * fm.output_state([x], [c]) for c in (0, 1)) / pair[:, x].sum()
        out = ind.output_state([x])
        assert np.allclose(out, ref)
        assert np.trace(out).real == pytest.approx(1.0)
    frozen = J.induced_channel_block(S.MarkovProcess(np.eye(2), [0.5, 0.5]), fm, 2)
    with pytest.raises(DomainError):
        frozen.output_state([0, 1])
    assert frozen.support == [(0, 0), (1, 1)]


def test_entropy_record(noiseless):
    rec = J.entropy_record(J.build_joint(S.IIDProcess([0.5, 0.5]), noiseless, 2))
    assert set(rec) == {"n", "s_input", "s_output", "s_joint", "chi", "chi_per_site"}
    assert rec["chi_per_site"] == pytest.approx(1.0)


def test_parallel_build_matches_serial(rng):
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    p = S.IIDProcess([0.3, 0.7])
    a, b = J.build_joint(p, ch, 3), J.build_joint(p, ch, 3, workers=4)
    assert all(np.array_equal(x, y) for x, y in zip(a.states, b.states))


def test_chi_zero_iff_equal_states(rng):
    sig = random_density(2, rng)
    eq = C.memoryless([sig, sig.copy()])
    assert J.holevo_information(J.build_joint(S.IIDProcess([0.2, 0.8]), eq, 2)) < 1e-12
    neq = C.memoryless([sig, random_density(2, rng)])
    assert J.holevo_information(J.build_joint(S.IIDProcess([0.2, 0.8]), neq, 2)) > 1e-6


def test_kron_helper_sanity():
    assert list(itertools.islice(sequences(3, 2), 4)) == [(0, 0), (0, 1), (0, 2), (1, 0)]
