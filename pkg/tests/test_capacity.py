import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqcoding import capacity as Cap
from cqcoding import channels as C
from cqcoding import coding as K
from cqcoding import sources as S
from cqcoding.errors import DomainError, InvariantError, UnsupportedError
from cqcoding.joint import build_joint, holevo_information
from cqcoding.operators import pure_state
from cqcoding.random_ops import random_density


def test_orthogonal_and_identical(noiseless, identical):
    r = Cap.holevo_cn(noiseless, 1)
    assert r.value == pytest.approx(1.0, abs=1e-9)
    assert r.optimizer == pytest.approx([0.5, 0.5], abs=1e-6)
    assert Cap.holevo_cn(identical, 2).value == pytest.approx(0.0, abs=1e-9)


def test_overlapping_pure_states_closed_form():
    theta = 0.7
    ch = C.memoryless([pure_state([1, 0]), pure_state([math.cos(theta), math.sin(theta)])])
    lam = np.array([1 + math.cos(theta), 1 - math.cos(theta)]) / 2
    expected = -float(np.sum(lam * np.log2(lam)))
    r = Cap.holevo_cn(ch, 1, tol=1e-12)
    assert r.value == pytest.approx(expected, abs=1e-8)
    assert r.gap_estimate <= 1e-6


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_iteration_matches_grid(seed):
    rng = np.random.default_rng(seed)
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    it = Cap.holevo_cn(ch, 1, tol=1e-12)
    grid = Cap.holevo_cn(ch, 1, method="grid")
    assert it.value >= grid.value - 1e-9
    assert it.value - grid.value <= 1e-4
    assert all(b >= a - 1e-12 for a, b in zip(it.history, it.history[1:]))
    assert it.value <= it.value + it.gap_estimate


def test_three_letter_grid(rng):
    ch = C.memoryless([random_density(2, rng) for _ in range(3)])
    it = Cap.holevo_cn(ch, 1, tol=1e-12)
    grid = Cap.holevo_cn(ch, 1, method="grid")
    assert it.value >= grid.value - 1e-9 and it.value - grid.value <= 1e-3


def test_superadditivity_of_cn(rng):
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    c1 = Cap.holevo_cn(ch, 1, tol=1e-11).value
    c2 = Cap.holevo_cn(ch, 2, tol=1e-11).value
    assert c2 >= 2 * c1 - 1e-6
    rows = Cap.multi_letter_lower_bound(ch, [1, 2])
    assert rows[1]["lower_bound"] >= rows[0]["lower_bound"]
    assert all(r["asymptotic_lower_bound_only"] for r in rows)


def test_memory_channel_needs_context(markov_channel):
    with pytest.raises(UnsupportedError):
        Cap.holevo_cn(C.finite_memory([np.eye(2) / 2] * 4, 1), 1)
    fm = C.finite_memory([pure_state([1, 0]), pure_state([0, 1])] * 2, 1)
    assert Cap.holevo_cn(fm, 1, context=[0]).value == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError):
        Cap.holevo_cn(fm, 1, context=[0], method="simplex")


def test_weak_converse_floor_examples():
    assert Cap.weak_converse_floor(1.0, 10, 0.5) == pytest.approx(4 / 15)
    assert Cap.weak_converse_floor(1.0, 1, 0.5) == 0.0
    assert Cap.weak_converse_floor(0.0, 10**6, 1e6) < 1.0
    assert Cap.weak_converse_floor(0.0, 10**6, 1e6) == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(DomainError):
        Cap.weak_converse_floor(1.0, 1, 0.0)


def test_measured_mi_noiseless(noiseless):
    code = K.Code.from_decoders(1, [(0,), (1,)], [np.diag([1.0, 0]), np.diag([0, 1.0])])
    rep = Cap.measured_mutual_info(code, noiseless)
    assert rep.mutual_info == pytest.approx(1.0)
    assert rep.chi == pytest.approx(1.0)
    assert rep.avg_error == pytest.approx(0.0, abs=1e-12)
    assert not rep.completed
    one = K.Code.from_decoders(1, [(0,)], [np.diag([1.0, 0])])
    r1 = Cap.measured_mutual_info(one, noiseless)
    assert r1.completed and r1.K.shape == (1, 2)


def test_transition_matrix_oracle(rng):
    states = [random_density(3, rng) for _ in range(2)]
    decs = [random_density(3, rng) / 3 for _ in range(2)]
    K_ = Cap.transition_matrix(states, [K.factor_of(b) for b in decs])
    ref = np.array([[np.trace(d @ b).real for b in decs] for d in states])
    assert np.allclose(K_, ref)


def pretty_good_measurement(ops):
    s = sum(ops)
    w, v = np.linalg.eigh(s)
    inv = (v / np.sqrt(w)) @ v.conj().T
    return [inv @ a @ inv for a in ops]


def test_measured_mi_sweep():
    rng = np.random.default_rng(77)
    for _ in range(200):
        k = int(rng.integers(2, 5))
        ch = C.memoryless([random_density(2, rng) for _ in range(3)])
        words = [(int(rng.integers(3)),) for _ in range(k)]
        decs = pretty_good_measurement([ch.output_state(u) for u in words])
        code = K.Code.from_decoders(1, words, decs)
        rep = Cap.measured_mutual_info(code, ch)
        assert rep.holevo_slack >= -1e-9
        assert 0 <= rep.avg_error <= 1
        assert np.allclose(rep.K.sum(axis=1), 1)


def test_periodic_period_one_is_iid(rng):
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    rows = Cap.periodic_product_rate([0.3, 0.7], ch, 3, period=1)
    for r in rows:
        ref = holevo_information(build_joint(S.IIDProcess([0.3, 0.7]), ch, r["n"])) / r["n"]
        assert r["product_rate"] == pytest.approx(ref)
        assert r["shift_average_rate"] == pytest.approx(ref)


def test_periodic_examples(noiseless, rng):
    uniform = Cap.periodic_product_rate(np.full(4, 0.25), noiseless, 4)
    assert all(r["product_rate"] == pytest.approx(1.0) for r in uniform)
    det = Cap.periodic_product_rate([0, 1, 0, 0], noiseless, 4)
    for r in det:
        assert r["product_rate"] == pytest.approx(0.0, abs=1e-12)
        assert r["shift_average_rate"] == pytest.approx(1.0 / r["n"])
    ch = C.memoryless([random_density(2, rng) for _ in range(2)])
    for r in Cap.periodic_product_rate(rng.dirichlet(np.ones(4)), ch, 5):
        assert r["shift_average_rate"] >= r["bound"] - 1e-9


def test_weak_converse_on_duplicated_code(noiseless):
    n = 3
    M = 2 ** (2 * n)
    words = [tuple(int(b) for b in format(i % 2**n, f"0{n}b")) for i in range(M)]
    decs = []
    for i, u in enumerate(words):
        e = np.zeros(2**n)
        e[i % 2**n] = 1.0
        decs.append(np.diag(e) if i < 2**n else np.zeros((2**n, 2**n)))
    code = K.Code(n, tuple(words), tuple(K.factor_of(b) for b in decs), 2**n)
    _, avg = K.evaluate_errors(code, noiseless)
    assert avg == pytest.approx(1 - 2**n / M)
    assert avg >= Cap.weak_converse_floor(1.0, n, 1.0)
    rep = Cap.measured_mutual_info(code, noiseless)
    assert rep.avg_error >= rep.fano_floor - 1e-12


def test_fano_violation_detected(monkeypatch, noiseless):
    code = K.Code.from_decoders(1, [(0,), (1,), (0,)],
                                [np.diag([1.0, 0]), np.diag([0, 1.0]), np.zeros((2, 2))])
    monkeypatch.setattr(Cap, "mutual_information", lambda px, K: 0.0)
    with pytest.raises(InvariantError):
        Cap.measured_mutual_info(code, noiseless)


def test_capacity_csv(noiseless):
    text = Cap.capacity_csv([Cap.holevo_cn(noiseless, 1)])
    assert text.splitlines()[0] == "n,C_n,C_n_per_site,method,iterations,gap_estimate"
