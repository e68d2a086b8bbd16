import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqsum.channels import (
    CqMac,
    CqPtp,
    SourcePair,
    additive_mac,
    additive_reduction,
    doubly_symmetric_source,
    example1_channel,
    induced_sum_ensemble,
)
from cqsum.errors import UsageError, ValidationError
from cqsum.quantum import CqEnsemble, holevo_information

from conftest import ket, random_density

ZERO, ONE = ket(1, 0), ket(0, 1)


def rho_t(t, s0, s1):
    return (1 - t) * s0 + t * s1


def test_example1_channel_table():
    ch = example1_channel(0.0, ZERO, ONE)
    assert np.allclose(ch.states[0, 0], ZERO)
    for x in [(0, 1), (1, 0), (1, 1)]:
        assert np.allclose(ch.states[x], ONE)
    ch = example1_channel(0.3, ZERO, ONE)
    assert np.allclose(ch.states[0, 0], np.diag([0.7, 0.3]))
    assert np.array_equal(ch.states[0, 1], ch.states[1, 0]) and np.array_equal(ch.states[0, 1], ch.states[1, 1])
    with pytest.raises(UsageError):
        example1_channel(0.2, ZERO, np.eye(3) / 3)
    with pytest.raises(UsageError):
        example1_channel(1.2, ZERO, ONE)


def test_channel_validation():
    with pytest.raises(ValidationError):
        CqPtp((np.diag([0.5, 0.6]),))
    with pytest.raises(UsageError):
        CqPtp((ZERO, np.eye(3) / 3))
    with pytest.raises(UsageError):
        CqMac(np.zeros((2, 2, 2)))
    with pytest.raises(UsageError):
        SourcePair(np.array([0.5, 0.5]))


def test_identity_embedding_gives_channel_states(rng):
    mac = CqMac(np.array([[random_density(2, rng) for _ in range(2)] for _ in range(2)]))
    eye = np.eye(2) / 2
    ens = induced_sum_ensemble(mac, 2, eye, eye)
    for v1 in range(2):
        for v2 in range(2):
            assert np.allclose(ens.rho_v1v2[v1, v2], mac.states[v1, v2])


def test_example1_ensemble_closed_form():
    s0, s1 = ket(1, 0), ket(0.6, 0.8)
    qn, th = 0.15, 0.35
    mac = example1_channel(qn, s0, s1)
    p = np.array([[1 - th, 0], [0, th], [0, 0]])
    ens = induced_sum_ensemble(mac, 3, p, p)
    assert np.allclose(ens.p_u, [(1 - th) ** 2, 2 * th * (1 - th), th**2])
    assert np.allclose(ens.rho_u[0], rho_t(qn, s0, s1))
    assert np.allclose(ens.rho_u[1], rho_t(1 - qn, s0, s1))
    assert np.allclose(ens.rho_u[2], rho_t(1 - qn, s0, s1))


def test_zero_probability_labels_omitted():
    mac = example1_channel(0.1, ZERO, ONE)
    p = np.array([[1.0, 0], [0, 0], [0, 0]])
    ens = induced_sum_ensemble(mac, 3, p, p)
    assert ens.support == [0]
    assert ens.ensemble().probs.tolist() == [1.0]


def test_uniform_on_additive_channel_is_uniform(rng):
    ptp = CqPtp(tuple(random_density(2, rng) for _ in range(3)))
    mac = additive_mac(ptp, 3)
    u = np.eye(3) / 3
    ens = induced_sum_ensemble(mac, 3, u, u)
    assert np.allclose(ens.p_u, 1 / 3)


def test_alphabet_mismatch():
    mac = example1_channel(0.1, ZERO, ONE)
    with pytest.raises(UsageError):
        induced_sum_ensemble(mac, 2, np.eye(3) / 3, np.eye(2) / 2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), q=st.sampled_from([2, 3]), nx=st.integers(1, 3))
def test_ensemble_invariants(seed, q, nx):
    rng = np.random.default_rng(seed)
    mac = CqMac(np.array([[random_density(2, rng) for _ in range(nx)] for _ in range(nx)]))
    p1 = rng.dirichlet(np.ones(q * nx)).reshape(q, nx)
    p2 = rng.dirichlet(np.ones(q * nx)).reshape(q, nx)
    ens = induced_sum_ensemble(mac, q, p1, p2)
    assert abs(ens.p_u.sum() - 1) < 1e-12
    for u in ens.support:
        assert abs(np.trace(ens.rho_u[u]) - 1) < 1e-10
    lhs = sum(ens.p_u[u] * ens.rho_u[u] for u in ens.support)
    rhs = np.einsum("a,b,abxy->xy", ens.p_v1, ens.p_v2, ens.rho_v1v2)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_additive_reduction(rng):
    ptp = CqPtp(tuple(random_density(2, rng) for _ in range(3)))
    red = additive_reduction(additive_mac(ptp, 3), 3)
    assert red is not None
    assert all(np.allclose(a, b) for a, b in zip(red.states, ptp.states))
    assert additive_reduction(example1_channel(0.2, ZERO, ONE), 2) is None
    red = additive_reduction(example1_channel(0.5, ZERO, ONE), 2)
    assert red is not None and all(np.allclose(s, np.eye(2) / 2) for s in red.states)
    assert additive_reduction(example1_channel(0.2, ZERO, ONE), 3) is None


def test_additive_reduction_holevo_agrees(rng):
    ptp = CqPtp(tuple(random_density(2, rng) for _ in range(3)))
    mac = additive_mac(ptp, 3)
    p1 = np.diag(rng.dirichlet(np.ones(3)))
    p2 = np.diag(rng.dirichlet(np.ones(3)))
    ens = induced_sum_ensemble(mac, 3, p1, p2)
    direct = holevo_information(CqEnsemble(ens.p_u, ptp.states))
    assert abs(direct - holevo_information(ens.ensemble())) < 1e-10


def test_source_sum_pmf():
    src = doubly_symmetric_source(0.2)
    assert np.allclose(src.sum_pmf(2), [0.8, 0.2])
    assert np.allclose(src.sum_pmf(3), [0.4, 0.2, 0.4])
    assert np.allclose(src.sum_pmf(3, [0, 0], [0, 0]), [1, 0, 0])
    with pytest.raises(UsageError):
        src.sum_pmf(2, [0, 2], [0, 1])
