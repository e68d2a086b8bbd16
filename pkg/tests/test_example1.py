import numpy as np
import pytest

from cqsum.errors import UsageError
from cqsum.example1 import (
    entropy_rho,
    example1_analysis,
    find_example1_witness,
    grid_values,
    pure_pair,
    structured_rhs_curve,
    ternary_embedding_pmf,
    unstructured_rhs,
)
from cqsum.channels import example1_channel
from cqsum.quantum import von_neumann_entropy
from cqsum.rates import binary_entropy, message_sum_rate



def test_entropy_rho_matches_eigen():
    for c in [0.0, 0.3, 0.9, 1.0]:
        s0, s1 = pure_pair(c)
        for t in [0.0, 0.1, 0.5, 0.77]:
            assert entropy_rho(t, c) == pytest.approx(von_neumann_entropy((1 - t) * s0 + t * s1), abs=1e-10)


def test_closed_form_special_values():
    assert unstructured_rhs(0.0, 0.0) == pytest.approx(1.0)
    assert unstructured_rhs(0.0, 1.0) == pytest.approx(0.0)
    assert structured_rhs_curve(0.0, 0.2, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_closed_form_vs_generic_random_sweep():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        qn, c, th = rng.uniform(0, 0.5), rng.uniform(0, 0.95), rng.uniform(0, 1)
        mac = example1_channel(qn, *pure_pair(c))
        gen = message_sum_rate(mac, 3, ternary_embedding_pmf(th), ternary_embedding_pmf(th)).rate
        worst = max(worst, abs(gen - float(structured_rhs_curve(th, qn, c))))
    assert worst < 1e-8


def test_analysis_consistency_and_source_check():
    rep = example1_analysis(0.1, 0.05, *pure_pair(0.2), theta_grid=np.linspace(0, 1, 201))
    assert all(v < 1e-6 for v in rep["consistency"].values())
    direct = rep["source_model_check"]["direct_entropies"]
    assert direct["H_joint_doubly_symmetric"] == pytest.approx(1 + binary_entropy(0.1))
    assert rep["structured"]["lhs"] == pytest.approx(direct["H_sum_independent"], abs=1e-12)


def test_generic_mode_accepts_mixed_states():
    s0 = np.diag([0.9, 0.1]).astype(complex)
    s1 = np.diag([0.2, 0.8]).astype(complex)
    with pytest.raises(UsageError):
        example1_analysis(0.1, 0.1, s0, s1)
    rep = example1_analysis(0.1, 0.1, s0, s1, theta_grid=np.linspace(0, 1, 51), mode="generic")
    assert rep["overlap"] is None and "structured" in rep


def test_mode_agreement_pure():
    grid = np.linspace(0, 1, 101)
    a = example1_analysis(0.2, 0.1, *pure_pair(0.4), theta_grid=grid)
    b = example1_analysis(0.2, 0.1, *pure_pair(0.4), theta_grid=grid, mode="generic")
    assert abs(a["structured"]["rhs"] - b["structured"]["rhs"]) < 1e-8
    assert a["structured"]["theta_star"] == b["structured"]["theta_star"]


def test_bad_arguments():
    with pytest.raises(UsageError):
        example1_analysis(0.0, 0.1, *pure_pair(0.1))
    with pytest.raises(UsageError):
        example1_analysis(0.1, 0.1, *pure_pair(0.1), mode="other")
    with pytest.raises(UsageError):
        pure_pair(1.2)


def test_grid_values():
    g = grid_values(0.05, 0.45, 0.05)
    assert len(g) == 9 and g[0] == 0.05 and g[-1] == 0.45


def test_small_witness_search():
    out = find_example1_witness([0.05], [0.0], [0.0, 0.1], theta_grid=np.linspace(0, 1, 201), first_only=True)
    w = out["witness"]
    assert w is not None and w["witness"]
    assert w["structured"]["holds"] and not w["unstructured"]["holds"]
