"""Acceptance criteria; each test prints one PASS/FAIL line with its runtime."""

import itertools
import json
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from cqsum.channels import CqMac, CqPtp, additive_mac, doubly_symmetric_source, induced_sum_ensemble
from cqsum.cli import main
from cqsum.coding import NestedCosetCode, build_mac_sum_code, build_ptp_code, random_ncc
from cqsum.example1 import find_example1_witness
from cqsum.field import FieldMatrix, all_vectors, make_rng
from cqsum.quantum import CqEnsemble, holevo_information, von_neumann_entropy
from cqsum.rates import message_sum_rate
from cqsum.simulation import exact_mac_sum_error, exact_ptp_error, km_error_monte_carlo, pinching_check

from conftest import ket, random_density

HERE = Path(__file__).resolve().parent
CONFIGS = HERE.parent / "configs"
ZERO, ONE, PLUS = ket(1, 0), ket(0, 1), ket(1, 1)


@pytest.fixture
def report(capsys):
    t0 = time.perf_counter()

    def emit(number: int, ok: bool, detail: str, limit: float | None = None):
        elapsed = time.perf_counter() - t0
        within = limit is None or elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        budget = f" (limit {limit:g}s)" if limit is not None else ""
        with capsys.disabled():
            print(f"\n{status} criterion {number}: {detail} [{elapsed:.2f}s{budget}]")
        assert ok, detail
        assert within, f"runtime {elapsed:.1f}s exceeds {limit}s"

    return emit


def test_criterion_01_povm_validity(report):
    worst_neg, worst_comp, count = 0.0, 0.0, 0
    for i in range(50):
        rng = np.random.default_rng(1000 + i)
        q = (2, 3)[i % 2]
        n = int(rng.integers(1, 7))
        k = int(rng.integers(0, 3))
        l = int(rng.integers(0, min(3, 6 - k) + 1))
        delta = float(rng.uniform(0.1, 0.6))
        if i % 4 < 2:
            ptp = CqPtp(tuple(random_density(2, rng, rank=1 + (j % 2)) for j in range(q)))
            _, povm = build_ptp_code(random_ncc(n, k, l, q, i), ptp, rng.dirichlet(np.ones(q)), delta)
        else:
            mac = CqMac(np.array([[random_density(2, rng) for _ in range(2)] for _ in range(2)]))
            p1 = rng.dirichlet(np.ones(2 * q)).reshape(q, 2)
            p2 = rng.dirichlet(np.ones(2 * q)).reshape(q, 2)
            povm = build_mac_sum_code(mac, q, p1, p2, n, k, l, delta, seed=i).povm
        neg, _, comp = povm.defects()
        worst_neg, worst_comp = max(worst_neg, neg), max(worst_comp, comp)
        count += 1
    ok = count == 50 and worst_neg <= 1e-9 and worst_comp <= 1e-9
    report(1, ok, f"{count} POVMs, max negativity {worst_neg:.2e}, max |sum - I| {worst_comp:.2e} (tol 1e-9)", 120)


def test_criterion_02_entropy_oracles(report):
    s_mixed = von_neumann_entropy(np.eye(2) / 2)
    s_pure = von_neumann_entropy(PLUS)
    chi_orth = holevo_information(CqEnsemble([0.5, 0.5], (ZERO, ONE)))
    chi_plus = holevo_information(CqEnsemble([0.5, 0.5], (ZERO, PLUS)))
    closed = -sum(x * math.log2(x) for x in ((1 + math.sqrt(0.5)) / 2, (1 - math.sqrt(0.5)) / 2))
    ok = (
        abs(s_mixed - 1) <= 1e-10
        and abs(s_pure) <= 1e-10
        and abs(chi_orth - 1) <= 1e-10
        and abs(chi_plus - 0.6009) <= 1e-3
        and abs(chi_plus - closed) <= 1e-10
    )
    report(2, ok, f"S(I/2)={s_mixed:.12f} S(pure)={s_pure:.1e} chi_orth={chi_orth:.12f} chi(|0>,|+>)={chi_plus:.6f}", 1)


def test_criterion_03_algebraic_closure(report):
    failures, checked = 0, 0
    for i in range(100):
        rng = make_rng(3, i)
        q = (2, 3)[i % 2]
        n = int(rng.integers(1, 6))
        k = int(rng.integers(0, 3))
        l = int(rng.integers(0, 3))
        c1 = random_ncc(n, k, l, q, seed=i, stream=(1,))
        b2 = FieldMatrix(rng.integers(0, q, size=(1, n)), q)
        c2 = NestedCosetCode(c1.g_i, c1.g_oi, b2)
        s = NestedCosetCode(c1.g_i, c1.g_oi, c1.b + b2)
        members = {tuple(w) for w in s.all_codewords().reshape(-1, n).tolist()}
        for a1, m1, a2, m2 in itertools.product(all_vectors(q, k), all_vectors(q, l), all_vectors(q, k), all_vectors(q, l)):
            w = (c1.codeword(a1, m1) + c2.codeword(a2, m2)) % q
            checked += 1
            if tuple(w.tolist()) not in members or not np.array_equal(w, s.codeword((a1 + a2) % q, (m1 + m2) % q)):
                failures += 1
    report(3, failures == 0, f"{checked} codeword pairs over 100 code pairs, {failures} failures", 10)


def _median_ptp_error(ptp, n, k, l, delta, draws=20):
    errs = []
    for d in range(draws):
        book, povm = build_ptp_code(random_ncc(n, k, l, 2, 0, (n, k, l, d)), ptp, [0.5, 0.5], delta)
        errs.append(exact_ptp_error(book, povm, ptp).error)
    return statistics.median(errs)


def test_criterion_04_finite_n_trend(report):
    ptp = CqPtp((ZERO, PLUS))
    chi = holevo_information(CqEnsemble([0.5, 0.5], ptp.states))
    delta, k = 0.25, 1
    low4 = _median_ptp_error(ptp, 4, k, 1, delta)
    low8 = _median_ptp_error(ptp, 8, k, 2, delta)
    high8 = _median_ptp_error(ptp, 8, k, 7, delta)
    ok = low8 < low4 and high8 > low8 and 7 / 8 > chi
    report(
        4,
        ok,
        f"chi={chi:.4f}; rate 0.25 medians n=4 {low4:.4f} > n=8 {low8:.4f}; rate 0.875 n=8 median {high8:.4f} > {low8:.4f}",
        600,
    )


def test_criterion_05_km_monotone(report):
    pilot = json.loads((HERE / "data" / "km_pilot.json").read_text())
    src = doubly_symmetric_source(pilot["source"]["p"])
    frozen = {r["l"]: r for r in pilot["results"]}
    errs = {}
    for l in range(6, 15):
        errs[l] = km_error_monte_carlo(src, pilot["n"], l, pilot["trials"], pilot["seed"], pilot["policy"]).error
    full = km_error_monte_carlo(src, 16, 16, 5000, pilot["seed"], pilot["policy"]).error
    strict = all(errs[l + 1] < errs[l] for l in range(6, 14))
    matches = all(errs[l] <= frozen[l]["error"] + 3 * frozen[l]["stderr"] for l in errs)
    ok = strict and matches and full == 0.0
    seq = " > ".join(f"{errs[l]:.4f}" for l in range(6, 15))
    report(5, ok, f"errors l=6..14: {seq}; within pilot thresholds: {matches}; l=16 error {full}", 300)


def test_criterion_06_pinching(report):
    p_ab = [[0.5, 0.0], [0.25, 0.25]]
    states = [np.diag([0.9, 0.1]), np.diag([0.2, 0.8])]
    mins = [pinching_check(p_ab, states, n, 0.25)["min_trace"] for n in (4, 8, 12)]
    ident = [pinching_check(p_ab, [PLUS, PLUS], n, 0.25)["min_trace"] for n in (4, 8, 12)]
    ok = all(a <= b for a, b in zip(mins, mins[1:])) and all(abs(v - 1) <= 1e-9 for v in ident)
    report(6, ok, f"min trace n=4,8,12: {', '.join(f'{v:.6f}' for v in mins)}; identical pure: {', '.join(f'{v:.12f}' for v in ident)}", 300)


def test_criterion_07_example1(report):
    found = find_example1_witness()
    ws = found["witnesses"]
    closed_vs_generic = max((w["consistency"]["structured_rhs_vs_generic"] for w in ws), default=math.inf)
    lhs_check = max((w["consistency"]["structured_lhs_vs_direct"] for w in ws), default=math.inf)
    chi_check = max((w["consistency"]["unstructured_rhs_vs_grid_chi"] for w in ws), default=math.inf)
    shape_ok = all(w["structured"]["holds"] and not w["unstructured"]["holds"] for w in ws)
    ok = len(ws) >= 1 and shape_ok and closed_vs_generic <= 1e-8 and lhs_check <= 1e-8 and chi_check <= 1e-6
    first = found["witness"]
    where = f"first at p={first['p']}, q={first['q_noise']}, overlap={first['overlap']}" if first else "none"
    report(
        7,
        ok,
        f"{len(ws)} witnesses ({where}); max closed-vs-generic {closed_vs_generic:.1e} (tol 1e-8), max closed-vs-grid chi {chi_check:.1e} (tol 1e-6)",
        300,
    )


def _independent_rate(mac, q, p1, p2):
    pv1, pv2 = p1.sum(axis=1), p2.sum(axis=1)
    h = lambda p: -sum(x * math.log2(x) for x in p if x > 0)
    p_u = np.array([sum(pv1[v] * pv2[(u - v) % q] for v in range(q)) for u in range(q)])
    avg = np.zeros_like(mac.states[0, 0])
    ent = 0.0
    for u in range(q):
        tau = sum(p1[v, a] * p2[(u - v) % q, b] * mac.states[a, b] for v in range(q) for a in range(p1.shape[1]) for b in range(p2.shape[1]))
        avg = avg + tau
        if p_u[u] > 0:
            ent += p_u[u] * von_neumann_entropy(tau / p_u[u])
    chi = von_neumann_entropy(avg) - ent
    return min(h(pv1), h(pv2)) - h(p_u) + chi


def test_criterion_08_rate_consistency(report):
    worst = 0.0
    for i in range(100):
        rng = make_rng(8, i)
        q, nx, d = (2, 3)[i % 2], int(rng.integers(1, 4)), int(rng.integers(2, 4))
        mac = CqMac(np.array([[random_density(d, rng) for _ in range(nx)] for _ in range(nx)]))
        p1 = rng.dirichlet(np.ones(q * nx)).reshape(q, nx)
        p2 = rng.dirichlet(np.ones(q * nx)).reshape(q, nx)
        worst = max(worst, abs(message_sum_rate(mac, q, p1, p2).rate - _independent_rate(mac, q, p1, p2)))
    report(8, worst <= 1e-12, f"max |R - recomputed| over 100 instances {worst:.2e} (tol 1e-12)", 60)


def test_criterion_09_additive_equivalence(report):
    worst = 0.0
    for i in range(10):
        rng = make_rng(9, i)
        q = (2, 3)[i % 2]
        n = int(rng.integers(2, 5))
        l = int(rng.integers(1, 3))
        ptp = CqPtp(tuple(random_density(2, rng, rank=1 + (j % 2)) for j in range(q)))
        mac = additive_mac(ptp, q)
        u = np.eye(q) / q
        code = build_mac_sum_code(mac, q, u, u, n=n, k=0, l=l, delta=0.4, seed=i)
        p_u = induced_sum_ensemble(mac, q, u, u).p_u
        book, povm = build_ptp_code(code.decoder_ncc, ptp, p_u, 0.4)
        e_mac = exact_mac_sum_error(code).error
        e_ptp = exact_ptp_error(book, povm, ptp).error
        worst = max(worst, abs(e_mac - e_ptp))
    report(9, worst <= 1e-9, f"max |mac-sum error - reduced ptp error| over 10 instances {worst:.2e} (tol 1e-9)", 300)


def test_criterion_10_determinism(report, tmp_path):
    names = sorted(p.name for p in CONFIGS.glob("*.json"))
    same = []
    for name in names:
        cfg = CONFIGS / name
        cmd = json.loads(cfg.read_text())["command"]
        outs = []
        for tag in "ab":
            out = tmp_path / f"{name}-{tag}"
            assert main([cmd, "--config", str(cfg), "--out", str(out), "--no-timestamp"]) == 0
            outs.append(((out / "report.json").read_bytes(), (out / "sweep.csv").read_bytes()))
        same.append(outs[0] == outs[1])
    report(10, all(same) and len(names) > 0, f"{sum(same)}/{len(names)} configs byte-identical across two runs")
