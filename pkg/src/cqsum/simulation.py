"""Exact error probabilities of the codes and Monte Carlo verifiers.

Quantum measurement statistics are always evaluated exactly (traces);
sampling is used only for classical randomness (sources, random codes).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channels import CqMac, CqPtp, SourcePair
from .coding import (
    STREAM_H,
    KmCode,
    MacSumCode,
    PtpCodebook,
    coset_leader_table,
    km_decode_ml,
    random_parity,
)
from .errors import DEFAULT_BUDGET, Budget, UsageError
from .field import FieldMatrix, all_vectors, check_prime, make_rng, uniform_random_matrix
from .quantum import FAIL, CqEnsemble, Povm, apply_product, typical_basis
from .typicality import check_pmf, counts_typical, is_typical, joint_typical_mask, typical_mask


@dataclass
class SimResult:
    error: float
    stderr: float
    n: int
    rates: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, timestamp: bool = True) -> dict:
        d = {"error": self.error, "stderr": self.stderr, "n": self.n, "rates": dict(self.rates), "seeds": list(self.seeds), **self.extra}
        if timestamp:
            d["wall_time"] = self.wall_time
        return d


def wilson_half_width(p: float, trials: int, z: float = 1.0) -> float:
    """Half-width of the Wilson score interval (z = 1: one standard error)."""
    if trials <= 0:
        return float("nan")
    denom = 1 + z * z / trials
    return z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _message_pmf(p, q: int, l: int, name: str) -> np.ndarray:
    if p is None:
        return np.full(q**l, q ** -float(l))
    p = check_pmf(p, name).ravel()
    if p.size != q**l:
        raise UsageError(f"{name} must have {q ** l} entries (one per message)")
    return p


def exact_ptp_error(codebook: PtpCodebook, povm: Povm, ptp: CqPtp, p_m=None) -> SimResult:
    """Average error sum_m p(m) [1 - tr(Lambda_m sigma_{c(m)})]; failure counts as error."""
    t0 = time.perf_counter()
    ncc = codebook.ncc
    pm = _message_pmf(p_m, ncc.q, ncc.l, "p_M")
    terms = []
    for i, m in enumerate(ncc.messages()):
        word = codebook.codeword(i)
        c = povm.compress_product([ptp.states[v] for v in word])
        terms.append(pm[i] * (1.0 - povm.probabilities_compressed(c)[m]))
    err = _clip01(math.fsum(terms))
    rate = ncc.l * math.log2(ncc.q) / ncc.n
    return SimResult(err, 0.0, ncc.n, {"rate": rate, "k": ncc.k, "l": ncc.l}, [], time.perf_counter() - t0, {"uncovered_messages": codebook.uncovered})


def mac_outcome_table(code: MacSumCode, mac: CqMac) -> np.ndarray:
    """P[m1_index, m2_index, outcome_index] with outcomes ordered as ``code.povm.labels``."""
    nm = code.q**code.l
    table = np.zeros((nm, nm, len(code.povm)))
    cache: dict = {}
    for i in range(nm):
        for j in range(nm):
            key = (code.inputs1[i].tobytes(), code.inputs2[j].tobytes())
            if key not in cache:
                factors = [mac.states[a, b] for a, b in zip(code.inputs1[i], code.inputs2[j])]
                probs = code.povm.probabilities_compressed(code.povm.compress_product(factors))
                cache[key] = np.array([probs[lab] for lab in code.povm.labels])
            table[i, j] = cache[key]
    return table


def _sum_index(q: int, l: int) -> np.ndarray:
    ms = all_vectors(q, l)
    weights = q ** np.arange(l - 1, -1, -1) if l else np.zeros(0, dtype=np.int64)
    s = (ms[:, None, :] + ms[None, :, :]) % q
    return (s * weights).sum(axis=2) if l else np.zeros((1, 1), dtype=np.int64)


def exact_mac_sum_error(code: MacSumCode, p_m1=None, p_m2=None, mac: CqMac | None = None, budget: Budget = DEFAULT_BUDGET) -> SimResult:
    """1 - sum p(m1) p(m2) tr(Lambda_{m1+m2} rho_{x1(m1) x2(m2)}), exactly."""
    mac = mac if mac is not None else code.mac
    if mac is None:
        raise UsageError("exact_mac_sum_error needs the channel")
    t0 = time.perf_counter()
    q, l = code.q, code.l
    budget.check("enum", q ** (2 * l))
    p1 = _message_pmf(p_m1, q, l, "p_M1")
    p2 = _message_pmf(p_m2, q, l, "p_M2")
    table = mac_outcome_table(code, mac)
    sums = _sum_index(q, l)
    nm = q**l
    terms = [p1[i] * p2[j] * (1.0 - table[i, j, sums[i, j]]) for i in range(nm) for j in range(nm)]
    err = _clip01(math.fsum(terms))
    rate = l * math.log2(q) / code.n
    extra = {"uncovered_messages": [int(np.count_nonzero(code.coverage1 == 0)), int(np.count_nonzero(code.coverage2 == 0))]}
    return SimResult(err, 0.0, code.n, {"rate": rate, "k": code.k, "l": l}, [code.seed], time.perf_counter() - t0, extra)


def _seq_index(seqs: np.ndarray, base: int) -> np.ndarray:
    w = base ** np.arange(seqs.shape[1] - 1, -1, -1)
    return seqs @ w


def end_to_end_function_error(
    h1: FieldMatrix,
    h2: FieldMatrix,
    code: MacSumCode,
    source: SourcePair,
    mac: CqMac,
    mode: str = "exact",
    trials: int = 10000,
    seed: int = 0,
    budget: Budget = DEFAULT_BUDGET,
) -> SimResult:
    """Error of the composed scheme: syndromes h s_j sent through the message-sum
    code, then ML decoding of s1 + s2 from the decoded syndrome sum."""
    if h1 != h2:
        raise UsageError("both senders must use the same parity matrix")
    q, n, l = code.q, code.n, code.l
    if h1.q != q or h1.shape != (l, n):
        raise UsageError(f"parity matrix must be {l} x {n} over F_{q}")
    a, b = source.sizes
    if a > q or b > q:
        raise UsageError("source alphabets must embed in F_q")
    t0 = time.perf_counter()
    km = KmCode(h1, source.sum_pmf(q))
    table = mac_outcome_table(code, mac)
    # decoded estimate of s1 + s2 for each outcome; failure maps to -1
    leaders = []
    for lab in code.povm.labels:
        leaders.append(-1 if lab == FAIL else int(_seq_index(km_decode_ml(km, lab, budget)[None], q)[0]))
    leaders = np.array(leaders)
    hz = h1.data.T

    def success(s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
        m1 = _seq_index((s1 @ hz) % q, q) if l else np.zeros(len(s1), dtype=np.int64)
        m2 = _seq_index((s2 @ hz) % q, q) if l else np.zeros(len(s2), dtype=np.int64)
        z = _seq_index((s1 + s2) % q, q)
        hit = leaders[None, :] == z[:, None]
        return np.sum(table[m1, m2] * hit, axis=1)

    if mode == "exact":
        budget.check("enum", (a * b) ** n)
        seq1, seq2 = all_vectors(a, n), all_vectors(b, n)
        terms = []
        for s1 in seq1:
            w = np.prod(source.pmf[s1[None, :], seq2], axis=1)
            ok = success(np.repeat(s1[None], len(seq2), axis=0), seq2)
            terms.extend((w * (1.0 - ok)).tolist())
        err = _clip01(math.fsum(terms))
        return SimResult(err, 0.0, n, {"rate": l * math.log2(q) / n}, [code.seed], time.perf_counter() - t0, {"mode": "exact"})
    if mode != "monte_carlo":
        raise UsageError(f"unknown mode {mode!r}")
    if trials < 1:
        raise UsageError("trials must be positive")
    rng = make_rng(seed, 0)
    flat = rng.choice(a * b, size=(trials, n), p=source.pmf.ravel())
    s1, s2 = flat // b, flat % b
    errs = 1.0 - success(s1, s2)
    est = _clip01(math.fsum(errs.tolist()) / trials)
    return SimResult(est, wilson_half_width(est, trials), n, {"rate": l * math.log2(q) / n}, [code.seed, seed], time.perf_counter() - t0, {"mode": "monte_carlo", "trials": trials})


# -- pinching ---------------------------------------------------------------


def _compositions(total: int, parts: int):
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        yield [edges[i + 1] - edges[i] - 1 for i in range(parts)]


def _is_diagonal(ops) -> bool:
    return all(np.max(np.abs(o - np.diag(np.diag(o)))) <= 1e-12 for o in ops)


def pinching_check(p_ab, states, n: int, delta: float, budget: Budget = DEFAULT_BUDGET, fast: bool = True) -> dict:
    """min of tr(Pi_rho Pi_{a^n} Pi_rho rho_{b^n}) over (a^n, b^n) jointly typical at radius delta/4.

    Pi_rho is the delta-typical projector of rho = sum_b p_B rho_b and
    Pi_{a^n} the delta-conditional typical projector for {p_A; rho_a} with
    rho_a = sum_b p_{B|A} rho_b.  The trace is invariant under a common
    permutation of (a^n, b^n), so one representative per joint type is
    evaluated.  Commuting diagonal ensembles take a classical fast path
    unless ``fast`` is False.
    """
    p_ab = check_pmf(p_ab, "p_AB")
    states = [np.asarray(s, dtype=complex) for s in states]
    na, nb = p_ab.shape
    if len(states) != nb:
        raise UsageError("one state per letter of B")
    d = states[0].shape[0]
    budget.check("dim", d**n)
    p_a = p_ab.sum(axis=1)
    cond = np.where(p_a[:, None] > 0, p_ab / np.where(p_a[:, None] > 0, p_a[:, None], 1.0), 1.0 / nb)
    rho_a = [sum(cond[a, b] * states[b] for b in range(nb)) for a in range(na)]
    ens_a = CqEnsemble(p_a, tuple(rho_a))
    diag = fast and _is_diagonal(states)
    if diag:
        ys = all_vectors(d, n)
        rho = np.real(np.diag(ens_a.average()))
        uncond = typical_mask(ys, rho, delta)
    else:
        basis = typical_basis(ens_a, n, delta, budget=budget)
        bh = basis.conj().T
    best = (math.inf, None)
    evaluated = 0
    for comp in _compositions(n, na * nb):
        counts = np.array(comp).reshape(na, nb)
        if not counts_typical(counts[None], n, p_ab, delta / 4)[0]:
            continue
        pairs = [(a, b) for a in range(na) for b in range(nb) for _ in range(counts[a, b])]
        an = np.array([x for x, _ in pairs])
        bn = np.array([y for _, y in pairs])
        evaluated += 1
        if diag:
            spectra = np.real(np.array([np.diag(r) for r in rho_a]))
            joint = p_a[:, None] * spectra
            mask = uncond & _joint_mask(an, ys, joint, delta, p_a)
            probs = np.real(np.array([np.diag(states[b]) for b in bn]))
            val = float(np.sum(np.prod(probs[np.arange(n), ys[mask]], axis=1))) if mask.any() else 0.0
        else:
            c = typical_basis(ens_a, n, delta, given=an, budget=budget)
            x = bh @ c
            inner = bh @ apply_product([states[b] for b in bn], basis)
            val = float(np.real(np.trace(x @ x.conj().T @ inner)))
        if val < best[0]:
            best = (val, (an.tolist(), bn.tolist()))
    return {"min_trace": best[0], "argmin": best[1], "joint_types_evaluated": evaluated, "n": n, "delta": delta, "diagonal_path": diag}


def _joint_mask(an: np.ndarray, ys: np.ndarray, joint: np.ndarray, delta: float, p_a: np.ndarray) -> np.ndarray:
    if not is_typical(an, p_a, delta):
        return np.zeros(len(ys), dtype=bool)
    return joint_typical_mask(an, ys, joint, delta)


# -- coset coverage ---------------------------------------------------------


def coset_coverage_probability(n: int, k: int, q: int, p_v, delta: float, trials: int, seed: int, budget: Budget = DEFAULT_BUDGET) -> SimResult:
    """Fraction of random (g_I, b) draws whose coset of m = 0 has no typical codeword."""
    check_prime(q)
    p_v = check_pmf(p_v, "p_V")
    if p_v.size != q:
        raise UsageError(f"p_V must be a pmf over F_{q}")
    if trials < 1:
        raise UsageError("trials must be positive")
    budget.check("enum", q**k)
    t0 = time.perf_counter()
    avecs = all_vectors(q, k)
    failures = 0
    for t in range(trials):
        inner = avecs @ uniform_random_matrix(k, n, q, seed, (t, 0)).data if k else np.zeros((1, n), dtype=np.int64)
        b = uniform_random_matrix(1, n, q, seed, (t, 1)).data[0]
        if not typical_mask((inner + b) % q, p_v, delta).any():
            failures += 1
    est = failures / trials
    return SimResult(est, wilson_half_width(est, trials), n, {"k_over_n": k / n}, [seed], time.perf_counter() - t0, {"trials": trials, "failures": failures})


# -- Koerner-Marton ----------------------------------------------------------


def km_error_monte_carlo(
    source: SourcePair,
    n: int,
    l: int,
    trials: int,
    seed: int,
    policy: str = "fixed",
    budget: Budget = DEFAULT_BUDGET,
) -> SimResult:
    """Block error of ML decoding of s1 + s2 from h s1 + h s2.

    Source samples depend only on ``seed`` (common random numbers across l).
    ``policy="fixed"`` draws one h per (seed, l); ``"per_trial"`` draws a
    fresh h for every trial; ``"nested"`` takes the first l rows of one
    invertible n x n matrix per seed, so the coset of z shrinks as l grows and
    the error is pathwise non-increasing in l.  When l = n every h is
    redrawn until invertible.
    """
    q = source.sizes[0]
    if source.sizes != (q, q):
        raise UsageError("source alphabets must both be F_q")
    check_prime(q)
    if not 0 <= l <= n:
        raise UsageError("need 0 <= l <= n")
    if trials < 1:
        raise UsageError("trials must be positive")
    t0 = time.perf_counter()
    p_z = source.sum_pmf(q)
    rng = make_rng(seed, 0)
    flat = rng.choice(q * q, size=(trials, n), p=source.pmf.ravel())
    z = (flat // q + flat % q) % q
    full = l == n
    errors = 0
    if policy in ("fixed", "nested"):
        if policy == "fixed":
            h = random_parity(q, l, n, seed, (STREAM_H, l), full_rank=full)
        else:
            h = FieldMatrix(random_parity(q, n, n, seed, (STREAM_H,), full_rank=True).data[:l], q)
        km = KmCode(h, p_z)
        if q ** n <= budget.enum and l > 0 and q ** (n - l) * min(trials, q**l) > q**n:
            table = coset_leader_table(km, budget)
        else:
            table = {}
        for zt in z:
            syn = tuple(((km.h.data @ zt) % q).tolist())
            if syn not in table:
                table[syn] = km_decode_ml(km, syn, budget)
            errors += int(not np.array_equal(table[syn], zt))
    elif policy == "per_trial":
        for t, zt in enumerate(z):
            km = KmCode(random_parity(q, l, n, seed, (STREAM_H, l, t), full_rank=full), p_z)
            errors += int(not np.array_equal(km_decode_ml(km, (km.h.data @ zt) % q, budget), zt))
    else:
        raise UsageError(f"unknown policy {policy!r}")
    est = errors / trials
    return SimResult(est, wilson_half_width(est, trials), n, {"rate": l * math.log2(q) / n, "l": l}, [seed], time.perf_counter() - t0, {"trials": trials, "errors": errors, "policy": policy})
