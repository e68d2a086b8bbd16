"""Entropies, the message-sum rate and its optimisation, the unstructured
(joint-source) baseline and embedding-based reconstructibility checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import CqMac, SourcePair, induced_sum_ensemble
from .errors import DEFAULT_BUDGET, Budget, UsageError
from .field import is_prime
from .quantum import batch_entropy, holevo_information
from .typicality import check_pmf, classical_typical_set  # noqa: F401  (re-export)

# strict inequalities must hold by more than this
MARGIN = 1e-9
# refinement stops once the step size drops below this
MIN_STEP = 1e-7
CHUNK = 4096


def shannon_entropy(pmf) -> float:
    p = check_pmf(pmf).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"binary_entropy needs p in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def binary_convolution(a: float, b: float) -> float:
    for x in (a, b):
        if not 0.0 <= x <= 1.0:
            raise UsageError(f"binary_convolution needs arguments in [0, 1], got {x}")
    return a * (1 - b) + b * (1 - a)


@dataclass
class RateReport:
    h_v1: float
    h_v2: float
    h_u: float
    chi_u: float
    rate: float
    p_v1x1: np.ndarray
    p_v2x2: np.ndarray
    q: int
    verdicts: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "H_V1": self.h_v1,
            "H_V2": self.h_v2,
            "H_U": self.h_u,
            "chi_U": self.chi_u,
            "R": self.rate,
            "p_V1X1": self.p_v1x1.tolist(),
            "p_V2X2": self.p_v2x2.tolist(),
            "verdicts": dict(self.verdicts),
            "optimizer": dict(self.trace),
        }


def message_sum_rate(mac: CqMac, q: int, p_v1x1, p_v2x2) -> RateReport:
    """min(H(V1), H(V2)) - H(U) + chi({p_U; rho_u}) for one product input pmf."""
    ens = induced_sum_ensemble(mac, q, p_v1x1, p_v2x2)
    h1 = shannon_entropy(ens.p_v1)
    h2 = shannon_entropy(ens.p_v2)
    hu = shannon_entropy(ens.p_u)
    chi = holevo_information(ens.ensemble())
    return RateReport(h1, h2, hu, chi, min(h1, h2) - hu + chi, np.asarray(p_v1x1, float), np.asarray(p_v2x2, float), q)


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return t.sum(axis=-1)


def batch_message_sum_rate(states: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Rates for stacked joint pmfs ``p1[b] (q, X1)`` and ``p2[b] (q, X2)``.

    Uses min(H1, H2) - H(U) + chi = min(H1, H2) + S(avg) - sum_u S~(tau_u),
    where tau_u = p_U(u) rho_u and S~ is -tr tau log tau of the unnormalised operator.
    """
    q = p1.shape[1]
    h1 = _entropy_rows(p1.sum(axis=2))
    h2 = _entropy_rows(p2.sum(axis=2))
    # w[b, u, x1, x2] = sum_{v1} p1[b, v1, x1] p2[b, u - v1, x2]
    shift = np.array([[(u - v) % q for v in range(q)] for u in range(q)])
    p2s = p2[:, shift, :]  # [b, u, v1, x2]
    w = np.einsum("bvi,buvj->buij", p1, p2s)
    tau = np.einsum("buij,ijxy->buxy", w, states)
    avg = tau.sum(axis=1)
    return np.minimum(h1, h2) + batch_entropy(avg) - batch_entropy(tau).sum(axis=1)


def simplex_grid(size: int, resolution: int) -> np.ndarray:
    """All pmfs on ``size`` letters with entries in multiples of 1/resolution (stars and bars)."""
    if resolution < 1 or size < 1:
        raise UsageError("grid needs resolution >= 1 and a nonempty alphabet")
    pts = []
    for bars in itertools.combinations(range(resolution + size - 1), size - 1):
        edges = (-1,) + bars + (resolution + size - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(size)])
    return np.array(pts, dtype=float) / resolution


def _evaluate_pairs(fn, g1: np.ndarray, g2: np.ndarray, budget: Budget) -> tuple[int, int, float]:
    """argmax over the product grid g1 x g2 with first-index tie-break."""
    n1, n2 = len(g1), len(g2)
    budget.check("grid", n1 * n2)
    best = (-np.inf, 0, 0)
    total = n1 * n2
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total))
        vals = fn(g1[idx // n2], g2[idx % n2])
        j = int(np.argmax(vals))
        if vals[j] > best[0]:
            best = (float(vals[j]), int(idx[j] // n2), int(idx[j] % n2))
    return best[1], best[2], best[0]


def _moves(p: np.ndarray, step: float) -> np.ndarray:
    """Every pmf reachable by moving up to ``step`` mass from one cell to another."""
    flat = p.ravel()
    out = []
    for i in range(flat.size):
        if flat[i] <= 0:
            continue
        s = min(step, flat[i])
        for j in range(flat.size):
            if j != i:
                c = flat.copy()
                c[i] -= s
                c[j] += s
                out.append(c.reshape(p.shape))
    return np.array(out) if out else np.empty((0,) + p.shape)


def _refine_pair(fn, x1: np.ndarray, x2: np.ndarray, value: float, step: float, max_rounds: int = 400):
    """Coordinate ascent over mass moves; accepted moves strictly improve ``value``."""
    rounds = 0
    while step >= MIN_STEP and rounds < max_rounds:
        improved = False
        for side in (0, 1):
            cur = x1 if side == 0 else x2
            cand = _moves(cur, step)
            if len(cand) == 0:
                continue
            other = np.repeat((x2 if side == 0 else x1)[None], len(cand), axis=0)
            vals = fn(cand, other) if side == 0 else fn(other, cand)
            j = int(np.argmax(vals))
            if vals[j] > value + 1e-15:
                value = float(vals[j])
                if side == 0:
                    x1 = cand[j]
                else:
                    x2 = cand[j]
                improved = True
        rounds += 1
        if not improved:
            step /= 2
    return x1, x2, value, rounds


def optimize_message_sum_rate(
    mac: CqMac,
    q: int,
    grid_resolution: int,
    refine: bool = True,
    family: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
    family_dim: int = 1,
    budget: Budget = DEFAULT_BUDGET,
) -> RateReport:
    """Grid search (plus optional refinement) for the supremum of the message-sum rate.

    Without ``family`` the grid is every product of pmfs p_{V1X1}, p_{V2X2}
    with entries in multiples of 1/grid_resolution.  With ``family`` the
    search runs over parameters t in [0, 1]^family_dim on a regular grid, and
    ``family(t)`` maps a stack of parameters to the stacked joint pmfs.
    """
    nx1, nx2 = mac.input_sizes
    states = mac.states
    trace = {"grid_resolution": grid_resolution, "refine": bool(refine)}
    if family is None:
        g1 = simplex_grid(q * nx1, grid_resolution).reshape(-1, q, nx1)
        g2 = simplex_grid(q * nx2, grid_resolution).reshape(-1, q, nx2)

        def fn(a, b):
            return batch_message_sum_rate(states, a, b)

        i1, i2, val = _evaluate_pairs(fn, g1, g2, budget)
        trace.update(grid_points=len(g1) * len(g2), grid_best=val, grid_index=[i1, i2])
        x1, x2 = g1[i1], g2[i2]
        if refine:
            x1, x2, val, rounds = _refine_pair(fn, x1, x2, val, 1.0 / grid_resolution)
            trace["refine_rounds"] = rounds
    else:
        axis = np.linspace(0.0, 1.0, grid_resolution + 1)
        budget.check("grid", len(axis) ** family_dim)
        pts = np.array(list(itertools.product(axis, repeat=family_dim)))

        def fam(t):
            a, b = family(t)
            return batch_message_sum_rate(states, a, b)

        vals = np.concatenate([fam(pts[s : s + CHUNK]) for s in range(0, len(pts), CHUNK)])
        j = int(np.argmax(vals))
        t, val = pts[j], float(vals[j])
        trace.update(grid_points=len(pts), grid_best=val, grid_index=[j])
        if refine:
            step = 1.0 / grid_resolution
            rounds = 0
            while step >= MIN_STEP and rounds < 400:
                cand = []
                for d in range(family_dim):
                    for sgn in (-1.0, 1.0):
                        c = t.copy()
                        c[d] = min(1.0, max(0.0, c[d] + sgn * step))
                        cand.append(c)
                cand = np.array(cand)
                cv = fam(cand)
                k = int(np.argmax(cv))
                if cv[k] > val + 1e-15:
                    t, val = cand[k], float(cv[k])
                else:
                    step /= 2
                rounds += 1
            trace["refine_rounds"] = rounds
        trace["parameters"] = t.tolist()
        a, b = family(t[None])
        x1, x2 = a[0], b[0]
    report = message_sum_rate(mac, q, x1, x2)
    trace["best_value"] = report.rate
    report.trace = trace
    return report


def batch_holevo_product(states: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """chi of {p1(x1) p2(x2); rho_{x1 x2}} for stacked marginals."""
    ent = batch_entropy(states)  # (X1, X2)
    avg = np.einsum("bi,bj,ijxy->bxy", p1, p2, states)
    return batch_entropy(avg) - np.einsum("bi,bj,ij->b", p1, p2, ent)


def max_product_holevo(mac: CqMac, grid_resolution: int, refine: bool = True, budget: Budget = DEFAULT_BUDGET):
    """Grid-plus-refinement maximum of chi over independent inputs: (value, p_X1, p_X2)."""
    nx1, nx2 = mac.input_sizes
    g1 = simplex_grid(nx1, grid_resolution)
    g2 = simplex_grid(nx2, grid_resolution)

    def fn(a, b):
        return batch_holevo_product(mac.states, a, b)

    i1, i2, val = _evaluate_pairs(fn, g1, g2, budget)
    x1, x2 = g1[i1], g2[i2]
    if refine:
        x1, x2, val, _ = _refine_pair(fn, x1, x2, val, 1.0 / grid_resolution)
    return max(float(val), 0.0), x1, x2


@dataclass
class Verdict:
    holds: bool
    lhs: float
    rhs: float
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {"holds": self.holds, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, **self.detail}


def unstructured_condition(source: SourcePair, mac: CqMac, grid_resolution: int = 20, refine: bool = True, budget: Budget = DEFAULT_BUDGET) -> Verdict:
    """H(S1, S2) < max over independent inputs of chi({p_X1 p_X2; rho_{x1 x2}})."""
    h = shannon_entropy(source.pmf)
    chi, p1, p2 = max_product_holevo(mac, grid_resolution, refine, budget)
    return Verdict(chi - h > MARGIN, h, chi, {"p_X1": p1.tolist(), "p_X2": p2.tolist()})


@dataclass(frozen=True)
class EmbeddingSpec:
    q: int
    h1: tuple
    h2: tuple
    g: tuple

    def factorizes(self, f_table) -> bool:
        f = np.asarray(f_table)
        return all(
            f[s1, s2] == self.g[(self.h1[s1] + self.h2[s2]) % self.q]
            for s1 in range(f.shape[0])
            for s2 in range(f.shape[1])
        )

    def to_dict(self) -> dict:
        return {"q": self.q, "h1": list(self.h1), "h2": list(self.h2), "g": [_plain(x) for x in self.g]}


def _plain(x):
    return x.item() if isinstance(x, np.generic) else x


def _derive_g(f: np.ndarray, q: int, h1, h2):
    """g with f = g(h1 + h2) if one exists; unreachable field elements map to f[0, 0]."""
    g: dict = {}
    for s1 in range(f.shape[0]):
        for s2 in range(f.shape[1]):
            u = (h1[s1] + h2[s2]) % q
            v = _plain(f[s1, s2])
            if g.setdefault(u, v) != v:
                return None
    return tuple(g.get(u, _plain(f[0, 0])) for u in range(q))


def embeddings_for(f_table, q: int, budget: Budget = DEFAULT_BUDGET):
    """Every factorising (h1, h2, g) over F_q, in lexicographic order of (h1, h2)."""
    f = np.asarray(f_table)
    a, b = f.shape
    budget.check("enum", q ** (a + b))
    for h1 in itertools.product(range(q), repeat=a):
        for h2 in itertools.product(range(q), repeat=b):
            g = _derive_g(f, q, h1, h2)
            if g is not None:
                yield EmbeddingSpec(q, h1, h2, g)


def function_reconstructibility_check(
    source: SourcePair,
    f_table,
    mac: CqMac,
    embeddings="search",
    grid_resolution: int = 6,
    max_q: int = 3,
    refine: bool = True,
    budget: Budget = DEFAULT_BUDGET,
) -> dict:
    """Is H(h1(S1) + h2(S2)) below the optimised message-sum rate for some embedding?

    With ``embeddings="search"`` every prime q <= max_q no smaller than the
    number of distinct values of f is tried; per q the embedding of least
    sum entropy is kept.  Results are reported per q.
    """
    f = np.asarray(f_table)
    if f.shape != source.sizes:
        raise UsageError("function table must match the source alphabets")
    if embeddings == "search":
        cands: dict = {}
        for q in range(2, max_q + 1):
            if not is_prime(q):
                continue
            best = None
            for e in embeddings_for(f, q, budget):
                h = shannon_entropy(source.sum_pmf(q, e.h1, e.h2))
                if best is None or h < best[1] - 1e-15:
                    best = (e, h)
            if best is not None:
                cands[q] = best
    else:
        cands = {}
        for e in embeddings:
            if not e.factorizes(f):
                continue
            h = shannon_entropy(source.sum_pmf(e.q, e.h1, e.h2))
            if e.q not in cands or h < cands[e.q][1] - 1e-15:
                cands[e.q] = (e, h)
    if not cands:
        return {"holds": False, "reason": "no (h1,h2,g) factorization", "per_q": []}
    per_q = []
    for q, (e, h) in sorted(cands.items()):
        rep = optimize_message_sum_rate(mac, q, grid_resolution, refine, budget=budget)
        margin = rep.rate - h
        per_q.append({"q": q, "embedding": e.to_dict(), "H_embedded_sum": h, "rate": rep.to_dict(), "margin": margin, "holds": margin > MARGIN})
    best = max(per_q, key=lambda r: r["margin"])
    return {"holds": best["holds"], "witness": best, "per_q": per_q}
