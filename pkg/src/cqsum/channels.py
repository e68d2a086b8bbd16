"""Classical-quantum channel models, source pairs and the induced sum ensemble."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .field import check_prime
from .quantum import CqEnsemble, density_operator, tensor_product
from .typicality import check_pmf

# trace-distance threshold for treating two channel outputs as equal
STATE_EQ_TOL = 1e-9


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


@dataclass(frozen=True, eq=False)
class CqPtp:
    """Point-to-point channel: input x in range(len(states)) -> states[x]."""

    states: tuple

    def __post_init__(self):
        if len(self.states) == 0:
            raise UsageError("channel needs at least one input")
        states = tuple(density_operator(s) for s in self.states)
        if len({s.shape for s in states}) != 1:
            raise UsageError("channel outputs must share one dimension")
        object.__setattr__(self, "states", states)

    @property
    def num_inputs(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def output(self, xs) -> np.ndarray:
        return tensor_product([self.states[int(x)] for x in xs])


@dataclass(frozen=True, eq=False)
class CqMac:
    """Two-sender channel: ``states[x1, x2]`` is the output density matrix."""

    states: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=complex)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3]:
            raise UsageError("MAC table must have shape (|X1|, |X2|, d, d)")
        for x1 in range(arr.shape[0]):
            for x2 in range(arr.shape[1]):
                arr[x1, x2] = density_operator(arr[x1, x2])
        arr.setflags(write=False)
        object.__setattr__(self, "states", arr)

    @property
    def input_sizes(self) -> tuple[int, int]:
        return self.states.shape[0], self.states.shape[1]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def output(self, x1s, x2s) -> np.ndarray:
        return tensor_product([self.states[int(a), int(b)] for a, b in zip(x1s, x2s)])


@dataclass(frozen=True, eq=False)
class SourcePair:
    """Joint pmf ``pmf[s1, s2]`` of two distributed sources."""

    pmf: np.ndarray

    def __post_init__(self):
        p = check_pmf(self.pmf, "source pmf")
        if p.ndim != 2:
            raise UsageError("source pmf must be a 2-D table")
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)

    @property
    def sizes(self) -> tuple[int, int]:
        return self.pmf.shape

    def sum_pmf(self, q: int, h1=None, h2=None) -> np.ndarray:
        """Law of h1(S1) + h2(S2) over F_q (identity maps by default)."""
        check_prime(q)
        a, b = self.sizes
        h1 = list(range(a)) if h1 is None else list(h1)
        h2 = list(range(b)) if h2 is None else list(h2)
        if max(h1 + h2) >= q or min(h1 + h2) < 0:
            raise UsageError("embedding maps must land in F_q")
        out = np.zeros(q)
        for s1 in range(a):
            for s2 in range(b):
                out[(h1[s1] + h2[s2]) % q] += self.pmf[s1, s2]
        return out


def doubly_symmetric_source(p: float) -> SourcePair:
    """Uniform binary marginals with P(S1 != S2) = p."""
    return SourcePair(np.array([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]]))


def independent_source(p1, p2) -> SourcePair:
    return SourcePair(np.outer(check_pmf(p1), check_pmf(p2)))


def additive_mac(ptp: CqPtp, q: int) -> CqMac:
    """MAC with rho_{x1 x2} = sigma_{x1 + x2 mod q}."""
    check_prime(q)
    if ptp.num_inputs != q:
        raise UsageError("additive MAC needs a PTP over F_q")
    return CqMac(np.array([[ptp.states[(a + b) % q] for b in range(q)] for a in range(q)]))


def example1_channel(q_noise: float, sigma0, sigma1) -> CqMac:
    """rho_{x1 x2} = (1 - q) sigma_{x1 or x2} + q sigma_{not x1 and not x2}."""
    if not 0.0 <= q_noise <= 1.0:
        raise UsageError("q_noise must lie in [0, 1]")
    s = [density_operator(sigma0), density_operator(sigma1)]
    if s[0].shape != s[1].shape:
        raise UsageError("sigma0 and sigma1 must have equal dimension")
    table = np.empty((2, 2) + s[0].shape, dtype=complex)
    for x1 in (0, 1):
        for x2 in (0, 1):
            table[x1, x2] = (1 - q_noise) * s[x1 | x2] + q_noise * s[(1 - x1) & (1 - x2)]
    return CqMac(table)


def conditional_rows(joint: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split p_{VX} into (p_V, p_{X|V}); zero-probability rows become uniform."""
    p_v = joint.sum(axis=1)
    cond = np.full_like(joint, 1.0 / joint.shape[1])
    pos = p_v > 0
    cond[pos] = joint[pos] / p_v[pos, None]
    return p_v, cond


@dataclass(frozen=True, eq=False)
class InducedSumEnsemble:
    q: int
    p_v1: np.ndarray
    p_v2: np.ndarray
    cond1: np.ndarray
    cond2: np.ndarray
    rho_v1v2: np.ndarray
    p_u: np.ndarray
    rho_u: dict

    @property
    def support(self) -> list[int]:
        return sorted(self.rho_u)

    def ensemble(self) -> CqEnsemble:
        """{p_U(u); rho_u} restricted to u with p_U(u) > 0."""
        sup = self.support
        return CqEnsemble(self.p_u[sup] / self.p_u[sup].sum(), tuple(self.rho_u[u] for u in sup), tuple(sup))

    def states_or_none(self) -> list:
        return [self.rho_u.get(u) for u in range(self.q)]


def induced_sum_ensemble(mac: CqMac, q: int, p_v1x1, p_v2x2) -> InducedSumEnsemble:
    """Auxiliary-sum ensemble (p_U, rho_u) of a product input pmf p_{V1X1} p_{V2X2}.

    rho_{v1 v2} = sum_{x1,x2} p(x1|v1) p(x2|v2) rho_{x1 x2};
    p_U(u) = sum_{v1 + v2 = u} p_V1(v1) p_V2(v2);
    rho_u averages rho_{v1 v2} over v1 + v2 = u with weights p_{V1 V2|U}.
    """
    check_prime(q)
    j1 = check_pmf(p_v1x1, "p_{V1X1}")
    j2 = check_pmf(p_v2x2, "p_{V2X2}")
    nx1, nx2 = mac.input_sizes
    if j1.shape != (q, nx1) or j2.shape != (q, nx2):
        raise UsageError(f"joint pmfs must have shapes ({q}, {nx1}) and ({q}, {nx2})")
    p_v1, c1 = conditional_rows(j1)
    p_v2, c2 = conditional_rows(j2)
    rho_vv = np.einsum("ai,bj,ijxy->abxy", c1, c2, mac.states)
    p_u = np.zeros(q)
    rho_u = {}
    for u in range(q):
        acc = np.zeros((mac.dim, mac.dim), dtype=complex)
        for v1 in range(q):
            w = p_v1[v1] * p_v2[(u - v1) % q]
            p_u[u] += w
            acc += w * rho_vv[v1, (u - v1) % q]
        if p_u[u] > 0:
            rho_u[u] = acc / p_u[u]
    return InducedSumEnsemble(q, p_v1, p_v2, c1, c2, rho_vv, p_u, rho_u)


def additive_reduction(mac: CqMac, q: int, tol: float = STATE_EQ_TOL) -> CqPtp | None:
    """The PTP sigma_u = rho_{x1 x2} (x1 + x2 = u) if the MAC depends only on the sum."""
    check_prime(q)
    if mac.input_sizes != (q, q):
        return None
    sigmas = []
    for u in range(q):
        ref = mac.states[0, u]
        for x1 in range(1, q):
            if trace_distance(mac.states[x1, (u - x1) % q], ref) > tol:
                return None
        sigmas.append(ref)
    return CqPtp(tuple(sigmas))
