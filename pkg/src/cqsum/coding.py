"""Nested coset codes, their square-root decoders, Koerner-Marton binning and
the two-sender message-sum code.

Messages m in F_q^l are represented as tuples and indexed by their position in
``all_vectors(q, l)`` (lexicographic order); POVM labels are the tuples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import CqMac, CqPtp, InducedSumEnsemble, induced_sum_ensemble
from .errors import DEFAULT_BUDGET, Budget, UsageError
from .field import (
    FieldMatrix,
    all_vectors,
    check_prime,
    make_rng,
    solve_affine,
    uniform_random_matrix,
)
from .quantum import CqEnsemble, Povm, srm_from_sums, typical_basis
from .typicality import check_pmf, typical_mask

# seed stream ids; every random object of a code has its own stream
STREAM_G_I, STREAM_G_OI, STREAM_B1, STREAM_B2, STREAM_X1, STREAM_X2, STREAM_H = range(7)


def _as_vector(x, length: int, q: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.int64).reshape(-1)
    if v.shape != (length,):
        raise UsageError(f"{name} must have length {length}, got {v.shape[0]}")
    if v.size and (v.min() < 0 or v.max() >= q):
        raise UsageError(f"{name} entries must lie in F_{q}")
    return v


@dataclass(frozen=True, eq=False)
class NestedCosetCode:
    """(n, k, l, g_I, g_OI, b) over F_q; codewords a g_I + m g_OI + b."""

    g_i: FieldMatrix
    g_oi: FieldMatrix
    b: FieldMatrix

    def __post_init__(self):
        q = self.g_i.q
        if self.g_oi.q != q or self.b.q != q:
            raise UsageError("generators and bias must share one field")
        n = self.b.cols
        if self.b.rows != 1 or self.g_i.cols != n or self.g_oi.cols != n:
            raise UsageError("g_I, g_OI and b must all have n columns (b a single row)")

    @property
    def q(self) -> int:
        return self.b.q

    @property
    def n(self) -> int:
        return self.b.cols

    @property
    def k(self) -> int:
        return self.g_i.rows

    @property
    def l(self) -> int:
        return self.g_oi.rows

    def with_bias(self, b: FieldMatrix) -> "NestedCosetCode":
        return NestedCosetCode(self.g_i, self.g_oi, b)

    def codeword(self, a, m) -> np.ndarray:
        a = _as_vector(a, self.k, self.q, "a")
        m = _as_vector(m, self.l, self.q, "m")
        return (a @ self.g_i.data + m @ self.g_oi.data + self.b.data[0]) % self.q

    def all_codewords(self, budget: Budget = DEFAULT_BUDGET) -> np.ndarray:
        """Array ``[m_index, a_index, :]`` of every codeword."""
        budget.check("terms", self.q ** (self.k + self.l))
        inner = all_vectors(self.q, self.k) @ self.g_i.data
        outer = all_vectors(self.q, self.l) @ self.g_oi.data
        return (outer[:, None, :] + inner[None, :, :] + self.b.data[0]) % self.q

    def messages(self) -> list[tuple]:
        return [tuple(int(x) for x in m) for m in all_vectors(self.q, self.l)]

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "l": self.l,
            "g_I": self.g_i.tolist(),
            "g_OI": self.g_oi.tolist(),
            "b": self.b.tolist()[0],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NestedCosetCode":
        q, n = int(d["q"]), int(d["n"])
        return cls(
            FieldMatrix.from_rows(d["g_I"], q, cols=n),
            FieldMatrix.from_rows(d["g_OI"], q, cols=n),
            FieldMatrix.vector(d["b"], q),
        )


def ncc_codeword(ncc: NestedCosetCode, a, m) -> np.ndarray:
    return ncc.codeword(a, m)


def _random_rows(rows: int, n: int, q: int, seed: int, stream) -> FieldMatrix:
    if rows == 0:
        return FieldMatrix.zeros(0, n, q)
    return uniform_random_matrix(rows, n, q, seed, stream)


def random_ncc(n: int, k: int, l: int, q: int, seed: int, stream=()) -> NestedCosetCode:
    """NCC with IID uniform g_I, g_OI and b drawn from separate seed streams."""
    check_prime(q)
    if n < 1 or k < 0 or l < 0:
        raise UsageError("need n >= 1 and k, l >= 0")
    stream = tuple(stream)
    return NestedCosetCode(
        _random_rows(k, n, q, seed, stream + (STREAM_G_I,)),
        _random_rows(l, n, q, seed, stream + (STREAM_G_OI,)),
        uniform_random_matrix(1, n, q, seed, stream + (STREAM_B1,)),
    )


def choose_representatives(ncc: NestedCosetCode, p_v, delta: float, budget: Budget = DEFAULT_BUDGET):
    """Per message: the lexicographically smallest a with v(a, m) typical, and theta(m).

    Returns ``(reps, coverage)``: ``reps[m_index]`` is a in F_q^k (0^k when
    theta(m) = 0) and ``coverage[m_index]`` is theta(m).
    """
    p_v = check_pmf(p_v, "p_V")
    if p_v.size != ncc.q:
        raise UsageError(f"p_V must be a pmf over F_{ncc.q}")
    words = ncc.all_codewords(budget)
    nm, na, n = words.shape
    mask = typical_mask(words.reshape(-1, n), p_v, delta).reshape(nm, na)
    coverage = mask.sum(axis=1)
    first = np.where(coverage > 0, np.argmax(mask, axis=1), 0)
    reps = all_vectors(ncc.q, ncc.k)[first]
    return reps, coverage


@dataclass(frozen=True, eq=False)
class PtpCodebook:
    ncc: NestedCosetCode
    representatives: np.ndarray
    p_v: np.ndarray
    delta: float
    coverage: np.ndarray

    def codeword(self, m_index: int) -> np.ndarray:
        m = all_vectors(self.ncc.q, self.ncc.l)[m_index]
        return self.ncc.codeword(self.representatives[m_index], m)

    def codewords(self) -> np.ndarray:
        ms = all_vectors(self.ncc.q, self.ncc.l)
        return np.array([self.ncc.codeword(a, m) for a, m in zip(self.representatives, ms)])

    @property
    def uncovered(self) -> int:
        return int(np.count_nonzero(self.coverage == 0))


def coset_srm(ncc: NestedCosetCode, ensemble: CqEnsemble, delta: float, budget: Budget = DEFAULT_BUDGET) -> Povm:
    """Coset-aggregated square-root decoder over the messages of ``ncc``.

    gamma_{a,m} = pi pi_{v(a,m)} pi, with pi the typical projector of the
    ensemble average and pi_{v} the conditional typical projector (zero for
    atypical v).  Everything is computed inside range(pi): with pi = B B^dagger
    and pi_v = C C^dagger, gamma = B (B^dagger C)(B^dagger C)^dagger B^dagger.
    """
    if ensemble.probs.size != ncc.q:
        raise UsageError("decoder ensemble must be labelled by F_q")
    budget.check("dim", ensemble.dim**ncc.n)
    words = ncc.all_codewords(budget)
    basis = typical_basis(ensemble, ncc.n, delta, budget=budget)
    r = basis.shape[1]
    bh = basis.conj().T
    cache: dict = {}
    grouped: dict = {}
    total = np.zeros((r, r), dtype=complex)
    for m, block in zip(ncc.messages(), words):
        acc = np.zeros((r, r), dtype=complex)
        for word in block:
            key = word.tobytes()
            if key not in cache:
                x = bh @ typical_basis(ensemble, ncc.n, delta, given=word, budget=budget)
                cache[key] = x @ x.conj().T
            acc += cache[key]
        grouped[m] = acc
        total += acc
    return srm_from_sums(total, grouped, basis=basis)


def build_ptp_code(ncc: NestedCosetCode, ptp: CqPtp, p_v, delta: float, budget: Budget = DEFAULT_BUDGET):
    """NCC code for a CQ point-to-point channel over F_q: (codebook, POVM)."""
    if ptp.num_inputs != ncc.q:
        raise UsageError(f"channel inputs must be F_{ncc.q}")
    p_v = check_pmf(p_v, "p_V")
    reps, coverage = choose_representatives(ncc, p_v, delta, budget)
    codebook = PtpCodebook(ncc, reps, p_v, float(delta), coverage)
    return codebook, coset_srm(ncc, CqEnsemble(p_v, ptp.states), delta, budget)


# -- Koerner-Marton ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KmCode:
    h: FieldMatrix
    p_z: np.ndarray

    def __post_init__(self):
        p = check_pmf(self.p_z, "p_Z")
        if p.size != self.h.q:
            raise UsageError(f"p_Z must be a pmf over F_{self.h.q}")
        object.__setattr__(self, "p_z", p)

    @property
    def q(self) -> int:
        return self.h.q

    @property
    def n(self) -> int:
        return self.h.cols

    @property
    def l(self) -> int:
        return self.h.rows


def random_parity(q: int, l: int, n: int, seed: int, stream=(), full_rank: bool = False, max_draws: int = 1000) -> FieldMatrix:
    """Uniform l x n parity matrix; with ``full_rank`` redraw until rank min(l, n)."""
    stream = tuple(stream)
    if l == 0:
        return FieldMatrix.zeros(0, n, q)
    for attempt in range(max_draws):
        h = uniform_random_matrix(l, n, q, seed, stream + (attempt,))
        if not full_rank or h.rank() == min(l, n):
            return h
    raise UsageError(f"no full-rank {l}x{n} matrix in {max_draws} draws")


def km_encode(km: KmCode, s) -> np.ndarray:
    s = _as_vector(s, km.n, km.q, "source block")
    return (km.h.data @ s) % km.q


def _log_pmf(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


def km_decode_ml(km: KmCode, syndrome, budget: Budget = DEFAULT_BUDGET) -> np.ndarray:
    """Most likely z under p_Z^n with h z = syndrome; ties go to the lexicographically smallest."""
    q = km.q
    syndrome = _as_vector(syndrome, km.l, q, "syndrome")
    sol = solve_affine(km.h.data, syndrome, q)
    if sol is None:
        raise UsageError("syndrome is not in the range of h")
    x0, basis = sol
    budget.check("enum", q ** basis.shape[0])
    cands = (x0 + all_vectors(q, basis.shape[0]) @ basis) % q
    counts = np.stack([np.count_nonzero(cands == z, axis=1) for z in range(q)], axis=1)
    logp = _log_pmf(km.p_z)
    with np.errstate(invalid="ignore"):
        score = np.where(counts > 0, counts * logp, 0.0).sum(axis=1)
    best = cands[score == score.max()]
    order = np.lexsort(best.T[::-1])
    return best[order[0]]


def coset_leader_table(km: KmCode, budget: Budget = DEFAULT_BUDGET) -> dict:
    """ML decision for every syndrome of a fixed h (syndrome tuple -> leader)."""
    q, n = km.q, km.n
    budget.check("enum", q**n)
    zs = all_vectors(q, n)
    syn = (zs @ km.h.data.T) % q
    counts = np.stack([np.count_nonzero(zs == z, axis=1) for z in range(q)], axis=1)
    logp = _log_pmf(km.p_z)
    with np.errstate(invalid="ignore"):
        score = np.where(counts > 0, counts * logp, 0.0).sum(axis=1)
    table: dict = {}
    best: dict = {}
    # zs is in lexicographic order, so strict improvement keeps the smallest tie
    for z, s, sc in zip(zs, map(tuple, syn.tolist()), score):
        if s not in best or sc > best[s]:
            best[s] = sc
            table[s] = z
    return table


# -- message-sum MAC code ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class MacSumCode:
    ncc1: NestedCosetCode
    ncc2: NestedCosetCode
    decoder_ncc: NestedCosetCode
    reps1: np.ndarray
    reps2: np.ndarray
    coverage1: np.ndarray
    coverage2: np.ndarray
    inputs1: np.ndarray
    inputs2: np.ndarray
    povm: Povm
    ensemble: InducedSumEnsemble
    delta: float
    seed: int
    mac: CqMac | None = None

    @property
    def q(self) -> int:
        return self.decoder_ncc.q

    @property
    def n(self) -> int:
        return self.decoder_ncc.n

    @property
    def k(self) -> int:
        return self.decoder_ncc.k

    @property
    def l(self) -> int:
        return self.decoder_ncc.l

    def aux_codeword(self, sender: int, m_index: int) -> np.ndarray:
        ncc, reps = (self.ncc1, self.reps1) if sender == 1 else (self.ncc2, self.reps2)
        m = all_vectors(self.q, self.l)[m_index]
        return ncc.codeword(reps[m_index], m)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "k": self.k,
            "l": self.l,
            "delta": self.delta,
            "seed": self.seed,
            "g_I": self.ncc1.g_i.tolist(),
            "g_OI": self.ncc1.g_oi.tolist(),
            "b1": self.ncc1.b.tolist()[0],
            "b2": self.ncc2.b.tolist()[0],
            "decoder_bias": self.decoder_ncc.b.tolist()[0],
            "coverage1": self.coverage1.tolist(),
            "coverage2": self.coverage2.tolist(),
            "inputs1": self.inputs1.tolist(),
            "inputs2": self.inputs2.tolist(),
        }


def _sample_inputs(aux: np.ndarray, cond: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """x_t ~ p_{X|V}(. | aux_t) by inverse-CDF sampling."""
    cdf = np.cumsum(cond[aux], axis=1)
    u = rng.random(aux.size)
    x = np.sum(cdf < u[:, None], axis=1)
    return np.minimum(x, cond.shape[1] - 1)


def build_mac_sum_code(
    mac: CqMac,
    q: int,
    p_v1x1,
    p_v2x2,
    n: int,
    k: int,
    l: int,
    delta: float,
    seed: int,
    budget: Budget = DEFAULT_BUDGET,
) -> MacSumCode:
    """Two senders sharing (g_I, g_OI) with independent biases; the decoder
    uses the NCC with bias b1 + b2 and the (p_U, rho_u) ensemble."""
    ens = induced_sum_ensemble(mac, q, p_v1x1, p_v2x2)
    budget.check("terms", q ** (k + l))
    budget.check("dim", mac.dim**n)
    base = random_ncc(n, k, l, q, seed)
    b2 = uniform_random_matrix(1, n, q, seed, (STREAM_B2,))
    ncc1 = base
    ncc2 = base.with_bias(b2)
    decoder = base.with_bias(base.b + b2)
    reps1, cov1 = choose_representatives(ncc1, ens.p_v1, delta, budget)
    reps2, cov2 = choose_representatives(ncc2, ens.p_v2, delta, budget)
    ms = all_vectors(q, l)
    inputs = []
    for sender, ncc, reps, cond, stream in (
        (1, ncc1, reps1, ens.cond1, STREAM_X1),
        (2, ncc2, reps2, ens.cond2, STREAM_X2),
    ):
        rows = [_sample_inputs(ncc.codeword(a, m), cond, make_rng(seed, stream, i)) for i, (a, m) in enumerate(zip(reps, ms))]
        inputs.append(np.array(rows, dtype=np.int64).reshape(len(ms), n))
    avg = sum(ens.p_u[u] * ens.rho_u[u] for u in ens.support)
    states = tuple(ens.rho_u.get(u, avg) for u in range(q))
    povm = coset_srm(decoder, CqEnsemble(ens.p_u, states), delta, budget)
    return MacSumCode(ncc1, ncc2, decoder, reps1, reps2, cov1, cov2, inputs[0], inputs[1], povm, ens, float(delta), int(seed), mac)
