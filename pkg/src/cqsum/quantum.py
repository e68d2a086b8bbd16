"""Density-operator calculus: spectra, entropies, Holevo information,
typical projectors and the square-root (pretty-good) measurement.

Operators are plain complex numpy arrays.  Functions validate their inputs
against the tolerances below and raise :class:`ValidationError` otherwise.
Entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Hashable, Sequence

import numpy as np

from .errors import DEFAULT_BUDGET, Budget, UsageError, ValidationError
from .field import all_vectors
from .typicality import check_pmf, joint_typical_mask, typical_mask, is_typical

TOL = 1e-9
# eigenvalues below this are treated as exact zeros (pure-state support)
EIG_ZERO = 1e-12
# eigenvalues closer than this share one eigenspace
DEGENERACY_TOL = 1e-10

FAIL = "fail"


def _hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def psd_operator(a, tol: float = TOL) -> np.ndarray:
    """Validate a Hermitian PSD matrix and return its Hermitian part."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"operator must be a nonempty square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T)) > tol:
        raise ValidationError("operator is not Hermitian")
    h = _hermitian_part(a)
    if np.linalg.eigvalsh(h)[0] < -tol:
        raise ValidationError("operator has a negative eigenvalue")
    return h


def density_operator(a, tol: float = TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, PSD and unit trace within ``tol``."""
    h = psd_operator(a, tol)
    if abs(np.trace(h).real - 1.0) > tol:
        raise ValidationError(f"density operator has trace {np.trace(h).real:.12g}")
    return h


def pure_state(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def is_pure(rho, tol: float = 1e-9) -> bool:
    w = np.linalg.eigvalsh(_hermitian_part(np.asarray(rho, dtype=complex)))
    return abs(w[-1] - 1.0) <= tol


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    nz = np.nonzero(np.abs(v) > 1e-10)[0]
    if nz.size:
        x = v[nz[0]]
        v = v * (np.conj(x) / abs(x))
    return v


def _lex_key(v: np.ndarray) -> tuple:
    return tuple(np.round(np.column_stack([v.real, v.imag]).ravel(), 12))


def _canonical_eigenspace(vecs: np.ndarray) -> np.ndarray:
    """Basis of span(vecs) that depends only on the subspace, not on ``vecs``."""
    d, r = vecs.shape
    if r == 1:
        return _canonical_phase(vecs[:, 0]).reshape(d, 1)
    proj = vecs @ vecs.conj().T
    basis: list[np.ndarray] = []
    for i in range(d):
        w = proj[:, i].copy()
        for b in basis:
            w = w - b * np.vdot(b, w)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            basis.append(w / norm)
        if len(basis) == r:
            break
    basis = [_canonical_phase(b) for b in basis]
    basis.sort(key=_lex_key, reverse=True)
    return np.column_stack(basis)


def spectral_decomposition(rho, tol: float = TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvector columns.

    The eigenbasis is canonical: within each degenerate eigenspace it is the
    Gram-Schmidt orthonormalisation of the projected standard basis vectors,
    every vector has its first nonzero component real positive, and ties are
    ordered by descending lexicographic order of the vector components.
    """
    h = psd_operator(rho, tol)
    w, v = np.linalg.eigh(h)
    w = w[::-1].copy()
    v = v[:, ::-1]
    w[w < EIG_ZERO] = 0.0
    cols = []
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and w[i] - w[j] <= DEGENERACY_TOL:
            j += 1
        cols.append(_canonical_eigenspace(v[:, i:j]))
        w[i:j] = w[i:j].mean()
        i = j
    return w, np.hstack(cols)


def entropy_of_spectrum(w) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > EIG_ZERO]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(rho, tol: float = TOL) -> float:
    h = density_operator(rho, tol)
    return entropy_of_spectrum(np.linalg.eigvalsh(h))


def batch_entropy(ops: np.ndarray) -> np.ndarray:
    """Von Neumann entropies of a stack ``(..., d, d)`` of (sub)normalised states.

    No validation; used on the hot path of rate optimisation.
    """
    w = np.linalg.eigvalsh(ops)
    w = np.where(w > EIG_ZERO, w, 1.0)
    return -np.sum(w * np.log2(w), axis=-1)


@dataclass(frozen=True)
class CqEnsemble:
    """A pmf over labels with one density operator per label."""

    probs: np.ndarray
    states: tuple
    labels: tuple | None = None

    def __post_init__(self):
        p = check_pmf(self.probs, "ensemble pmf")
        if len(self.states) != p.size:
            raise UsageError("ensemble needs one state per label")
        states = tuple(density_operator(s) for s in self.states)
        dims = {s.shape[0] for s in states}
        if len(dims) != 1:
            raise UsageError("ensemble states must share one dimension")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", states)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(p.size)))

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def average(self) -> np.ndarray:
        return sum(p * s for p, s in zip(self.probs, self.states))


def holevo_information(ensemble: CqEnsemble) -> float:
    """chi = S(sum p rho) - sum p S(rho), in bits."""
    avg = von_neumann_entropy(ensemble.average())
    cond = sum(p * von_neumann_entropy(s) for p, s in zip(ensemble.probs, ensemble.states) if p > 0)
    return max(avg - cond, 0.0)


def tensor_product(ops: Sequence[np.ndarray]) -> np.ndarray:
    if len(ops) == 0:
        raise UsageError("tensor_product of an empty list")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def _product_columns(bases: Sequence[np.ndarray], seqs: np.ndarray) -> np.ndarray:
    """Columns ``kron_t bases[t][:, seqs[j, t]]`` for every row j of ``seqs``."""
    r = seqs.shape[0]
    cols = bases[0][:, seqs[:, 0]].T
    for t in range(1, len(bases)):
        nxt = bases[t][:, seqs[:, t]].T
        cols = (cols[:, :, None] * nxt[:, None, :]).reshape(r, -1)
    return cols.T


def typical_basis(
    source,
    n: int,
    delta: float,
    given: Sequence[int] | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> np.ndarray:
    """Orthonormal columns spanning a typical subspace; see :func:`typical_projector`."""
    if n < 1:
        raise UsageError("n must be positive")
    if isinstance(source, CqEnsemble):
        d = source.dim
    else:
        source = density_operator(source)
        d = source.shape[0]
    budget.check("dim", d**n)
    seqs = all_vectors(d, n)
    if given is None:
        rho = source.average() if isinstance(source, CqEnsemble) else source
        w, u = spectral_decomposition(rho)
        mask = typical_mask(seqs, w, delta)
        return _product_columns([u] * n, seqs[mask])
    if not isinstance(source, CqEnsemble):
        raise UsageError("conditional typical projector needs a CqEnsemble")
    given = np.asarray(given, dtype=np.int64)
    k = len(source.states)
    if given.shape != (n,) or np.any(given < 0) or np.any(given >= k):
        raise UsageError("conditioning sequence must have length n over the ensemble labels")
    if not is_typical(given, source.probs, delta):
        return np.zeros((d**n, 0), dtype=complex)
    spectra = [spectral_decomposition(s) for s in source.states]
    joint = np.array([source.probs[v] * spectra[v][0] for v in range(k)])
    mask = joint_typical_mask(given, seqs, joint, delta)
    return _product_columns([spectra[v][1] for v in given], seqs[mask])


def typical_projector(
    source,
    n: int,
    delta: float,
    given: Sequence[int] | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> np.ndarray:
    """Typical projector on the n-fold space.

    ``source`` is a single state or a :class:`CqEnsemble`.  Without ``given``
    the projector is onto eigen-sequences of the (average) state whose letter
    frequencies are delta-typical for its spectrum.  With ``given = v^n`` it is
    the conditional projector sum over y^n with (v^n, y^n) jointly typical for
    p_V(v) r(y|v) of the product eigenvectors of rho_{v_t}; it is zero when
    v^n itself is not typical for p_V.
    """
    b = typical_basis(source, n, delta, given, budget)
    return b @ b.conj().T


def psd_inverse_sqrt(a, tol: float = 1e-10) -> np.ndarray:
    """Generalised inverse square root: lambda -> lambda^(-1/2) on eigenvalues > tol, 0 on the rest."""
    h = psd_operator(a, max(TOL, tol))
    w, v = np.linalg.eigh(h)
    inv = np.zeros_like(w)
    keep = w > tol
    inv[keep] = w[keep] ** -0.5
    return _hermitian_part((v * inv) @ v.conj().T)


def apply_product(factors: Sequence[np.ndarray], cols: np.ndarray) -> np.ndarray:
    """``(factors[0] (x) ... (x) factors[n-1]) @ cols`` without forming the Kronecker product."""
    d = factors[0].shape[0]
    n = len(factors)
    r = cols.shape[1]
    x = cols.reshape((d,) * n + (r,))
    for t, f in enumerate(factors):
        x = np.moveaxis(np.tensordot(f, x, axes=([1], [t])), 0, t)
    return x.reshape(d**n, r)


@dataclass
class Povm:
    """Measurement with a reserved failure outcome ``FAIL`` as its last element.

    When ``basis`` (a D x r isometry B) is given, ``elements`` are r x r
    operators E living on range(B): the full element is B E B^dagger, and the
    failure element additionally carries I - B B^dagger.
    """

    elements: list
    labels: list
    basis: np.ndarray | None = None

    def __post_init__(self):
        if len(self.elements) != len(self.labels):
            raise UsageError("one label per POVM element")
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.basis.shape[0] if self.basis is not None else self.elements[0].shape[0]

    def element(self, label: Hashable) -> np.ndarray:
        e = self.elements[self._index[label]]
        if self.basis is None:
            return e
        b = self.basis
        full = b @ e @ b.conj().T
        if label == FAIL:
            full = full + np.eye(self.dim) - b @ b.conj().T
        return full

    def compress(self, rho: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return rho
        return self.basis.conj().T @ rho @ self.basis

    def compress_product(self, factors: Sequence[np.ndarray]) -> np.ndarray:
        """B^dagger (x)factors B, using the tensor structure."""
        if self.basis is None:
            return tensor_product(factors)
        return self.basis.conj().T @ apply_product(factors, self.basis)

    def probabilities_compressed(self, c: np.ndarray, trace: float = 1.0) -> dict:
        """Outcome probabilities from ``c = compress(rho)``; ``trace`` is tr(rho)."""
        out = {lab: float(np.real(np.sum(e * c.T))) for lab, e in zip(self.labels, self.elements)}
        if self.basis is not None:
            out[FAIL] += trace - float(np.real(np.trace(c)))
        return out

    def probabilities(self, rho: np.ndarray) -> dict:
        return self.probabilities_compressed(self.compress(rho), float(np.real(np.trace(rho))))

    def probability(self, label: Hashable, rho: np.ndarray) -> float:
        return self.probabilities(rho)[label]

    def full_elements(self) -> list:
        return [self.element(lab) for lab in self.labels]

    def defects(self) -> tuple[float, float, float]:
        """(worst negative eigenvalue, worst Hermiticity error, completeness error) of the full POVM."""
        elements = self.full_elements()
        neg = max(-np.linalg.eigvalsh(_hermitian_part(e))[0] for e in elements)
        herm = max(np.max(np.abs(e - e.conj().T)) for e in elements)
        comp = np.max(np.abs(sum(elements) - np.eye(self.dim)))
        return float(max(neg, 0.0)), float(herm), float(comp)

    def is_valid(self, tol: float = TOL) -> bool:
        return all(x <= tol for x in self.defects())


def srm_from_sums(total: np.ndarray, grouped: dict, tol: float = 1e-10, basis: np.ndarray | None = None) -> Povm:
    """Square-root measurement given T = sum of all gammas and per-outcome gamma sums.

    Outcome ``o`` gets T^{-1/2} (sum of its gammas) T^{-1/2}; a failure element
    I - sum(...) completes the POVM.  With ``basis`` all operators are given in
    the coordinates of that isometry.
    """
    d = total.shape[0]
    # an empty typical subspace leaves only the failure outcome
    inv = psd_inverse_sqrt(_hermitian_part(total), tol) if d else np.zeros((0, 0), dtype=complex)
    elements, labels = [], []
    for lab, g in grouped.items():
        elements.append(_hermitian_part(inv @ g @ inv))
        labels.append(lab)
    fail = np.eye(d, dtype=complex) - sum(elements, np.zeros((d, d), dtype=complex))
    elements.append(_hermitian_part(fail))
    labels.append(FAIL)
    return Povm(elements, labels, basis)


def square_root_povm(gammas: Sequence[np.ndarray], labels: Sequence[Hashable] | None = None, aggregate=None, tol: float = TOL) -> Povm:
    """Pretty-good measurement Lambda_i = T^{-1/2} gamma_i T^{-1/2}, T = sum_j gamma_j.

    ``aggregate`` optionally maps each label to an outcome; elements sharing an
    outcome are summed (coset aggregation).  A failure element is appended.
    """
    if len(gammas) == 0:
        raise UsageError("square_root_povm needs at least one operator")
    labels = list(range(len(gammas))) if labels is None else list(labels)
    if len(labels) != len(gammas):
        raise UsageError("one label per operator")
    d = np.asarray(gammas[0]).shape[0]
    checked = []
    for g in gammas:
        g = psd_operator(g, tol)
        if g.shape != (d, d):
            raise UsageError("operators must share one dimension")
        if np.linalg.eigvalsh(g)[-1] > 1 + tol:
            raise ValidationError("square_root_povm requires 0 <= gamma <= I")
        checked.append(g)
    grouped: dict = {}
    for lab, g in zip(labels, checked):
        key = aggregate(lab) if aggregate is not None else lab
        grouped[key] = grouped.get(key, 0) + g
    return srm_from_sums(sum(checked), grouped)
