"""Strong (frequency) typicality for finite alphabets.

A sequence x^n is delta-typical for a pmf p when every letter's empirical
frequency is within ``delta`` of its probability and letters of probability
zero do not occur at all.  Joint typicality is the same test applied to the
pair alphabet.
"""

from __future__ import annotations

import numpy as np

from .errors import DEFAULT_BUDGET, Budget, UsageError
from .field import all_vectors

# slack for comparing n*|freq - p| against n*delta in floating point
_SLACK = 1e-12


def check_pmf(pmf, name: str = "pmf", tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(pmf, dtype=float)
    if p.size == 0 or np.any(~np.isfinite(p)) or np.any(p < -tol):
        raise UsageError(f"{name} must be finite and nonnegative")
    if abs(p.sum() - 1.0) > tol:
        raise UsageError(f"{name} must sum to 1 (sum={p.sum():.12g})")
    return np.clip(p, 0.0, None)


def counts_typical(counts: np.ndarray, n: int, pmf: np.ndarray, delta: float) -> np.ndarray:
    """Typicality test on letter counts; ``counts`` has the pmf's shape on its trailing axes."""
    pmf = np.asarray(pmf, dtype=float)
    axes = tuple(range(-pmf.ndim, 0))
    ok = np.all(np.abs(counts / n - pmf) <= delta + _SLACK, axis=axes)
    return ok & np.all((counts == 0) | (pmf > 0), axis=axes)


def letter_counts(seqs: np.ndarray, size: int) -> np.ndarray:
    """Per-row histogram of the integer rows of ``seqs`` over ``range(size)``."""
    seqs = np.atleast_2d(seqs)
    out = np.zeros((seqs.shape[0], size), dtype=np.int64)
    for a in range(size):
        out[:, a] = np.count_nonzero(seqs == a, axis=1)
    return out


def typical_mask(seqs: np.ndarray, pmf, delta: float) -> np.ndarray:
    pmf = np.asarray(pmf, dtype=float)
    seqs = np.atleast_2d(seqs)
    return counts_typical(letter_counts(seqs, pmf.size), seqs.shape[1], pmf, delta)


def is_typical(seq, pmf, delta: float) -> bool:
    return bool(typical_mask(np.asarray(seq).reshape(1, -1), pmf, delta)[0])


def joint_counts(x: np.ndarray, ys: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Joint letter counts of a fixed ``x`` paired with each row of ``ys``."""
    ys = np.atleast_2d(ys)
    x = np.asarray(x).reshape(1, -1)
    code = x * ny + ys
    return letter_counts(code, nx * ny).reshape(ys.shape[0], nx, ny)


def joint_typical_mask(x, ys, joint_pmf, delta: float) -> np.ndarray:
    joint = np.asarray(joint_pmf, dtype=float)
    ys = np.atleast_2d(ys)
    counts = joint_counts(x, ys, *joint.shape)
    return counts_typical(counts, ys.shape[1], joint, delta)


def classical_typical_set(pmf, n: int, delta: float, conditioning=None, budget: Budget = DEFAULT_BUDGET):
    """Enumerate the delta-typical sequences of length ``n``.

    With ``conditioning=(joint_pmf, x_seq)`` the result is the conditional set
    ``{y^n : (x^n, y^n) jointly typical for joint_pmf}``; ``pmf`` is then
    ignored except as a fallback alphabet size.  Sequences are returned as
    tuples in lexicographic order.
    """
    if n < 1:
        raise UsageError("n must be positive")
    if delta < 0:
        raise UsageError("delta must be nonnegative")
    if conditioning is None:
        p = check_pmf(pmf)
        budget.check("enum", p.size**n)
        seqs = all_vectors(p.size, n)
        mask = typical_mask(seqs, p, delta)
    else:
        joint, x = conditioning
        joint = check_pmf(joint, "joint pmf")
        if joint.ndim != 2:
            raise UsageError("conditioning joint pmf must be 2-D")
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (n,) or np.any(x < 0) or np.any(x >= joint.shape[0]):
            raise UsageError("conditioning sequence must have length n over the first alphabet")
        budget.check("enum", joint.shape[1] ** n)
        seqs = all_vectors(joint.shape[1], n)
        mask = joint_typical_mask(x, seqs, joint, delta)
    return [tuple(int(v) for v in s) for s in seqs[mask]]
