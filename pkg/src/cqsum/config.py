"""JSON experiment configs: channels, sources and pmfs.

Complex matrices are nested lists of ``[re, im]`` pairs (plain reals are
accepted too).  Every document carries a top-level ``"schema"`` field.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channels import CqMac, CqPtp, SourcePair, doubly_symmetric_source, example1_channel, independent_source
from .errors import UsageError
from .example1 import pure_pair
from .quantum import density_operator

CONFIG_SCHEMA = "cqsum-config/1"
REPORT_SCHEMA = "cqsum-report/1"


class ConfigFormatError(Exception):
    """The config file is not well-formed JSON."""


def load_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigFormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigFormatError(f"{path}: top level must be a JSON object")
    return doc


def check_schema(doc: dict) -> None:
    schema = doc.get("schema")
    if schema != CONFIG_SCHEMA:
        raise UsageError(f"config schema must be {CONFIG_SCHEMA!r}, got {schema!r}")


def require(doc: dict, key: str):
    if key not in doc:
        raise UsageError(f"config is missing {key!r}")
    return doc[key]


def _entry(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise UsageError("complex entries must be [re, im] pairs")
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def decode_matrix(rows) -> np.ndarray:
    try:
        return np.array([[_entry(x) for x in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad matrix: {exc}") from exc


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def decode_state(rows, tol: float) -> np.ndarray:
    """Validate at ``tol`` and return the nearest exact density matrix."""
    h = density_operator(decode_matrix(rows), tol)
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    h = (v * w) @ v.conj().T
    h = (h + h.conj().T) / 2
    return h / np.trace(h).real


def resolve(spec, base: Path | None):
    """Inline object, or ``{"file": path}`` relative to the config's directory."""
    if isinstance(spec, dict) and set(spec) == {"file"}:
        path = Path(spec["file"])
        if base is not None and not path.is_absolute():
            path = base / path
        return load_json(path)
    return spec


def parse_channel(spec, tol: float, base: Path | None = None):
    spec = resolve(spec, base)
    kind = spec.get("type", "mac")
    if kind == "mac":
        states = require(spec, "states")
        return CqMac(np.array([[decode_state(s, tol) for s in row] for row in states]))
    if kind == "ptp":
        return CqPtp(tuple(decode_state(s, tol) for s in require(spec, "states")))
    if kind == "example1":
        qn = float(require(spec, "q_noise"))
        if "overlap" in spec:
            s0, s1 = pure_pair(float(spec["overlap"]))
        else:
            s0 = decode_state(require(spec, "sigma0"), tol)
            s1 = decode_state(require(spec, "sigma1"), tol)
        return example1_channel(qn, s0, s1)
    raise UsageError(f"unknown channel type {kind!r}")


def parse_source(spec, base: Path | None = None) -> SourcePair:
    spec = resolve(spec, base)
    kind = spec.get("type", "pmf")
    if kind == "pmf":
        return SourcePair(np.array(require(spec, "pmf"), dtype=float))
    if kind == "doubly_symmetric":
        return doubly_symmetric_source(float(require(spec, "p")))
    if kind == "independent":
        return independent_source(require(spec, "p1"), require(spec, "p2"))
    raise UsageError(f"unknown source type {kind!r}")


def parse_pmf(x) -> np.ndarray:
    try:
        return np.array(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad pmf: {exc}") from exc


def sanitize(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, np.generic):
        return sanitize(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(sanitize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
