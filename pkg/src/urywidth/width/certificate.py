"""Width certificates: a value, the evidence behind it, and a verifier registry."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .. import __version__

__all__ = [
    "CertificateError",
    "WidthCertificate",
    "array_hash",
    "params_hash",
    "register_verifier",
    "verify_certificate",
    "check_consistency",
]


class CertificateError(ValueError):
    pass


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def array_hash(*arrays: np.ndarray, extra: Any = None) -> str:
    """SHA-256 over array bytes (dtype and shape included)."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str((a.dtype.str, a.shape)).encode())
        h.update(a.tobytes())
    if extra is not None:
        h.update(json.dumps(_jsonable(extra), sort_keys=True).encode())
    return h.hexdigest()


def params_hash(params: dict) -> str:
    return hashlib.sha256(json.dumps(_jsonable(params), sort_keys=True).encode()).hexdigest()


@dataclass
class WidthCertificate:
    """``kind='upper'``: UW_d(space) <= value; ``kind='lower'``: UW_d(space) >= value."""

    kind: str
    d: int
    value: float
    method: str
    evidence: dict = field(default_factory=dict)
    space: str = ""
    fixture_hash: str = ""
    version: str = __version__

    def __post_init__(self):
        if self.kind not in ("upper", "lower"):
            raise CertificateError(f"kind must be 'upper' or 'lower', not {self.kind!r}")
        if self.d < 0:
            raise CertificateError("width dimension must be non-negative")

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "WidthCertificate":
        value = float(data["value"])  # "inf" strings parse too
        return cls(
            kind=data["kind"],
            d=int(data["d"]),
            value=value,
            method=data["method"],
            evidence=data.get("evidence", {}),
            space=data.get("space", ""),
            fixture_hash=data.get("fixture_hash", ""),
            version=data.get("version", __version__),
        )

    @classmethod
    def from_json(cls, text: str) -> "WidthCertificate":
        return cls.from_dict(json.loads(text))


_VERIFIERS: dict[str, Callable[..., bool]] = {}


def register_verifier(method: str):
    def deco(fn):
        _VERIFIERS[method] = fn
        return fn

    return deco


def verify_certificate(cert: WidthCertificate, context: Any = None) -> bool:
    """Re-check a certificate against its evidence (and ``context`` when the
    check needs the space itself).  Never raises on a bad certificate."""
    fn = _VERIFIERS.get(cert.method)
    if fn is None:
        return False
    try:
        return bool(fn(cert, context))
    except (CertificateError, ValueError, KeyError, IndexError, TypeError):
        return False


def check_consistency(certs: list[WidthCertificate]) -> list[tuple[str, int, float, float]]:
    """Violations of ``min upper >= max lower`` grouped by (space, d)."""
    groups: dict[tuple[str, int], list[WidthCertificate]] = {}
    for c in certs:
        groups.setdefault((c.space, c.d), []).append(c)
    bad = []
    for (space, d), cs in sorted(groups.items()):
        ups = [c.value for c in cs if c.kind == "upper"]
        los = [c.value for c in cs if c.kind == "lower"]
        # UW_d is non-increasing in d, so an upper bound at d' <= d also bounds UW_d
        ups += [c.value for c in certs if c.space == space and c.kind == "upper" and c.d < d]
        if ups and los and min(ups) < max(los):
            bad.append((space, d, min(ups), max(los)))
    return bad
