from __future__ import annotations

import json
import math

import numpy as np
import pytest

from urywidth.width.certificate import (
    CertificateError,
    WidthCertificate,
    array_hash,
    check_consistency,
    verify_certificate,
)


def test_kind_and_dim_validated():
    with pytest.raises(CertificateError):
        WidthCertificate("middle", 1, 1.0, "x")
    with pytest.raises(CertificateError):
        WidthCertificate("upper", -1, 1.0, "x")


def test_json_round_trip_with_numpy():
    c = WidthCertificate("upper", 1, 2.5, "fiber-map", {"a": np.float64(1.5), "b": np.arange(3), "c": math.inf})
    text = c.to_json()
    back = WidthCertificate.from_json(text)
    assert back.value == 2.5 and back.evidence["b"] == [0, 1, 2]
    assert json.loads(text)["evidence"]["c"] == "inf"
    assert WidthCertificate.from_json(back.to_json()).to_json() == back.to_json()


def test_unknown_method_fails_closed():
    assert not verify_certificate(WidthCertificate("upper", 1, 1.0, "no-such-method"))


def test_array_hash_sensitive():
    a = np.arange(5)
    assert array_hash(a) == array_hash(a.copy())
    assert array_hash(a) != array_hash(a + 1)


def test_consistency():
    ok = [
        WidthCertificate("lower", 1, 1.0, "m", space="X"),
        WidthCertificate("upper", 1, 1.0, "m", space="X"),
        WidthCertificate("upper", 1, 0.5, "m", space="Y"),
        WidthCertificate("lower", 2, 0.5, "m", space="X"),
    ]
    assert check_consistency(ok) == []
    # UW is non-increasing in d: an upper bound at d = 1 also caps d = 2
    cross = ok + [WidthCertificate("lower", 2, 3.0, "m", space="X")]
    assert check_consistency(cross) == [("X", 2, 1.0, 3.0)]
    bad = ok + [WidthCertificate("upper", 1, 0.9, "m", space="X")]
    assert check_consistency(bad) == [("X", 1, 0.9, 1.0)]
