from __future__ import annotations

import numpy as np
import pytest

from urywidth.complex import barycentric_subdivide_and_color, kuhn_triangulate, make_periodic
from urywidth.meshio import (
    MeshFormatError,
    full_subcomplex,
    read_edge_list,
    read_mesh,
    read_sidecar,
    write_edge_list,
    write_mesh,
)


@pytest.mark.parametrize("suffix", [".off", ".ply"])
def test_round_trip_periodic(tmp_path, periodic3, suffix):
    p = tmp_path / f"k{suffix}"
    write_mesh(p, periodic3, {"c_n": 7.5})
    K = read_mesh(p)
    assert np.array_equal(K.coords, periodic3.coords)
    assert np.array_equal(K.top, periodic3.top)
    assert np.array_equal(K.colors, periodic3.colors)
    assert np.array_equal(K.keys, periodic3.keys)
    assert K.period_lengths == periodic3.period_lengths
    assert read_sidecar(p)["c_n"] == 7.5


def test_byte_identical(tmp_path, colored3):
    a, b = tmp_path / "a.ply", tmp_path / "b.ply"
    write_mesh(a, colored3)
    write_mesh(b, colored3)
    assert a.read_bytes() == b.read_bytes()


def test_2d_uses_noff(tmp_path):
    K = barycentric_subdivide_and_color(kuhn_triangulate(2, 2, 1.0))
    p = tmp_path / "k.off"
    write_mesh(p, K)
    assert p.read_text().splitlines()[:2] == ["nOFF", "2"]
    assert np.array_equal(read_mesh(p).coords, K.coords)


def test_bad_files(tmp_path):
    p = tmp_path / "x.off"
    p.write_text("PLY\n")
    with pytest.raises(MeshFormatError):
        read_mesh(p)
    p.write_text("OFF\n4 2 0\n0 0 0\n")
    with pytest.raises(MeshFormatError):
        read_mesh(p)
    with pytest.raises(MeshFormatError):
        read_mesh(tmp_path / "x.stl")


def test_subcomplex_and_edges(tmp_path, colored3):
    mask = colored3.colors <= 2
    S = full_subcomplex(colored3, mask)
    assert S.dim == 1 and set(np.unique(S.colors)) <= {1, 2}
    e = colored3.simplices(1)[:10]
    w = np.linspace(0.1, 1.0, 10) / 3
    write_edge_list(tmp_path / "e.csv", e, w)
    e2, w2 = read_edge_list(tmp_path / "e.csv")
    assert np.array_equal(e, e2) and np.array_equal(w, w2)
