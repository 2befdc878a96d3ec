from __future__ import annotations

import numpy as np
import pytest

from urywidth.complex import (
    ColoredComplex,
    DegenerateSimplexError,
    PeriodError,
    barycentric_subdivide_and_color,
    kuhn_triangulate,
    make_periodic,
    shape_report,
)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_kuhn_counts(d):
    import math

    K = kuhn_triangulate(d, 2, 1.0)
    assert len(K.top) == math.factorial(d) * 2**d
    assert K.n_vertices == 3**d


def test_kuhn_volume_sums_to_cube():
    from urywidth.complex import simplex_volumes

    K = kuhn_triangulate(3, 3, 0.5)
    vol = simplex_volumes(K.coords[K.top]).sum()
    assert vol == pytest.approx(1.5**3, rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_barycentric_is_rainbow(d):
    B = barycentric_subdivide_and_color(kuhn_triangulate(d, 2, 1.0))
    assert B.rainbow_fraction() == 1.0
    cols = np.sort(B.colors[B.top], axis=1)
    assert np.all(cols == np.arange(1, d + 2))


def test_euler_characteristic_of_cube():
    B = barycentric_subdivide_and_color(kuhn_triangulate(3, 2, 1.0))
    assert B.euler_characteristic() == 1


def test_periodic_torus_euler_and_rainbow(periodic3):
    assert periodic3.rainbow_fraction() == 1.0
    assert periodic3.euler_characteristic() == 0
    assert periodic3.period_lengths == (2.0, 2.0, 2.0)


def test_periodic_min_period_rejected():
    B = barycentric_subdivide_and_color(kuhn_triangulate(2, 4, 0.25))
    with pytest.raises(PeriodError):
        make_periodic(B, min_period=4.0)


def test_shape_report_finite(periodic3):
    rep = shape_report(periodic3)
    assert np.isfinite(rep.max_distortion) and rep.max_distortion >= 1.0
    assert rep.max_diameter <= 0.5 * np.sqrt(3) + 1e-12


def test_degenerate_simplex_rejected():
    with pytest.raises(DegenerateSimplexError):
        shape_report(ColoredComplex(coords=np.array([[0.0, 0], [1, 0], [2, 0]]), top=np.array([[0, 1, 2]])))


def test_simplices_sorted_unique():
    K = kuhn_triangulate(2, 2, 1.0)
    E = K.simplices(1)
    assert np.all(E[:, 0] < E[:, 1])
    assert len(np.unique(E, axis=0)) == len(E)
    assert K.f_vector() == [9, 16, 8]
