import math

import numpy as np
import pytest

from juliafit.curves import AnnulusSpec
from juliafit.errors import BadBasepoint, GeometryRejected, Indeterminate
from juliafit.rational import (
    AnnulusMapKernel,
    AnnulusSystem,
    MultiShapeKernel,
    MultiShapeSystem,
    auto_bounds,
    certify_S,
    certify_multi,
    curve_gap,
    eval_Omega,
    eval_R,
    eval_S,
    load_annulus_system,
    load_system,
    save_annulus_system,
    save_system,
    validate_mutually_exterior,
)
from juliafit.shapepoly import ShapePolynomial, eval_P, eval_omega, make_circle_shape
from juliafit.shapes import make_circle


def circle_shape_at(center: complex, radius=1.0, eps=0.0625, n=64, t=0j):
    base = make_circle_shape(radius, eps, n)
    return ShapePolynomial(n=n, epsilon=eps, t=t, capacity=base.capacity,
                           roots=base.roots + center)


@pytest.fixture(scope="module")
def two_circle_system():
    return MultiShapeSystem(shapes=(circle_shape_at(0j, n=128),
                                    circle_shape_at(5.0 + 0j, n=128)))


@pytest.fixture(scope="module")
def two_circle_annuli():
    return [AnnulusSpec(make_circle(1.1), make_circle(0.9), 0.2),
            AnnulusSpec(make_circle(1.1, 5.0), make_circle(0.9, 5.0), 0.2)]


# ---------------------------------------------------------------------------
# harmonic combination


def test_single_shape_is_exact_node_product():
    s = make_circle_shape(1.0, 0.0625, 64)
    system = MultiShapeSystem(shapes=(s,))
    rng = np.random.default_rng(1)
    for zz in rng.uniform(-2, 2, 50) + 1j * rng.uniform(-2, 2, 50):
        want = eval_P(s, zz)
        got = eval_R(system, zz)
        assert got == want


def test_omega_deep_inside_one_circle(two_circle_system):
    # the near-shape reciprocal dominates: |Omega| tracks the tiny node value
    v = eval_Omega(two_circle_system, 0.1 + 0j)
    want = abs(0.1 / 1.0625) ** 128  # closed form for the near circle
    assert abs(v.to_complex()) == pytest.approx(want, rel=1e-10)


def test_omega_far_outside_both(two_circle_system):
    v = eval_Omega(two_circle_system, 20.0 + 0j)
    # both node products are astronomically large
    assert v.log2_abs > 400


def test_r_fixes_origin(two_circle_system):
    assert eval_R(two_circle_system, 0j) == 0j


def test_r_original_frame():
    s1 = circle_shape_at(0j, t=2.0 + 1j)
    s2 = circle_shape_at(5.0 + 0j, t=2.0 + 1j)
    system = MultiShapeSystem(shapes=(s1, s2))
    z = 2.3 + 1.1j
    a = eval_R(system, z, frame="original")
    b = eval_R(system, z - system.t, frame="translated")
    assert a == b + system.t


def test_indeterminate_on_vanishing_locus():
    # rounded arithmetic almost never hits -1 exactly, so build a shape whose
    # node product at 0 is exact: fourth roots of unity with capacity 1 give
    # omega(0) = (-1)(-1j)(1)(1j) = -1 with no rounding at all
    exact = ShapePolynomial(n=4, epsilon=0.1, t=0j, capacity=1.0 + 0j,
                            roots=np.array([1, 1j, -1, -1j], dtype=complex))
    other = circle_shape_at(5.0 + 0j, n=8)
    # pad the other shape down to n=4 as well
    other4 = ShapePolynomial(n=4, epsilon=0.1, t=0j, capacity=other.capacity,
                             roots=other.roots[:4])
    system = MultiShapeSystem(shapes=(exact, other4))
    assert eval_omega(exact, 0j).add_complex(1.0).is_zero
    with pytest.raises(Indeterminate):
        eval_Omega(system, 0j)


def test_mismatched_shapes_rejected():
    with pytest.raises(GeometryRejected):
        MultiShapeSystem(shapes=(circle_shape_at(0j, n=64),
                                 circle_shape_at(5.0, n=128)))


# ---------------------------------------------------------------------------
# multi-shape certification


def test_two_circle_certificate_passes(two_circle_system, two_circle_annuli):
    b, big = auto_bounds(two_circle_annuli)
    cert = certify_multi(two_circle_system, two_circle_annuli, b, big, 1024, seed=0)
    assert cert.passed
    assert cert.inside_max < b
    assert cert.outside_min > big


def test_two_circle_low_degree_fails(two_circle_annuli):
    system = MultiShapeSystem(shapes=(circle_shape_at(0j, n=16),
                                      circle_shape_at(5.0, n=16)))
    b, big = auto_bounds(two_circle_annuli)
    cert = certify_multi(system, two_circle_annuli, b, big, 1024, seed=0)
    assert not cert.passed


def test_levels_must_be_ordered(two_circle_system, two_circle_annuli):
    with pytest.raises(GeometryRejected):
        certify_multi(two_circle_system, two_circle_annuli, 2.0, 1.0, 1024, 0)


def test_contraction_level_capped_by_geometry(two_circle_system, two_circle_annuli):
    # b * sup|inside| must stay below the contraction ball radius
    with pytest.raises(GeometryRejected):
        certify_multi(two_circle_system, two_circle_annuli, 0.5, 50.0, 1024, 0)


def test_overlapping_annuli_rejected():
    anns = [AnnulusSpec(make_circle(1.1), make_circle(0.9), 0.2),
            AnnulusSpec(make_circle(1.1, 1.0), make_circle(0.9, 1.0), 0.2)]
    with pytest.raises(GeometryRejected):
        validate_mutually_exterior(anns)


def test_nested_annuli_rejected():
    anns = [AnnulusSpec(make_circle(5.0), make_circle(4.5), 0.2),
            AnnulusSpec(make_circle(1.1), make_circle(0.9), 0.2)]
    with pytest.raises(GeometryRejected):
        validate_mutually_exterior(anns)


def _r_step_scaled(system, z):
    """One application of the combined map with a scaled argument."""
    from juliafit.shapepoly import eval_omega

    terms = [eval_omega(s, z).add_complex(1.0) for s in system.shapes]
    acc = terms[0].reciprocal()
    for t in terms[1:]:
        acc = acc.add(t.reciprocal())
    return acc.reciprocal().mul(z)


def test_growth_composition(two_circle_system, two_circle_annuli):
    # certified expansion compounds along orbits: |R^m(z)| > B^m |z|
    from juliafit.shapepoly import ScaledComplex

    b, big = auto_bounds(two_circle_annuli)
    cert = certify_multi(two_circle_system, two_circle_annuli, b, big, 1024, 0)
    assert cert.passed
    rng = np.random.default_rng(3)
    pts = 1.1 * np.exp(1j * rng.uniform(0, 2 * np.pi, 40))
    for z0 in pts:
        z = ScaledComplex.from_value(z0)
        for m in range(1, 6):
            z = _r_step_scaled(two_circle_system, z)
            assert z.log2_abs > m * math.log2(big) + math.log2(abs(z0))


# ---------------------------------------------------------------------------
# annulus map


@pytest.fixture(scope="module")
def round_annulus_system():
    t = 1.5
    ctr = -t
    outer_shape = circle_shape_at(ctr, radius=2.0, eps=2.0 ** -6, n=256, t=t)
    inner_shape = circle_shape_at(ctr, radius=1.0, eps=2.0 ** -5, n=256, t=t)
    e_band = AnnulusSpec(make_circle(2.05, ctr), make_circle(1.95, ctr), 0.1)
    f_band = AnnulusSpec(make_circle(1.05, ctr), make_circle(0.95, ctr), 0.1)
    return AnnulusSystem(outer_shape=outer_shape, inner_shape=inner_shape,
                         outer_band=e_band, inner_band=f_band, xi=1.0)


def test_certify_round_annulus(round_annulus_system):
    cert = certify_S(round_annulus_system, 1024, seed=0)
    assert cert.passed
    assert cert.growth_min_ratio > 2.0
    assert cert.mid_max < cert.r_mid
    assert cert.far_min > cert.R_big


def test_annulus_orbit_of_origin_stays_bounded(round_annulus_system):
    cert = certify_S(round_annulus_system, 1024, seed=0)
    z = 0j
    for _ in range(100):
        z = eval_S(round_annulus_system, z)
        assert abs(z) < cert.r_mid


def test_annulus_inner_disk_blows_up(round_annulus_system):
    # reciprocal term dominates inside the inner curve
    v = eval_S(round_annulus_system, -1.5 + 0j)
    assert abs(v) > certify_S(round_annulus_system, 512, 0).R_big


def test_annulus_outer_growth(round_annulus_system):
    for z in (2.2 + 0j, -5.0 + 1j, 8j):
        v = eval_S(round_annulus_system, z)
        mag = abs(v) if not hasattr(v, "log2_magnitude") else math.inf
        assert mag > 2 * abs(z)


def test_annulus_basepoint_must_be_in_middle():
    # basepoint inside the inner disk: bands both contain the origin wrongly
    ctr = -0.0j
    outer_shape = circle_shape_at(ctr, 2.0, 2.0 ** -6, 64)
    inner_shape = circle_shape_at(ctr, 1.0, 2.0 ** -5, 64)
    e_band = AnnulusSpec(make_circle(2.05, ctr), make_circle(1.95, ctr), 0.1)
    f_band = AnnulusSpec(make_circle(1.05, ctr), make_circle(0.95, ctr), 0.1)
    system = AnnulusSystem(outer_shape=outer_shape, inner_shape=inner_shape,
                           outer_band=e_band, inner_band=f_band, xi=1.0)
    with pytest.raises(BadBasepoint):
        certify_S(system, 512, seed=0)


def test_curve_gap():
    assert curve_gap(make_circle(2.0), make_circle(1.0)) == pytest.approx(1.0, abs=1e-3)


# ---------------------------------------------------------------------------
# kernels and persistence


def test_multi_kernel_matches_scalar(two_circle_system):
    k = MultiShapeKernel(two_circle_system)
    z = np.array([0.3 + 0.1j, 5.2 - 0.1j, 2.5 + 0j, 20.0 + 0j])
    vals, log2m = k.step(z)
    for i, zz in enumerate(z):
        want = eval_R(two_circle_system, zz)
        if hasattr(want, "log2_magnitude"):
            assert log2m[i] == pytest.approx(want.log2_magnitude, rel=1e-9)
        else:
            assert abs(vals[i] - want) <= 1e-11 * abs(want) + 1e-14 * abs(zz)


def test_annulus_kernel_matches_scalar(round_annulus_system):
    # -1.5 is the inner-disk center, a pole of the map: the value there is a
    # cancellation-noise reciprocal, so only its magnitude class is checked
    k = AnnulusMapKernel(round_annulus_system)
    z = np.array([0j, 2.2 + 0j, 0.4 + 0.2j])
    vals, log2m = k.step(z)
    for i, zz in enumerate(z):
        want = eval_S(round_annulus_system, zz)
        assert abs(vals[i] - want) <= 1e-11 * abs(want) + 1e-13
    pole = np.array([-1.5 + 0j])
    _, log2m = k.step(pole)
    assert log2m[0] > 30
    assert abs(eval_S(round_annulus_system, -1.5 + 0j)) > 2.0 ** 30


def test_system_dump_round_trip(two_circle_system, tmp_path):
    p = tmp_path / "system.json"
    save_system(two_circle_system, p)
    s2 = load_system(p)
    assert s2.m == 2
    assert np.array_equal(s2.shapes[0].roots, two_circle_system.shapes[0].roots)
    assert np.array_equal(s2.shapes[1].roots, two_circle_system.shapes[1].roots)


def test_annulus_dump_round_trip(round_annulus_system, tmp_path):
    p = tmp_path / "ann.json"
    save_annulus_system(round_annulus_system, p)
    s2 = load_annulus_system(p)
    assert s2.xi == round_annulus_system.xi
    assert np.array_equal(s2.outer_shape.roots, round_annulus_system.outer_shape.roots)
    assert np.array_equal(s2.inner_band.outer.points,
                          round_annulus_system.inner_band.outer.points)
