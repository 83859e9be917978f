import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from bvfrenet.bvmeasure import (
    BVScalar,
    CountableSkewPath,
    GeometricJumpFamily,
    SkewJump,
    SkewPath,
    bump_kernel,
    decompose,
    evaluation_grid,
    mollify,
    one_sided_limits,
    total_variation,
    truncate_jumps,
    validate_jumps,
)


def step_ramp():
    # slope 1 on (0, 2) with a jump of 0.7 at s = 1
    return BVScalar.affine(2.0, 1.0, -1.0, jumps=[(1.0, 0.7)])


def test_one_sided_limits_and_precise_value():
    u = step_ramp()
    left, right, mid = one_sided_limits(u, 1.0)
    assert (left, right) == pytest.approx((0.0, 0.7))
    assert float(u(1.0)) == pytest.approx(mid)
    assert float(u(1.0, side="left")) == pytest.approx(0.0)


def test_total_variation_splits():
    u = BVScalar.build(3.0, 0.0, [("slope", 1.0, 2.0), ("slope", 3.0, -1.0)], jumps=[(1.5, -0.25)])
    assert total_variation(u) == pytest.approx(2.0 + 2.0 + 0.25)
    d = decompose(u)
    assert d.ac_mass == pytest.approx(4.0)
    assert d.jump_atoms == ((1.5, -0.25),)


def test_sampled_piece_variation_is_exact():
    vals = np.array([0.0, 1.0, 0.5, 2.0])
    u = BVScalar.build(3.0, 0.0, [("samples", 3.0, vals)])
    assert u.diffuse_mass() == pytest.approx(1.0 + 0.5 + 1.5)
    assert float(u(1.5)) == pytest.approx(0.75)


def test_smooth_piece_fallbacks_match_quadrature():
    u = BVScalar.from_function(math.pi, np.sin)
    assert u.diffuse_mass() == pytest.approx(2.0, abs=1e-8)
    assert float(u.antiderivative(math.pi)) == pytest.approx(2.0, abs=1e-10)


def test_discontinuous_pieces_rejected():
    from bvfrenet.bvmeasure import Affine

    with pytest.raises(ValueError, match="discontinuous"):
        BVScalar(2.0, [Affine(0.0, 1.0, 1.0, 0.0), Affine(1.0, 2.0, 1.0, 0.5)])


def test_jump_validation_inputs():
    with pytest.raises(ValueError):
        BVScalar.affine(1.0, 1.0, jumps=[(1.5, 0.1)])
    with pytest.raises(ValueError):
        BVScalar.affine(1.0, 1.0, increasing=True, jumps=[(0.5, -0.1)])
    with pytest.raises(ValueError):
        BVScalar.affine(1.0, 0.0, increasing=True)


def test_is_strictly_increasing():
    assert step_ramp().is_strictly_increasing()
    assert not BVScalar.affine(2.0, 1.0, jumps=[(1.0, -0.1)]).is_strictly_increasing()


def test_antiderivative_with_jumps_and_extension():
    u = step_ramp()
    # int_0^2 (s - 1) ds + 0.7 * 1
    assert float(u.antiderivative(2.0)) == pytest.approx(0.7)
    # constant extension beyond L with the right limit 1.7
    assert float(u.antiderivative(2.5)) == pytest.approx(0.7 + 0.5 * 1.7)
    assert float(u.antiderivative(-0.5)) == pytest.approx(-0.5 * -1.0)


def test_box_mollifier_matches_running_mean_quadrature():
    u = step_ramp()
    eps = 0.1
    m = mollify(u, eps)
    for s in (0.3, 0.95, 1.0, 1.04, 1.5, 1.95):
        lo, hi = s - eps, s + eps

        def ext(x):
            return float(u(np.clip(x, 0.0, 2.0)))

        ref = scipy.integrate.quad(ext, lo, hi, points=[1.0, 0.0, 2.0], limit=200)[0] / (2 * eps)
        assert float(m(s)) == pytest.approx(ref, abs=1e-12)


def test_box_mollifier_interior_formula():
    # inside |s - 1| < eps the average of a ramp with jump d is affine with slope (2 eps + d) / (2 eps)
    d, eps = 0.7, 0.1
    m = mollify(step_ramp(), eps)
    assert float(m.derivative(1.03)) == pytest.approx((2 * eps + d) / (2 * eps))
    assert float(m(1.0)) == pytest.approx(d / 2)


def test_bump_kernel_normalised():
    val = scipy.integrate.quad(bump_kernel, -1, 1)[0]
    assert val == pytest.approx(1.0, abs=1e-10)


def test_bump_mollifier_is_smooth_and_close():
    u = step_ramp()
    m = mollify(u, 0.05, kernel="bump")
    # 64-point Gauss-Legendre convolution
    assert float(m(0.5)) == pytest.approx(float(u(0.5)), abs=1e-9)
    assert float(m(1.0)) == pytest.approx(0.35, abs=1e-10)
    # monotone, so the variation is the increment (boundary averaging trims it below 2.7)
    assert m.diffuse_mass() == pytest.approx(float(m(2.0) - m(0.0)), abs=1e-8)


def test_mollify_rejects_large_eps():
    with pytest.raises(ValueError):
        mollify(step_ramp(), 1.5)


@given(st.floats(0.01, 0.4))
@settings(max_examples=25, deadline=None)
def test_mollifier_preserves_increasing(eps):
    m = mollify(BVScalar.affine(2.0, 1.0, jumps=[(1.0, 0.5)], increasing=True), eps)
    assert m.increasing
    s = np.linspace(0, 2, 501)
    assert np.all(np.diff(m(s)) > 0)


def test_evaluation_grid_contains_breakpoints():
    g = evaluation_grid(2.0, [0.3333, 1.0], 16)
    assert 0.3333 in g and g[0] == 0.0 and g[-1] == 2.0


def test_skew_path_assembly_and_jumps():
    om = SkewPath.frenet(step_ramp(), BVScalar.constant(2.0, jumps=[(1.0, 0.4)]))
    w = om(0.5)
    np.testing.assert_allclose(w, [[0, -0.5, 0], [0.5, 0, 0], [0, 0, 0]], atol=1e-15)
    (j,) = om.jumps
    assert (j.location, j.d, j.tau) == (1.0, 0.7, 0.4)
    assert om.jump_mass() == pytest.approx(math.sqrt(2) * math.hypot(0.7, 0.4))
    small = SkewPath.frenet(BVScalar.affine(2.0, 1.0, jumps=[(1.0, 0.3)]),
                            BVScalar.constant(2.0, jumps=[(1.0, 0.4)]))
    # mass sqrt(2) * 0.5 ~ 0.707: dropped at threshold 1, kept at 1/2
    assert truncate_jumps(small, 1).jumps == ()
    assert len(truncate_jumps(small, 2).jumps) == 1


def test_skew_path_rejects_jumps_in_high_dimension():
    with pytest.raises(ValueError):
        SkewPath(4, {(0, 1): step_ramp()})


def test_validate_jumps():
    big = SkewPath.frenet(BVScalar.affine(2.0, 1.0, jumps=[(1.0, 3.0)]), BVScalar.constant(2.0, jumps=[(1.0, 1.0)]))
    rep = validate_jumps(big)
    assert not rep and rep.violations[0]["location"] == 1.0
    planar_ok = SkewPath.planar(BVScalar.affine(2.0, 1.0, jumps=[(1.0, math.pi - 1e-6)]))
    assert validate_jumps(planar_ok)
    planar_bad = SkewPath.planar(BVScalar.affine(2.0, 1.0, jumps=[(1.0, math.pi)]))
    assert not validate_jumps(planar_bad)


def test_geometric_family_masses():
    fam = GeometricJumpFamily(d0=1.0, ratio=0.8)
    assert fam.total_mass() == pytest.approx(math.sqrt(2) * 0.8 / 0.2)
    assert fam.tail_mass(3) == pytest.approx(sum(fam.mass(k) for k in range(4, 400)))
    k = fam.count_above(0.1)
    assert fam.mass(k) > 0.1 >= fam.mass(k + 1)
    assert fam.jump(2, 2.0).location == pytest.approx(1.5)
    with pytest.raises(ValueError, match="non-summable"):
        GeometricJumpFamily(d0=1.0, ratio=1.0)


def test_countable_truncation_levels():
    base = SkewPath.frenet(BVScalar.affine(2.0, 1.0, increasing=True))
    om = CountableSkewPath(base, GeometricJumpFamily(d0=1.0))
    t = truncate_jumps(om, 5)
    assert all(j.mass > 0.2 for j in t.jumps)
    assert len(t.jumps) == om.family.count_above(0.2)


def test_skew_jump_mass_is_frobenius_norm():
    j = SkewJump(0.5, 0.3, -0.4)
    m = np.array([[0, 0.3, 0], [-0.3, 0, -0.4], [0, 0.4, 0]])
    assert j.mass == pytest.approx(np.linalg.norm(m))
