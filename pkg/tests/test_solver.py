import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from bvfrenet import liegroup as lg
from bvfrenet.bvmeasure import BVScalar, CountableSkewPath, GeometricJumpFamily, SkewPath
from bvfrenet.scenario import builtin, case_study_initial
from bvfrenet.solver import (
    FramePath,
    JumpValidationError,
    SolverConfig,
    jump_step,
    naive_jump_equation_mismatch,
    residual_check,
    solve_2d,
    solve_bv,
    solve_bv_general,
    solve_continuous,
    solve_mollified_oracle,
)

J1, J2, J3 = (lg.generator(i) for i in (1, 2, 3))


def ode_reference(omega_prime, length, g0, s_eval):
    # independent oracle: G' = -G Omega'(s) with a high-order adaptive RK
    n = g0.shape[0]

    def rhs(s, y):
        return (-y.reshape(n, n) @ omega_prime(s)).ravel()

    sol = scipy.integrate.solve_ivp(rhs, (0, length), g0.ravel(), t_eval=s_eval, method="DOP853",
                                    rtol=1e-12, atol=1e-13)
    return sol.y.T.reshape(-1, n, n)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(eps_ladder=(0.1, 0.2))
    with pytest.raises(ValueError):
        SolverConfig(grid_size=0)


def test_constant_datum_keeps_initial_frame():
    q = lg.rotation([1, 2, 3], 0.4)
    om = SkewPath.frenet(BVScalar.constant(1.0, 0.3), BVScalar.constant(1.0, -2.0))
    p = solve_continuous(om, q)
    assert np.max(np.abs(p.frames - q)) == 0.0


def test_planar_spiral_in_3d_is_exp_j3():
    om = SkewPath.frenet(BVScalar.affine(3.0, 1.0))
    p = solve_continuous(om)
    ref = scipy.linalg.expm(np.einsum("i,jk->ijk", p.s, J3))
    np.testing.assert_allclose(p.frames, ref, atol=1e-12)
    np.testing.assert_allclose(p.tangent[:, 0], np.cos(p.s), atol=1e-12)


def test_helix_frame_closed_form():
    k, tau = 1.0, 0.5
    om = SkewPath.frenet(BVScalar.affine(4 * math.pi, k), BVScalar.affine(4 * math.pi, tau))
    p = solve_continuous(om)
    gen = k * J3 + tau * J1
    ref = np.stack([scipy.linalg.expm(s * gen) for s in p.s[::64]])
    np.testing.assert_allclose(p.frames[::64], ref, atol=1e-11)


def test_non_commuting_datum_matches_ode_oracle_second_order():
    theta = BVScalar.from_function(2.0, lambda s: s + 0.3 * s * s, lambda s: 1 + 0.6 * s)
    phi = BVScalar.from_function(2.0, lambda s: np.sin(2 * s), lambda s: 2 * np.cos(2 * s))
    om = SkewPath.frenet(theta, phi)
    errs = []
    for m in (128, 256, 512):
        p = solve_continuous(om, cfg=SolverConfig(grid_size=m, max_increment=10.0))
        ref = ode_reference(lambda s: om.derivative(s), 2.0, np.eye(3), p.s)
        errs.append(np.max(np.abs(p.frames - ref)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)
    p = solve_continuous(om)
    assert p.orthogonality_error() < 1e-12


def test_general_dimension_continuous():
    rng = np.random.default_rng(5)
    slopes = rng.standard_normal(10)
    entries = {}
    idx = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    for (i, j), a in zip(idx, slopes):
        entries[(i, j)] = BVScalar.affine(1.0, a)
    om = SkewPath(5, entries)
    p = solve_continuous(om, cfg=SolverConfig(grid_size=64))
    # affine with commuting increments: exact
    np.testing.assert_allclose(p.frames[-1], scipy.linalg.expm(-om.diffuse(1.0) + om.diffuse(0.0)), atol=1e-12)
    assert p.orthogonality_error() < 1e-12


def test_solve_continuous_refuses_jumps_and_bad_initial():
    om = SkewPath.frenet(BVScalar.affine(2.0, 1.0, jumps=[(1.0, 0.5)]))
    with pytest.raises(ValueError):
        solve_continuous(om)
    with pytest.raises(ValueError):
        solve_continuous(SkewPath.frenet(BVScalar.affine(2.0, 1.0)), np.diag([1.0, 1.0, -1.0]))


def test_jump_step_unit_torsion_and_curvature():
    g, (axis, angle) = jump_step(np.eye(3), 1.0, 1.0)
    ax = lg.log_rotation(g)
    assert ax.angle == pytest.approx(math.sqrt(2), abs=1e-12)
    np.testing.assert_allclose(ax.axis, [1 / math.sqrt(2), 0, 1 / math.sqrt(2)], atol=1e-12)
    cos_t = float(g[:, 0] @ np.eye(3)[:, 0])
    assert math.acos(cos_t) == pytest.approx(math.acos((1 + math.cos(math.sqrt(2))) / 2), abs=1e-12)


def test_jump_step_is_right_exponential():
    q = lg.rotation([0.3, -1, 2], 1.1)
    d, tau = 0.7, -0.4
    g, _ = jump_step(q, d, tau)
    np.testing.assert_allclose(g, q @ scipy.linalg.expm(d * J3 + tau * J1), atol=1e-13)


def test_jump_step_atom_weights():
    d, tau = 0.6, 0.9
    r = math.hypot(d, tau)
    g, _ = jump_step(np.eye(3), d, tau)
    a = g  # G(-) = I
    np.testing.assert_allclose(lg.atomic_skew(a.T), math.sin(r) / r * (d * J3 + tau * J1), atol=1e-14)
    assert abs(np.linalg.det(a + np.eye(3))) > 0


def test_jump_step_refuses_pi():
    with pytest.raises(JumpValidationError):
        jump_step(np.eye(3), math.pi, 0.0)
    with pytest.raises(JumpValidationError):
        jump_step(np.eye(3), 0.0, 0.0)


def printed_one_sided(d, tau, sign):
    """Closed-form one-sided matrices as printed for the case study, sign = +1 / -1."""
    r = math.hypot(d, tau)
    a = r / 2
    c, s = math.cos(a), math.sin(a)
    return np.array([
        [c + tau**2 / r**2 * (1 - c), sign * d / r * s, d * tau / r**2 * (1 - c)],
        [-sign * d / r * s, c, sign * tau / r * s],
        [d * tau / r**2 * (1 - c), -sign * tau / r * s, c + d**2 / r**2 * (1 - c)],
    ])


@pytest.mark.parametrize("d,tau", [(1.0, 1.0), (0.5, 0.0), (0.0, 0.8), (2.0, -1.0)])
def test_case_study_one_sided_frames(d, tau):
    sc = builtin("case-study", d=d, tau=tau)
    p = solve_bv(sc.omega, sc.initial)
    # solver frames at s = 1-/1+ are the printed G(0+)/G(0-) respectively
    np.testing.assert_allclose(p.at(1.0, "left"), printed_one_sided(d, tau, +1), atol=1e-12)
    np.testing.assert_allclose(p.at(1.0, "right"), printed_one_sided(d, tau, -1), atol=1e-12)


def test_printed_sign_order_contradicts_atom():
    # Taking the printed +/- literally gives A = G(0-)^T G(0+) whose atomic part is
    # the negative of the sinc-weighted atom; the swapped order reproduces it.
    d, tau = 1.0, 1.0
    r = math.hypot(d, tau)
    atom = -math.sin(r) / r * (d * J3 + tau * J1)
    lit = printed_one_sided(d, tau, -1).T @ printed_one_sided(d, tau, +1)
    np.testing.assert_allclose(lg.atomic_skew(lit), -atom, atol=1e-14)
    swapped = printed_one_sided(d, tau, +1).T @ printed_one_sided(d, tau, -1)
    np.testing.assert_allclose(lg.atomic_skew(swapped), atom, atol=1e-14)


def test_case_study_away_from_jump():
    d, tau = 1.0, 1.0
    sc = builtin("case-study", d=d, tau=tau)
    p = solve_bv(sc.omega, sc.initial)
    gl, gr = p.at(1.0, "left"), p.at(1.0, "right")
    for s in (0.25, 0.75, 1.5, 2.0):
        base = gl if s < 1 else gr
        np.testing.assert_allclose(p.at(s), base @ scipy.linalg.expm((s - 1.0) * J3), atol=1e-12)
    np.testing.assert_allclose(p.frames[0], case_study_initial(d, tau), atol=0)


def test_case_study_precise_representative_invertible():
    sc = builtin("case-study")
    p = solve_bv(sc.omega, sc.initial)
    (rec,) = p.jump_records
    np.testing.assert_allclose(rec.precise, 0.5 * rec.left @ (rec.rotation + np.eye(3)), atol=0)
    assert abs(np.linalg.det(rec.precise)) > 1e-3


def test_solve_bv_without_jumps_is_bitwise_continuous():
    om = SkewPath.frenet(BVScalar.affine(2.0, 1.2), BVScalar.from_function(2.0, np.sin, np.cos))
    a = solve_bv(om)
    b = solve_continuous(om)
    assert np.array_equal(a.frames, b.frames) and np.array_equal(a.s, b.s)


def test_three_jumps_records():
    sc = builtin("three-jumps")
    p = solve_bv(sc.omega, sc.initial)
    assert len(p.jump_records) == 3
    for rec, j in zip(p.jump_records, sc.omega.jumps):
        r = math.hypot(j.d, j.tau)
        atom = -math.sin(r) / r * (j.d * J3 + j.tau * J1)
        np.testing.assert_allclose(rec.atom, atom, atol=1e-10)
        ax = lg.log_rotation(rec.rotation)
        assert ax.angle == pytest.approx(r, abs=1e-10)
        np.testing.assert_allclose(ax.axis, np.array([j.tau, 0, j.d]) / r, atol=1e-10)
        np.testing.assert_allclose(rec.right, lg.rotation(rec.axis, rec.angle) @ rec.left, atol=0)
    assert p.orthogonality_error() < 1e-10


def test_jump_angles_invariant_under_initial_frame():
    om = builtin("three-jumps").omega
    a = solve_bv(om)
    q = lg.rotation([1, -1, 0.5], 2.0)
    b = solve_bv(om, q)
    np.testing.assert_allclose(b.frames[0], q)
    for ra, rb in zip(a.jump_records, b.jump_records):
        assert ra.left[:, 0] @ ra.right[:, 0] == pytest.approx(rb.left[:, 0] @ rb.right[:, 0], abs=1e-12)


def test_solve_bv_refuses_large_jump():
    om = SkewPath.frenet(BVScalar.affine(2.0, 1.0, jumps=[(1.0, 2.5)]), BVScalar.constant(2.0, jumps=[(1.0, 2.0)]))
    with pytest.raises(JumpValidationError):
        solve_bv(om)


def test_solve_2d_identity_rotation():
    p = solve_2d(BVScalar.affine(2 * math.pi, 1.0, increasing=True))
    np.testing.assert_allclose(p.tangent, np.column_stack([np.cos(p.s), np.sin(p.s)]), atol=1e-14)


def test_solve_2d_jump_atom_and_bounds():
    d = 0.9
    th = BVScalar.affine(2.0, 1.0, jumps=[(1.0, d)], increasing=True)
    p = solve_2d(th)
    (rec,) = p.jump_records
    jhat = np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(rec.atom, math.sin(d) * jhat, atol=1e-15)
    assert p.at(1.5) @ [1, 0] == pytest.approx([math.cos(1.5 + d), math.sin(1.5 + d)])
    solve_2d(th.with_jumps([(1.0, math.pi - 1e-6)]))
    with pytest.raises(JumpValidationError):
        solve_2d(th.with_jumps([(1.0, math.pi)]))


def test_solve_2d_matches_continuous_planar():
    th = BVScalar.from_function(3.0, lambda s: s + 0.2 * np.sin(3 * s), lambda s: 1 + 0.6 * np.cos(3 * s))
    a = solve_2d(th)
    b = solve_continuous(SkewPath.planar(th))
    np.testing.assert_allclose(a.frames, b.frames, atol=1e-12)


def test_mollified_oracle_converges_for_smooth_data():
    om = SkewPath.frenet(BVScalar.from_function(2.0, lambda s: s + 0.2 * s * s, lambda s: 1 + 0.4 * s),
                         BVScalar.affine(2.0, 0.7))
    exact = solve_continuous(om)
    errs = []
    for eps in SolverConfig().eps_ladder:
        o = solve_mollified_oracle(om, eps)
        assert o.orthogonality_error() < 1e-10
        grid = exact.s
        oi = np.stack([o.frames[np.searchsorted(o.s, s)] for s in grid[::256]])
        errs.append(np.max(np.linalg.norm(oi - exact.frames[::256], axis=(1, 2))))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def closed_form_inner(d, tau, eps, sign):
    # mollified interior solution at s = +-eps, in the solver's sign convention
    lam = math.sqrt((2 * eps + d) ** 2 + tau**2) / 2
    k, t = (2 * eps + d) / (2 * lam), tau / (2 * lam)
    return scipy.linalg.expm(sign * lam * (k * J3 + t * J1))


def test_mollified_case_study_inner_matrices():
    d, tau, eps = 1.0, 1.0, 0.1
    sc = builtin("case-study", d=d, tau=tau)
    o = solve_mollified_oracle(sc.omega, eps, sc.initial)
    g_lo = o.frames[np.argmin(np.abs(o.s - (1 - eps)))]
    g_hi = o.frames[np.argmin(np.abs(o.s - (1 + eps)))]
    expected = closed_form_inner(d, tau, eps, -1).T @ closed_form_inner(d, tau, eps, +1)
    np.testing.assert_allclose(g_lo.T @ g_hi, expected, atol=1e-12)


def test_residual_zero_data_and_jumps():
    om = SkewPath.frenet(BVScalar.constant(1.0), BVScalar.constant(1.0))
    assert residual_check(solve_continuous(om), om).max_residual == 0.0
    sc = builtin("case-study")
    rep = residual_check(solve_bv(sc.omega, sc.initial), sc.omega)
    assert rep.max_residual <= 1e-6 and rep.jump_residual < 1e-12


def test_residual_second_order_on_helix():
    om = builtin("helix").omega
    res = [residual_check(solve_bv(om, cfg=SolverConfig(grid_size=m, max_increment=10.0)), om).max_residual
           for m in (256, 512, 1024)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 1.9)


def test_left_continuous_planar_jump_equation_is_inconsistent():
    for d in (0.3, 1.0, 2.5):
        assert naive_jump_equation_mismatch(d) > 0.1


def test_truncation_finite_set_stabilises():
    om = builtin("three-jumps").omega
    study = solve_bv_general(om, n_max=6)
    full = sum(1 for _ in om.jumps)
    first_full = study.jump_counts.index(full)
    assert all(dist == 0.0 for dist in study.successive_distances[first_full:])


def test_truncation_index_schedule_counts():
    base = SkewPath.frenet(BVScalar.affine(2.0, 1.0, increasing=True), BVScalar.affine(2.0, 0.3))
    om = CountableSkewPath(base, GeometricJumpFamily(d0=1.0))
    study = solve_bv_general(om, n_max=4, schedule="index", cfg=SolverConfig(grid_size=512))
    assert study.jump_counts == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        solve_bv_general(om, n_max=2, schedule="bogus")


def test_frame_path_is_read_only():
    p = solve_continuous(SkewPath.frenet(BVScalar.affine(1.0, 1.0)))
    with pytest.raises(ValueError):
        p.frames[0, 0, 0] = 2.0
    assert isinstance(p, FramePath)
