"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
"""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from bvfrenet import liegroup as lg
from bvfrenet.bvmeasure import CountableSkewPath, SkewPath, truncate_jumps
from bvfrenet.curvegeom import discrete_frechet, integrate_tangent, jump_angles, summarize
from bvfrenet.scenario import BUILTIN_NAMES, builtin, random_jump_datum
from bvfrenet.solver import SolverConfig, residual_check, solve_2d, solve_bv, solve_bv_general, \
    solve_continuous, solve_mollified_oracle

J1, J2, J3 = (lg.generator(i) for i in (1, 2, 3))


def report(k, title, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {title} ({detail})")
    assert ok, f"criterion {k}: {title}: {detail}"


def finite(omega):
    return truncate_jumps(omega, 12) if isinstance(omega, CountableSkewPath) else omega


def solve_builtin(name):
    sc = builtin(name)
    om = finite(sc.omega)
    return sc, om, solve_bv(om, sc.initial, sc.config)


def closed_form_one_sided(d, tau, sign):
    # closed-form one-sided frames of the unit-curvature case study, sign = +1 / -1
    r = math.hypot(d, tau)
    c, s = math.cos(r / 2), math.sin(r / 2)
    return np.array([
        [c + tau**2 / r**2 * (1 - c), sign * d / r * s, d * tau / r**2 * (1 - c)],
        [-sign * d / r * s, c, sign * tau / r * s],
        [d * tau / r**2 * (1 - c), -sign * tau / r * s, c + d**2 / r**2 * (1 - c)],
    ])


def test_01_case_study_regression():
    d = tau = 1.0
    sc = builtin("case-study", d=d, tau=tau)
    p = solve_bv(sc.omega, sc.initial, sc.config)
    # the jump sits at s = 1 of (0, 2); the left frame is the "+" matrix (sign order swapped)
    err_f = max(np.max(np.abs(p.at(1.0, "left") - closed_form_one_sided(d, tau, +1))),
                np.max(np.abs(p.at(1.0, "right") - closed_form_one_sided(d, tau, -1))))
    a = math.acos((1 + math.cos(math.sqrt(2))) / 2)
    # reconstruction from the matrices: tangent and binormal columns
    gl, gr = closed_form_one_sided(d, tau, +1), closed_form_one_sided(d, tau, -1)
    a_t = math.acos(np.clip(gl[:, 0] @ gr[:, 0], -1, 1))
    a_b = math.acos(np.clip(gl[:, 2] @ gr[:, 2], -1, 1))
    g = summarize(p, sc.omega)
    err_i = max(abs(g.tc_exact - (2 + a)), abs(g.tat_exact - a), abs(g.tc_exact - (2 + a_t)),
                abs(g.tat_exact - a_b))
    report(1, "case-study frames and TC/TAT", err_f <= 1e-10 and err_i <= 1e-8,
           f"frame err {err_f:.2e}, invariant err {err_i:.2e}")


def test_02_special_case_collapse():
    err = 0.0
    for x in (0.1, 0.5, 1.0, 2.0, 3.0):
        err = max(err, np.max(np.abs(np.array(jump_angles(x, 0.0)) - [x, x, 0.0])))
        for t in (x, -x):
            err = max(err, np.max(np.abs(np.array(jump_angles(0.0, t)) - [0.0, x, x])))
    report(2, "special-case angle triples", err <= 1e-12, f"max err {err:.2e}")


def test_03_planar_closed_form():
    sc = builtin("circle-2d")
    theta = sc.omega.theta
    th0 = float(theta(0.0))
    errs = []
    for p in (solve_2d(theta, cfg=sc.config), solve_continuous(SkewPath.planar(theta), cfg=sc.config)):
        a = theta(p.s) - th0
        ref = np.stack([np.stack([np.cos(a), -np.sin(a)], -1), np.stack([np.sin(a), np.cos(a)], -1)], 1)
        errs.append(np.max(np.abs(p.frames - ref)))
    report(3, "2D rotation formula", max(errs) <= 1e-8,
           f"solve_2d {errs[0]:.2e}, solve_continuous {errs[1]:.2e}")


def test_04_mollified_oracle_convergence():
    sc = builtin("case-study")
    exact = integrate_tangent(solve_bv(sc.omega, sc.initial, sc.config), True)
    dist = []
    for eps in (0.2, 0.1, 0.05, 0.025):
        o = solve_mollified_oracle(sc.omega, eps, sc.initial, sc.config)
        dist.append(discrete_frechet(integrate_tangent(o, True), exact))
    ok = all(b < a for a, b in zip(dist, dist[1:])) and dist[-1] < 0.05
    report(4, "epsilon ladder", ok, "Frechet " + ", ".join(f"{x:.4g}" for x in dist))


def test_05_orthogonality_suite():
    worst = {name: solve_builtin(name)[2].orthogonality_error() for name in BUILTIN_NAMES}
    m = max(worst.values())
    report(5, "orthogonality on built-ins", m <= 1e-10, f"max {m:.2e} ({max(worst, key=worst.get)})")


def test_06_cayley_property():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(1000):
        n = 2 + i % 5
        x = rng.standard_normal((n, n))
        x = x - x.T
        # scale so every rotation angle stays below 3, away from pi
        x *= rng.uniform(0.05, 3.0) / np.max(np.abs(np.linalg.eigvals(x)))
        b = lg.cayley(scipy.linalg.expm(x))
        worst = max(worst, np.linalg.norm(b + b.T))
    closed = 0.0
    for a in (0.3, -0.3, 1.5, -1.5, 3.0, -3.0):
        b = lg.cayley(scipy.linalg.expm(a * J2))
        closed = max(closed, np.max(np.abs(b - math.tan(a / 2) * J2)))
    report(6, "Cayley skewness and closed form", worst <= 1e-12 and closed <= 1e-12,
           f"skew {worst:.2e}, closed form {closed:.2e}")


def test_07_polygonal_helix():
    sc = builtin("helix")
    p = solve_bv(sc.omega, sc.initial, sc.config)
    g = summarize(p, sc.omega, 2048)
    L = 4 * math.pi
    e_len = abs(g.polygon_length - L) / L
    e_k = abs(g.tc_polygonal - 4 * math.pi) / (4 * math.pi)
    e_t = abs(g.tat_polygonal - 2 * math.pi) / (2 * math.pi)
    report(7, "helix polygon at 2048 segments", e_len <= 1e-3 and e_k <= 1e-2 and e_t <= 1e-2,
           f"length {e_len:.2e}, K {e_k:.2e}, torsion {e_t:.2e} relative")


def test_08_jump_angle_bounds():
    grid = np.linspace(-2.2, 2.2, 50)  # excludes 0, so no point lies on an axis
    strict = True
    gap = math.inf
    for d in grid:
        for t in grid:
            r = math.hypot(d, t)
            at, an, ab = jump_angles(d, t)
            gap = min(gap, r - at, r - ab)
            strict &= at < r - 1e-12 and ab < r - 1e-12 and an == pytest.approx(r, abs=1e-15)
    axis = 0.0
    for x in grid:
        axis = max(axis, abs(jump_angles(x, 0.0)[0] - abs(x)), abs(jump_angles(0.0, x)[2] - abs(x)))
    report(8, "jump-angle bounds on a 50x50 grid", strict and axis <= 1e-12,
           f"min off-axis gap {gap:.2e}, on-axis err {axis:.2e}")


def test_09_corollary_bounds():
    rng = np.random.default_rng(9)
    worst_tc = worst_tat = -math.inf
    for _ in range(50):
        om = random_jump_datum(rng)
        p = solve_bv(om, cfg=SolverConfig(grid_size=256))
        g = summarize(p, om)
        # |D^J Omega| = sqrt(2) * sum r, so 2^{-1/2} |D^J Omega| = sum r
        atoms = sum(j.mass for j in om.jumps) / math.sqrt(2)
        tc_b = om.theta.diffuse_mass() + atoms
        tat_b = om.phi.diffuse_mass() + atoms
        worst_tc = max(worst_tc, g.tc_exact - tc_b)
        worst_tat = max(worst_tat, g.tat_exact - tat_b)
    report(9, "TC/TAT bounds on 50 random scenarios", worst_tc <= 0 and worst_tat <= 0,
           f"max excess TC {worst_tc:.3g}, TAT {worst_tat:.3g}")


def _quadrature_b(f, g, h, s):
    def mat(a, b, c):
        return np.array([[0, a, c], [-a, 0, b], [-c, -b, 0]])

    x = mat(f.func(s), g.func(s), h.func(s))
    dx = mat(f.deriv(s), g.deriv(s), h.deriv(s))

    def entry(u, i, j):
        return (scipy.linalg.expm(-u * x) @ dx @ scipy.linalg.expm(u * x))[i, j]

    return np.array([[scipy.integrate.quad(entry, 0, 1, args=(i, j), epsabs=1e-13, epsrel=1e-13)[0]
                      for j in range(3)] for i in range(3)])


def test_10_exp_path_derivative():
    k, tau = 1.3, 0.6
    f = lg.ScalarPath(lambda s: k * s, lambda s: k)
    g = lg.ScalarPath(lambda s: tau * s, lambda s: tau)
    h = lg.ScalarPath(lambda s: 0.0, lambda s: 0.0)
    lin = 0.0
    for s in np.linspace(0.05, 5.0, 100):
        b = lg.exp_path_derivative(f, g, h, s)
        lin = max(lin, abs(b[0, 1] - k), abs(b[0, 2]), abs(b[1, 2] - tau))
    paths = [
        (lg.ScalarPath(np.cos, lambda s: -np.sin(s)), lg.ScalarPath(lambda s: s, lambda s: 1.0),
         lg.ScalarPath(lambda s: 0.3 * s * s, lambda s: 0.6 * s)),
        (lg.ScalarPath(lambda s: s * s, lambda s: 2 * s), lg.ScalarPath(np.sin, np.cos),
         lg.ScalarPath(lambda s: 1 - s, lambda s: -1.0)),
    ]
    quad = 0.0
    for fgh in paths:
        for s in (0.4, 1.3):
            quad = max(quad, np.max(np.abs(lg.exp_path_derivative(*fgh, s) - _quadrature_b(*fgh, s))))
    report(10, "exp-path derivative", lin <= 1e-9 and quad <= 1e-9,
           f"linear {lin:.2e}, quadrature {quad:.2e}")


def test_11_countable_jump_stability():
    sc = builtin("geometric-family")
    cfg = SolverConfig(grid_size=1024)
    thr = solve_bv_general(sc.omega, sc.initial, cfg, n_max=20)
    excess = [dist - disc for dist, disc in zip(thr.successive_distances, thr.discarded_between)]
    idx = solve_bv_general(sc.omega, sc.initial, cfg, n_max=10, schedule="index")
    cross = discrete_frechet(thr.curves[-1], idx.curves[-1])
    allowed = 2 * max(thr.tail_masses[-1], idx.tail_masses[-1])
    report(11, "truncation ladder and schedules", max(excess) <= 0 and cross <= allowed,
           f"max step excess {max(excess):.3g}, schedules {cross:.3g} vs {allowed:.3g}")


def test_12_residual_check():
    res = {}
    for name in BUILTIN_NAMES:
        sc, om, p = solve_builtin(name)
        res[name] = residual_check(p, om).max_residual
    om = builtin("helix").omega
    hel = [residual_check(solve_bv(om, cfg=SolverConfig(grid_size=m, max_increment=10.0)), om).max_residual
           for m in (256, 512, 1024)]
    order = float(np.min(np.log2(np.array(hel[:-1]) / np.array(hel[1:]))))
    worst = max(res.values())
    report(12, "residuals and helix order", worst <= 1e-6 and order >= 1.9,
           f"max residual {worst:.2e} ({max(res, key=res.get)}), order {order:.3f}")
