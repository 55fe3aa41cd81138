"""Regression protocols: exact paths, sampled paths, AGD, and the lp embedding."""

import math
from fractions import Fraction

import numpy as np
import pytest

from commopt.commsim import Network, run_protocol
from commopt.config import DEFAULTS
from commopt.instances import GenSpec, Instance, gen_random
from commopt.lpsolve import lp_exact_oracle
from commopt.regression import (
    gradient_exchange,
    huber_smooth,
    huber_smooth_grad,
    inv_exp_moment,
    l1_exact_oracle,
    l1_minimize_exact,
    l1_norm,
    linf_lp_instance,
    linf_norm,
    lp_embed_reduce,
    smoothed_objective_grad,
)
from commopt.rng import Stream


def reg_instance(rows, rhs, partition, kind="regression", c=None, L=None):
    s = max(partition)
    d = len(rows[0])
    if L is None:
        L = max(max(abs(v).bit_length() for row in rows for v in row), 1)
    return Instance(kind, len(rows), d, L, s, tuple(tuple(r) for r in rows), tuple(rhs), c, tuple(partition))


# -- l2 ----------------------------------------------------------------------


def test_l2_exact_identity():
    inst = reg_instance([[1, 0], [0, 1]], [1, 2], [1, 2])
    out, _ = run_protocol("l2-exact", inst)
    assert out.x == (1, 2)
    assert out.value == 0.0


def test_l2_exact_mean():
    inst = reg_instance([[1], [1]], [0, 2], [1, 2])
    out, _ = run_protocol("l2-exact", inst)
    assert out.x == (1,)


def test_l2_exact_overdetermined():
    inst = reg_instance([[1, 0], [0, 1], [1, 1]], [1, 1, 0], [1, 1, 2])
    out, _ = run_protocol("l2-exact", inst)
    assert out.x == (Fraction(1, 3), Fraction(1, 3))


def test_l2_sampled_exact_fit_zero():
    stream = Stream(3).split("fit")
    d = 3
    x0 = [stream.randint(-4, 4) for _ in range(d)]
    rows = [tuple(stream.randint(-8, 8) for _ in range(d)) for _ in range(120)]
    rhs = [sum(a * x for a, x in zip(row, x0)) for row in rows]
    inst = reg_instance(rows, rhs, [(i % 3) + 1 for i in range(120)])
    out, _ = run_protocol("l2-sampled", inst, seed=5, eps=0.5)
    assert out.value == 0.0


def test_l2_sampled_below_budget_equals_exact():
    inst = gen_random(GenSpec("regression", n=12, d=3, L=6, s=2, seed=4))
    exact, _ = run_protocol("l2-exact", inst)
    sampled, _ = run_protocol("l2-sampled", inst, seed=8, eps=0.5)
    assert sampled.x == exact.x
    assert sampled.value == exact.value


def test_l2_sampled_approximation_quality():
    good = 0
    runs = 20
    for seed in range(runs):
        inst = gen_random(GenSpec("regression", n=500, d=4, L=6, s=4, seed=600 + seed))
        exact, _ = run_protocol("l2-exact", inst)
        sampled, _ = run_protocol("l2-sampled", inst, seed=seed, eps=0.5)
        assert sampled.value >= exact.value - 1e-9  # sanity floor
        good += sampled.value <= 1.5 * exact.value + 1e-9
    assert good >= 0.9 * runs


# -- l1 oracle ----------------------------------------------------------------


def test_l1_oracle_median():
    res = l1_exact_oracle([[1], [1], [1]], [0, 1, 5])
    assert res.x == (1,)
    assert res.value == 5


def test_l1_oracle_exact_fit():
    res = l1_exact_oracle([[1, 0], [0, 1]], [3, 4])
    assert res.x == (3, 4)
    assert res.value == 0


def test_l1_oracle_flat_optimum():
    res = l1_exact_oracle([[1], [1]], [0, 2])
    assert res.value == 2
    assert 0 <= res.x[0] <= 2


def test_l1_oracle_matches_slack_lp():
    # Independent cross-check: minimize the sum of slacks as an explicit LP,
    # solved by the exact incremental LP engine.
    from commopt.lpsolve import solve_lp

    stream = Stream(21).split("l1lp")
    for trial in range(10):
        n, d = 4, 2
        rows = [[stream.randint(-5, 5) for _ in range(d)] for _ in range(n)]
        rhs = [stream.randint(-5, 5) for _ in range(n)]
        res = l1_exact_oracle(rows, rhs)
        halfspaces = []
        for i in range(n):
            slack = tuple(Fraction(-1 if j == i else 0) for j in range(n))
            halfspaces.append(
                (tuple(Fraction(v) for v in rows[i]) + slack, Fraction(rhs[i]))
            )
            halfspaces.append(
                (tuple(Fraction(-v) for v in rows[i]) + slack, Fraction(-rhs[i]))
            )
        c = [Fraction(0)] * d + [Fraction(-1)] * n
        status, _, value = solve_lp(halfspaces, c, stream.split("order", trial))
        assert status == "SOLVED"
        assert res.value == -value


# -- l1 protocols -------------------------------------------------------------


def test_l1_simple_lossless_equals_oracle():
    inst = gen_random(GenSpec("regression", n=24, d=3, L=5, s=2, seed=11))
    out, _ = run_protocol("l1-simple", inst, seed=2, eps=0.5)
    oracle = l1_exact_oracle(list(inst.A), list(inst.b))
    assert out.value == oracle.value


def test_l1_simple_exact_fit_zero():
    stream = Stream(6).split("fit1")
    x0 = [2, -1, 3]
    rows = [tuple(stream.randint(-6, 6) for _ in range(3)) for _ in range(150)]
    rhs = [sum(a * x for a, x in zip(row, x0)) for row in rows]
    inst = reg_instance(rows, rhs, [(i % 4) + 1 for i in range(150)])
    out, _ = run_protocol("l1-simple", inst, seed=1, eps=0.5)
    assert out.value == 0


def test_l1_simple_approximation():
    good = 0
    runs = 15
    for seed in range(runs):
        inst = gen_random(GenSpec("regression", n=200, d=3, L=5, s=4, seed=700 + seed))
        oracle = l1_exact_oracle(list(inst.A), list(inst.b))
        out, _ = run_protocol("l1-simple", inst, seed=seed, eps=0.5)
        assert out.value >= oracle.value
        good += out.value <= Fraction(3, 2) * oracle.value
    assert good >= 0.9 * runs


def test_l1_lewis_budget_covers_everything():
    inst = gen_random(GenSpec("regression", n=30, d=3, L=5, s=3, seed=13))
    out, _ = run_protocol("l1-lewis", inst, seed=3, eps=0.5)
    oracle = l1_exact_oracle(list(inst.A), list(inst.b))
    assert out.value == oracle.value


def test_l1_lewis_true_sampling_path():
    # Above the sample budget the distributed Lewis pipeline really samples.
    for seed in range(4):
        inst = gen_random(GenSpec("regression", n=600, d=3, L=5, s=4, seed=5000 + seed))
        out, _ = run_protocol("l1-lewis", inst, seed=seed, eps=0.5)
        assert out.extra["sampled"] < inst.n
        oracle = l1_exact_oracle(list(inst.A), list(inst.b))
        assert oracle.value <= out.value <= Fraction(3, 2) * oracle.value


def test_l1_lewis_approximation():
    good = 0
    runs = 12
    for seed in range(runs):
        inst = gen_random(GenSpec("regression", n=300, d=3, L=5, s=4, seed=800 + seed))
        oracle = l1_exact_oracle(list(inst.A), list(inst.b))
        out, _ = run_protocol("l1-lewis", inst, seed=seed, eps=0.5)
        assert out.value >= oracle.value
        good += out.value <= Fraction(3, 2) * oracle.value
    assert good >= 0.85 * runs


# -- smoothing and AGD ---------------------------------------------------------


def test_huber_branches_agree_at_knee():
    lam = 0.7
    assert huber_smooth(lam, lam) == pytest.approx(lam / 2)
    assert huber_smooth(-lam, lam) == pytest.approx(lam / 2)
    assert huber_smooth_grad(lam, lam) == pytest.approx(1.0)
    assert huber_smooth_grad(-lam, lam) == pytest.approx(-1.0)


def test_smoothed_gradient_finite_differences():
    stream = Stream(17).split("fd")
    worst = 0.0
    for trial in range(25):
        n, d = 12, 3
        sa = np.array([[stream.randint(-5, 5) for _ in range(d)] for _ in range(n)], dtype=float)
        sb = np.array([stream.randint(-5, 5) for _ in range(n)], dtype=float)
        r_inv = np.eye(d) + 0.1 * np.array([[stream.gauss() for _ in range(d)] for _ in range(d)])
        z = np.array([stream.gauss() for _ in range(d)])
        z0 = np.zeros(d)
        lam = 2.0 if trial % 2 else 0.05  # exercise both branches
        sigma = 0.3
        _, grad = smoothed_objective_grad(sa, sb, r_inv, z, lam, sigma, z0)
        h = 1e-6
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            fp, _ = smoothed_objective_grad(sa, sb, r_inv, z + e, lam, sigma, z0)
            fm, _ = smoothed_objective_grad(sa, sb, r_inv, z - e, lam, sigma, z0)
            fd = (fp - fm) / (2 * h)
            denom = max(abs(fd), 1.0)
            worst = max(worst, abs(fd - grad[j]) / denom)
    assert worst < 1e-4


def test_gradient_aggregation_identity():
    stream = Stream(29).split("agg")
    for _ in range(10):
        d = 3
        views = []
        all_rows = []
        all_rhs = []
        for sid in range(3):
            n_i = 5
            sa = np.array([[stream.randint(-4, 4) for _ in range(d)] for _ in range(n_i)], dtype=float)
            sb = np.array([stream.randint(-4, 4) for _ in range(n_i)], dtype=float)
            views.append((sa, sb))
            all_rows.append(sa)
            all_rhs.append(sb)
        r_inv = np.eye(d) + 0.05 * np.array([[stream.gauss() for _ in range(d)] for _ in range(d)])
        z = np.array([stream.gauss() for _ in range(d)])
        lam = 0.8
        grad_dist, _, _ = gradient_exchange([v[0] for v in views], [v[1] for v in views], r_inv, z, lam)
        sa_all = np.vstack(all_rows)
        sb_all = np.concatenate(all_rhs)
        _, grad_mono = smoothed_objective_grad(sa_all, sb_all, r_inv, z, lam, 0.0, np.zeros(d))
        assert np.abs(grad_dist - grad_mono).max() < 1e-10


def test_l1_agd_exact_fit_warm_start():
    stream = Stream(31).split("agdfit")
    x0 = [1, -2]
    rows = [tuple(stream.randint(-5, 5) for _ in range(2)) for _ in range(60)]
    rows = [r if any(r) else (1, 1) for r in rows]
    rhs = [sum(a * x for a, x in zip(row, x0)) for row in rows]
    inst = reg_instance(rows, rhs, [(i % 2) + 1 for i in range(60)])
    out, _ = run_protocol("l1-agd", inst, seed=2, eps=0.25)
    assert out.value <= 1e-6
    assert out.x[0] == pytest.approx(1.0, abs=1e-6)
    assert out.x[1] == pytest.approx(-2.0, abs=1e-6)


def test_l1_agd_stage_objective_monotone():
    inst = gen_random(GenSpec("regression", n=80, d=3, L=4, s=3, seed=41))
    out, _ = run_protocol("l1-agd", inst, seed=4, eps=0.25)
    for f_start, f_end, _, _ in out.extra.get("stages", []):
        assert f_end <= f_start + 1e-9


def test_l1_agd_near_optimal_on_sample():
    good = 0
    runs = 10
    for seed in range(runs):
        inst = gen_random(GenSpec("regression", n=60, d=2, L=4, s=3, seed=900 + seed))
        out, _ = run_protocol("l1-agd", inst, seed=seed, eps=0.25)
        sampled = [r for view in out.extra["sampled_views"] for r in view]
        oracle = l1_exact_oracle([r[:-1] for r in sampled], [r[-1] for r in sampled])
        achieved = out.extra["sampled_value"]
        assert achieved >= float(oracle.value) - 1e-9
        good += achieved <= 1.25 * float(oracle.value) + 1e-9
    assert good >= 0.8 * runs


# -- l-infinity ----------------------------------------------------------------


def test_linf_exact_fit():
    inst = reg_instance([[1, 0], [0, 1]], [5, 7], [1, 2])
    out, _ = run_protocol("linf", inst)
    assert out.value == 0
    assert out.x == (5, 7)


def test_linf_midpoint():
    inst = reg_instance([[1], [1]], [0, 2], [1, 2])
    out, _ = run_protocol("linf", inst)
    assert out.x == (1,)
    assert out.value == 1


def test_linf_symmetric():
    inst = reg_instance([[1], [-1]], [1, 1], [1, 2])
    out, _ = run_protocol("linf", inst)
    assert out.x == (0,)
    assert out.value == 1


def test_linf_matches_enumeration_oracle():
    for seed in range(10):
        inst = gen_random(GenSpec("regression", n=14, d=2, L=5, s=3, seed=50 + seed))
        out, _ = run_protocol("linf", inst, seed=seed)
        status, x_full, value = lp_exact_oracle(linf_lp_instance(inst))
        assert status == "SOLVED"
        assert out.value == x_full[inst.d]
        assert linf_norm(inst.A, inst.b, out.x) == out.value


# -- lp embedding --------------------------------------------------------------


def test_cp_constant_via_quadrature():
    # C_4 = Gamma(3/4), checked by quadrature of x^(-1/4) e^(-x) after the
    # substitution u = x^(3/4) that removes the singularity at zero.
    import scipy.integrate as si

    def integrand(u):
        x = u ** (4.0 / 3.0)
        return math.exp(-x) * (4.0 / 3.0)

    val, _ = si.quad(integrand, 0, 60)
    assert val == pytest.approx(inv_exp_moment(4.0), rel=1e-8)
    assert inv_exp_moment(4.0) == pytest.approx(1.2254167024651776, rel=1e-12)


def test_max_stability_identity():
    stream = Stream(37).split("maxstab")
    y = [1.5, -2.0, 0.5, 3.0, -1.0]
    p = 4.0
    y_p = sum(abs(v) ** p for v in y) ** (1.0 / p)
    total = 0.0
    draws = 100_000
    for _ in range(draws):
        m = max(abs(v) * stream.exponential() ** (-1.0 / p) for v in y)
        total += m
    mean = total / draws
    assert abs(mean - inv_exp_moment(p) * y_p) <= 0.02 * inv_exp_moment(p) * y_p


def test_embed_exact_fit_zero_optimum():
    stream = Stream(41).split("embfit")
    x0 = [2, -3]
    rows = [tuple(stream.randint(-4, 4) for _ in range(2)) for _ in range(8)]
    rhs = [sum(a * x for a, x in zip(row, x0)) for row in rows]
    inst = reg_instance(rows, rhs, [(i % 2) + 1 for i in range(8)])
    lp, info = lp_embed_reduce(inst, 4.0, 0.5, Stream(1).split("e"), DEFAULTS, R=2)
    # x = x0 with every v_r = 0 is feasible, and v_r >= 0 always: optimum 0.
    from commopt.lpsolve import solve_lp, instance_halfspaces

    status, x, value = solve_lp(instance_halfspaces(lp), [Fraction(v) for v in lp.c], Stream(2))
    assert status == "SOLVED"
    assert value == 0


def test_embed_identity_collapses_to_linf():
    inst = reg_instance([[1, 2], [3, -1]], [4, 5], [1, 2])
    lp, info = lp_embed_reduce(inst, 4.0, 0.5, Stream(0), DEFAULTS, R=1, force_identity=True)
    linf_lp = linf_lp_instance(inst)
    scale = 1 << info["q"]
    assert lp.n == linf_lp.n
    for row_e, rhs_e, row_l, rhs_l in zip(lp.A, lp.b, linf_lp.A, linf_lp.b):
        assert list(row_e) == [scale * v for v in row_l]
        assert rhs_e == scale * rhs_l


def test_embed_rejects_small_p():
    inst = reg_instance([[1]], [1], [1])
    with pytest.raises(ValueError):
        lp_embed_reduce(inst, 2.0, 0.5, Stream(0), DEFAULTS)


def test_embedding_dilation_at_optimum():
    # At the true lp optimum, the summed block maxima stay within (1+eps) of
    # C_p * R * ||Ax*-b||_p with frequency >= 0.8.
    from scipy.optimize import minimize

    p, eps, d = 4.0, 0.5, 2
    cp = inv_exp_moment(p)
    stream = Stream(47).split("dilation")
    hits = 0
    seeds = 100
    for trial in range(seeds):
        n = 20
        rows = [[stream.randint(-8, 8) for _ in range(d)] for _ in range(n)]
        rhs = [stream.randint(-8, 8) for _ in range(n)]
        a = np.array(rows, dtype=float)
        b = np.array(rhs, dtype=float)

        def obj(x):
            return float(np.sum(np.abs(a @ x - b) ** p))

        res = minimize(obj, np.zeros(d), method="BFGS", tol=1e-12)
        r = a @ res.x - b
        norm_p = float(np.sum(np.abs(r) ** p) ** (1.0 / p))
        R = math.ceil(20 * d * math.log2((d + 2) / eps) / (eps * eps))
        total = 0.0
        draws = stream.split("d", trial)
        for _ in range(R):
            scales = np.array([draws.exponential() ** (-1.0 / p) for _ in range(n)])
            total += float(np.max(np.abs(scales * r)))
        hits += total <= (1 + eps) * cp * R * norm_p
    assert hits / seeds >= 0.8


def test_lp_regression_exact_fit():
    stream = Stream(43).split("lpreg")
    x0 = [1, 2]
    rows = [tuple(stream.randint(-4, 4) for _ in range(2)) for _ in range(10)]
    rhs = [sum(a * x for a, x in zip(row, x0)) for row in rows]
    inst = reg_instance(rows, rhs, [(i % 2) + 1 for i in range(10)])
    out, _ = run_protocol("lp-embed", inst, seed=1, p=4.0, eps=0.5)
    assert out.status == "SOLVED"
    assert out.value <= 1e-7


def test_lp_regression_one_dimensional_vs_scalar_oracle():
    # Exact scalar minimization of sum |a_i x - b_i|^4 by ternary search.
    def l4_opt(rows, rhs):
        lo, hi = -10.0, 10.0
        for _ in range(200):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            f1 = sum(abs(a[0] * m1 - b) ** 4 for a, b in zip(rows, rhs))
            f2 = sum(abs(a[0] * m2 - b) ** 4 for a, b in zip(rows, rhs))
            if f1 < f2:
                hi = m2
            else:
                lo = m1
        x = (lo + hi) / 2
        return sum(abs(a[0] * x - b) ** 4 for a, b in zip(rows, rhs)) ** 0.25

    good = 0
    runs = 10
    for seed in range(runs):
        inst = reg_instance([(1,), (1,), (1,)], [0, 0, 3], [1, 2, 1])
        out, _ = run_protocol("lp-embed", inst, seed=seed, p=4.0, eps=0.5)
        opt = l4_opt(inst.A, inst.b)
        assert out.value >= opt - 1e-9
        good += out.value <= (1 + 3 * 0.5) * opt
    assert good >= 0.8 * runs
