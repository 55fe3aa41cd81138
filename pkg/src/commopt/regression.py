"""Distributed regression protocols for the l2, l1, lp, and l-infinity norms.

The exact paths (normal equations, l1 via its LP geometry, l-infinity via a
linear program) run over rationals end to end.  The sampling and gradient
paths run in doubles: their guarantees are approximation statements, so
float error is dominated by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .commsim import Network, ProtocolOutcome
from .config import Constants
from .exactnum import (
    dot,
    gram,
    mat_vec,
    min_norm_least_squares,
    rank_and_solve,
    solve_exact,
    transpose,
)
from .instances import Instance
from .lpsolve import (
    SizeGuardError,
    instance_halfspaces,
    solve_lp,
    trunc_to_grid,
)
from .rng import Stream
from .rowsample import (
    SamplingPlan,
    _distributed_sample,
    leverage_protocol,
    lewis_protocol,
    lewis_weights_local,
    make_plan,
)


@dataclass(frozen=True)
class RegressionResult:
    x: tuple
    value: object  # Fraction on exact paths, float elsewhere
    method: str
    epsilon: float | None = None


# ---------------------------------------------------------------------------
# Residual norms
# ---------------------------------------------------------------------------


def l1_norm(rows, rhs, x) -> Fraction:
    return sum(abs(dot(row, x) - b) for row, b in zip(rows, rhs))


def l2_sq_norm(rows, rhs, x) -> Fraction:
    return sum((dot(row, x) - b) ** 2 for row, b in zip(rows, rhs))


def linf_norm(rows, rhs, x):
    return max(abs(dot(row, x) - b) for row, b in zip(rows, rhs))


def lp_norm_float(rows, rhs, x, p: float) -> float:
    total = 0.0
    for row, b in zip(rows, rhs):
        total += abs(float(sum(a * v for a, v in zip(row, x))) - float(b)) ** p
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# Exact l2 via normal equations
# ---------------------------------------------------------------------------


def _solve_normal(g_sum, y_sum):
    """Minimum-norm solution of the aggregated normal equations."""
    d = len(g_sum)
    rank, basis_idx, _ = rank_and_solve(g_sum)
    if rank == 0:
        return [Fraction(0)] * d
    basis = [g_sum[i] for i in basis_idx]
    m = [[dot(bi, mat_vec(g_sum, bj)) for bj in basis] for bi in basis]
    t = [dot(bi, y_sum) for bi in basis]
    u = solve_exact(m, t)
    x = [Fraction(0)] * d
    for coeff, brow in zip(u, basis):
        for j, v in enumerate(brow):
            x[j] += Fraction(coeff) * v
    return x


def _value_round_l2(instance: Instance, net: Network, x) -> float:
    net.to_all_servers("solution", list(x))
    total = Fraction(0)
    for sid in range(1, instance.s + 1):
        rows = instance.rows_of(sid)
        local = sum((dot(instance.A[i], x) - instance.b[i]) ** 2 for i in rows)
        net.to_coordinator(sid, "residual-sq", Fraction(local))
        total += local
    return math.sqrt(float(total))


def l2_exact(instance: Instance, net: Network, stream: Stream, cfg: Constants) -> ProtocolOutcome:
    """Each server ships its Gram matrix and A^T b; the coordinator solves."""
    d = instance.d
    g_sum = [[Fraction(0)] * d for _ in range(d)]
    y_sum = [Fraction(0)] * d
    for sid in range(1, instance.s + 1):
        rows = [instance.A[i] for i in instance.rows_of(sid)]
        rhs = [instance.b[i] for i in instance.rows_of(sid)]
        g_local = gram(rows) if rows else [[0] * d for _ in range(d)]
        y_local = mat_vec(transpose(rows), rhs) if rows else [0] * d
        net.to_coordinator(sid, "gram", [list(r) for r in g_local])
        net.to_coordinator(sid, "atb", list(y_local))
        for i in range(d):
            y_sum[i] += y_local[i]
            for j in range(d):
                g_sum[i][j] += g_local[i][j]
    x = _solve_normal(g_sum, y_sum)
    value = _value_round_l2(instance, net, x)
    return ProtocolOutcome("SOLVED", x=tuple(x), value=value, extra={"method": "l2-exact"})


def l2_sampled(
    instance: Instance, net: Network, stream: Stream, cfg: Constants, eps: float = 0.5
) -> ProtocolOutcome:
    """Leverage-score sampling of O(d/eps + d log d) rows, then an exact solve."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d, n = instance.d, instance.n
    target = math.ceil(cfg.sampling_c * (d / eps + d * math.log2(d + 1)))
    views = [instance.server_rows(sid) for sid in range(1, instance.s + 1)]
    aug_views = [instance.server_aug_rows(sid) for sid in range(1, instance.s + 1)]

    if n <= target:
        # Below the sampling budget everything travels; solve exactly.
        rows: list[tuple] = []
        for sid in range(1, instance.s + 1):
            if aug_views[sid - 1]:
                net.to_coordinator(sid, "rows", [list(r) for r in aug_views[sid - 1]])
                rows.extend(aug_views[sid - 1])
        x = _solve_normal(gram([r[:-1] for r in rows]), mat_vec(transpose([r[:-1] for r in rows]), [r[-1] for r in rows]))
        value = _value_round_l2(instance, net, x)
        return ProtocolOutcome("SOLVED", x=tuple(x), value=value, extra={"sampled": n})

    _, taus = leverage_protocol(views, d, net, stream.split("lev"), cfg)
    plans = _coordinated_plans(taus, target, "l2", net)
    sampled = _distributed_sample(aug_views, plans, net, stream.split("sample"), "l2samp")
    a_rows = [r[:-1] for r in sampled]
    rhs = [r[-1] for r in sampled]
    x = _solve_normal(gram(a_rows), mat_vec(transpose(a_rows), rhs))
    value = _value_round_l2(instance, net, x)
    return ProtocolOutcome(
        "SOLVED", x=tuple(x), value=value, extra={"sampled": len(sampled)}
    )


def _coordinated_plans(per_server_scores, target: float, norm: str, net: Network):
    """Agree on globally normalized sampling plans (one scalar per server)."""
    locals_ = []
    for sid, scores in enumerate(per_server_scores, start=1):
        mass = float(sum(min(float(t), 1.0) if not math.isinf(t) else 1.0 for t in scores))
        locals_.append(mass)
        net.to_coordinator(sid, "score-mass", mass)
    total = sum(locals_) or 1.0
    net.to_all_servers("score-total", total)
    plans = []
    for scores in per_server_scores:
        if len(scores) == 0:
            plans.append(None)
            continue
        capped = [1.0 if math.isinf(float(t)) else min(float(t), 1.0) for t in scores]
        plans.append(make_plan(capped, target * sum(capped) / total, norm))
    return plans


# ---------------------------------------------------------------------------
# Exact l1 minimization (descent over interpolation bases)
# ---------------------------------------------------------------------------


def _l1_descent_direction(g, zero_rows, weights, d):
    """Exact steepest-descent subproblem at a kink point.

    Minimizes <g, v> + sum_i m_i |<A^i, v>| over the box |v_j| <= 1 as a
    small LP.  A zero optimum certifies global optimality of the current
    point; otherwise the optimal v strictly decreases the objective.
    Parallel kink rows fold together first (m |<A, v>| is positively
    homogeneous in A), which keeps the slack dimension near d in practice.
    """
    from .lpsolve import solve_lp as _solve_lp

    folded: dict[tuple, Fraction] = {}
    for row, m in zip(zero_rows, weights):
        lead = next((v for v in row if v), None)
        if lead is None:
            continue
        canon = tuple(Fraction(v) / abs(lead) for v in row)
        folded[canon] = folded.get(canon, Fraction(0)) + m * abs(lead)
    rows_z = list(folded)
    w_z = [folded[r] for r in rows_z]
    z = len(rows_z)
    if d + z > 10:
        raise SizeGuardError(f"l1 direction subproblem too degenerate: {z} kink rows")

    halfspaces = []
    for k, row in enumerate(rows_z):
        slack = tuple(Fraction(-1 if j == k else 0) for j in range(z))
        halfspaces.append((tuple(row) + slack, Fraction(0)))
        halfspaces.append((tuple(-v for v in row) + slack, Fraction(0)))
    for j in range(d):
        unit = [Fraction(0)] * (d + z)
        unit[j] = Fraction(1)
        halfspaces.append((tuple(unit), Fraction(1)))
        unit[j] = Fraction(-1)
        halfspaces.append((tuple(unit), Fraction(1)))
    c = [-Fraction(v) for v in g] + [-w for w in w_z]
    status, sol, value = _solve_lp(halfspaces, c, None, L=8)
    assert status == "SOLVED"
    return -value, list(sol[:d])


def l1_minimize_exact(rows, rhs, guard: int = 4000):
    """Exact rational minimizer of ||Ax - b||_1.

    Piecewise-linear descent: at each iterate an exact direction LP either
    certifies optimality or produces a strictly descending direction, and an
    exact weighted-median line search takes the step.  Duplicate rows are
    merged by weight first, which both shrinks the work and removes the most
    common source of degeneracy in sampled inputs.
    """
    n_raw = len(rows)
    d = len(rows[0])
    if n_raw * d > guard:
        raise SizeGuardError(f"l1 oracle guard exceeded: {n_raw}x{d}")

    merged: dict[tuple, int] = {}
    constant = Fraction(0)
    for row, b in zip(rows, rhs):
        key = tuple(Fraction(v) for v in row) + (Fraction(b),)
        if not any(key[:-1]):
            constant += abs(key[-1])  # zero row contributes a fixed cost
            continue
        merged[key] = merged.get(key, 0) + 1
    if not merged:
        return [Fraction(0)] * d, constant
    rowsF = [key[:-1] for key in merged]
    rhsF = [key[-1] for key in merged]
    mult = list(merged.values())
    n = len(rowsF)

    x = min_norm_least_squares(rowsF, rhsF)

    max_iters = 40 * (n + d) + 200
    for _ in range(max_iters):
        residuals = [dot(row, x) - b for row, b in zip(rowsF, rhsF)]
        if not any(residuals):
            return list(x), constant  # exact fit: global minimum
        g = [Fraction(0)] * d
        zero_rows = []
        zero_weights = []
        for i, r in enumerate(residuals):
            if r > 0:
                for j in range(d):
                    g[j] += mult[i] * rowsF[i][j]
            elif r < 0:
                for j in range(d):
                    g[j] -= mult[i] * rowsF[i][j]
            else:
                zero_rows.append(rowsF[i])
                zero_weights.append(mult[i])

        slope, v = _l1_descent_direction(g, zero_rows, zero_weights, d)
        if slope == 0:
            value = sum(m * abs(r) for m, r in zip(mult, residuals)) + constant
            return list(x), value

        w = [dot(row, v) for row in rowsF]
        deriv = Fraction(0)
        for i, r in enumerate(residuals):
            if r > 0 or (r == 0 and w[i] > 0):
                deriv += mult[i] * w[i]
            elif r < 0 or (r == 0 and w[i] < 0):
                deriv -= mult[i] * w[i]
        assert deriv < 0  # the direction LP guarantees strict descent

        events = sorted(
            (-(residuals[i]) / w[i], i)
            for i in range(n)
            if w[i] != 0 and -(residuals[i]) / w[i] > 0
        )
        t_star = None
        for t_i, i in events:
            deriv += 2 * mult[i] * abs(w[i])
            if deriv >= 0:
                t_star = t_i
                break
        assert t_star is not None, "l1 objective cannot be unbounded below"
        x = [xi + t_star * vi for xi, vi in zip(x, v)]

    raise RuntimeError("l1 descent failed to converge")


def l1_exact_oracle(rows, rhs, guard: int = 4000) -> RegressionResult:
    x, value = l1_minimize_exact(rows, rhs, guard)
    return RegressionResult(tuple(x), value, "l1-exact-oracle")


# ---------------------------------------------------------------------------
# l1 protocols
# ---------------------------------------------------------------------------


def _l1_value_round(instance: Instance, net: Network, x) -> Fraction:
    net.to_all_servers("solution", list(x))
    total = Fraction(0)
    for sid in range(1, instance.s + 1):
        local = sum(
            abs(dot(instance.A[i], x) - instance.b[i]) for i in instance.rows_of(sid)
        )
        net.to_coordinator(sid, "residual-l1", Fraction(local))
        total += local
    return total


def _local_l1_sketch(aug_rows, m: int, eps: float, stream: Stream):
    """Lewis-weight sketch of one server's rows, revalidated on probes."""
    n = len(aug_rows)
    if n <= m:
        return list(aug_rows)
    keep = [row for row in aug_rows if any(row)]
    if len(keep) < len(aug_rows):
        aug_rows = keep or aug_rows[:1]
        n = len(aug_rows)
        if n <= m:
            return list(aug_rows)
    w = lewis_weights_local(aug_rows)
    plan = make_plan(list(w), float(m), "l1")
    d_aug = len(aug_rows[0])
    a = np.asarray(aug_rows, dtype=float)
    probes = [np.array([stream.gauss() for _ in range(d_aug)]) for _ in range(12)]
    probes += [np.eye(d_aug)[j] for j in range(d_aug)]
    for attempt in range(32):
        draw = stream.split("sketch", attempt)
        cum = []
        acc = 0.0
        for p in plan.values:
            acc += p
            cum.append(acc)
        picks = [draw.choice_weighted(cum) for _ in range(plan.N)]
        sk = [tuple(v * plan.rescale(i) for v in aug_rows[i]) for i in picks]
        sk_f = np.asarray(sk, dtype=float)
        ok = True
        for y in probes:
            full = float(np.abs(a @ y).sum())
            sketched = float(np.abs(sk_f @ y).sum())
            if full > 0 and not ((1 - eps) * full <= sketched <= (1 + eps) * full):
                ok = False
                break
        if ok:
            return sk
    return sk  # best effort after the retry budget


def l1_simple(
    instance: Instance, net: Network, stream: Stream, cfg: Constants, eps: float = 0.5
) -> ProtocolOutcome:
    """Every server sends a locally validated l1 sketch; coordinator solves it."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d = instance.d
    m = math.ceil(cfg.sampling_c * d * math.log2(d + 1) / (eps * eps))
    stacked: list[tuple] = []
    for sid in range(1, instance.s + 1):
        aug = instance.server_aug_rows(sid)
        if not aug:
            net.verdict(sid, "skip")
            continue
        sketch = _local_l1_sketch(aug, m, eps, stream.split("sketch", sid))
        net.to_coordinator(sid, "sketch", [list(r) for r in sketch])
        stacked.extend(sketch)
    x, _ = l1_minimize_exact(
        [r[:-1] for r in stacked], [r[-1] for r in stacked], guard=cfg.l1_oracle_guard
    )
    value = _l1_value_round(instance, net, x)
    return ProtocolOutcome(
        "SOLVED", x=tuple(x), value=value, extra={"sketch_rows": len(stacked)}
    )


def l1_lewis(
    instance: Instance, net: Network, stream: Stream, cfg: Constants, eps: float = 0.5
) -> ProtocolOutcome:
    """Global Lewis-weight sampling of [A b], exact solve on the sample."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d, n = instance.d, instance.n
    target = math.ceil(cfg.sampling_c * d * math.log2(d + 1) / (eps * eps))
    aug_views = [instance.server_aug_rows(sid) for sid in range(1, instance.s + 1)]

    if n <= target:
        rows: list[tuple] = []
        for sid in range(1, instance.s + 1):
            if aug_views[sid - 1]:
                net.to_coordinator(sid, "rows", [list(r) for r in aug_views[sid - 1]])
                rows.extend(aug_views[sid - 1])
        sampled = rows
    else:
        weights = lewis_protocol(aug_views, d + 1, instance.L, net, stream.split("lewis"), cfg)
        plans = _coordinated_plans(weights, target, "l1", net)
        sampled = _distributed_sample(aug_views, plans, net, stream.split("sample"), "l1samp")

    x, _ = l1_minimize_exact(
        [r[:-1] for r in sampled], [r[-1] for r in sampled], guard=cfg.l1_oracle_guard
    )
    value = _l1_value_round(instance, net, x)
    return ProtocolOutcome(
        "SOLVED", x=tuple(x), value=value, extra={"sampled": len(sampled)}
    )


# ---------------------------------------------------------------------------
# Smoothed accelerated gradient descent for l1
# ---------------------------------------------------------------------------


def huber_smooth(t: float, lam: float) -> float:
    """Quadratic near zero, linear in the tails; C^1 at |t| = lam."""
    at = abs(t)
    if at <= lam:
        return t * t / (2.0 * lam)
    return at - lam / 2.0


def huber_smooth_grad(t: float, lam: float) -> float:
    if abs(t) <= lam:
        return t / lam
    return 1.0 if t > 0 else -1.0


def smoothed_objective_grad(sa, sb, r_inv, z, lam, sigma, z0):
    """Value and gradient of sum f_lam(<(SA)^i R^-1, z> - Sb_i) + sigma/2 |z-z0|^2."""
    u = r_inv @ z
    res = sa @ u - sb
    val = sum(huber_smooth(float(t), lam) for t in res)
    val += 0.5 * sigma * float((z - z0) @ (z - z0))
    inner = np.array([huber_smooth_grad(float(t), lam) for t in res])
    grad = r_inv.T @ (sa.T @ inner) + sigma * (z - z0)
    return val, grad


def gradient_exchange(server_sa, server_sb, r_inv, z, lam):
    """One distributed gradient round, returning the per-branch aggregates.

    Servers send either the signed row sums (saturated branch) or the local
    covariance pieces (quadratic branch); both are exact integer payloads
    whose bit size is independent of R^-1.
    """
    d = r_inv.shape[0]
    sign_sum = np.zeros(d)
    cov_sum = np.zeros((d, d))
    cross_sum = np.zeros(d)
    per_server = []
    u = r_inv @ z
    for sa, sb in zip(server_sa, server_sb):
        local_sign = np.zeros(d)
        local_cov = np.zeros((d, d))
        local_cross = np.zeros(d)
        if len(sa):
            res = sa @ u - sb
            sat = np.abs(res) > lam
            if sat.any():
                signs = np.sign(res[sat])
                local_sign = (signs[:, None] * sa[sat]).sum(axis=0)
            quad = ~sat
            if quad.any():
                rows = sa[quad]
                local_cov = rows.T @ rows
                local_cross = (sb[quad][:, None] * rows).sum(axis=0)
        per_server.append((local_sign, local_cov, local_cross))
        sign_sum += local_sign
        cov_sum += local_cov
        cross_sum += local_cross
    grad = r_inv.T @ (sign_sum + (cov_sum @ u - cross_sum) / lam)
    return grad, per_server, (sign_sum, cov_sum, cross_sum)


def l1_agd(
    instance: Instance, net: Network, stream: Stream, cfg: Constants, eps: float = 0.25
) -> ProtocolOutcome:
    """Lewis sample, precondition, then smoothed accelerated gradient descent.

    Communication per iteration is the two-branch exchange: signed row sums
    for saturated residuals and Gram pieces for the quadratic branch, plus
    one scalar of objective telemetry per server for the monotone safeguard.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d, n = instance.d, instance.n
    if all(not any(row) for row in instance.A):
        raise ValueError("zero matrix")
    target = math.ceil(cfg.sampling_c * d * math.log2(n + 1) / (eps * eps))
    aug_views = [
        [row for row in instance.server_aug_rows(sid) if any(row)]
        for sid in range(1, instance.s + 1)
    ]

    # -- Lewis sampling; sampled rows stay on their servers. -----------------
    if n <= target:
        sampled_views = aug_views
    else:
        weights = lewis_protocol(aug_views, d + 1, instance.L, net, stream.split("lewis"), cfg)
        plans = _coordinated_plans(weights, target, "l1", net)
        sampled_views = []
        for sid in range(1, instance.s + 1):
            plan = plans[sid - 1]
            view = aug_views[sid - 1]
            count_stream = stream.split("agd-draw", sid)
            if plan is None or not view:
                sampled_views.append([])
                continue
            cum = []
            acc = 0.0
            for p in plan.values:
                acc += p
                cum.append(acc)
            local_n = max(1, round(sum(plan.values)))
            picks = [count_stream.choice_weighted(cum) for _ in range(local_n)]
            sampled_views.append(
                [tuple(v * plan.rescale(i) for v in view[i]) for i in picks]
            )

    sa_views = [[r[:-1] for r in view] for view in sampled_views]
    sb_views = [[r[-1] for r in view] for view in sampled_views]
    n_sampled = sum(len(v) for v in sa_views)

    # -- Precondition: leverage-reduce SA, factor its Gram matrix. -----------
    tilde, _ = leverage_protocol(sa_views, d, net, stream.split("reduce"), cfg)
    g_tilde = np.asarray(gram(tilde), dtype=float) if tilde else np.eye(d)
    try:
        r_factor = np.linalg.cholesky(g_tilde + 1e-12 * np.eye(d)).T
    except np.linalg.LinAlgError:
        _, r_factor = np.linalg.qr(np.asarray(tilde, dtype=float))
    r_inv = np.linalg.inv(r_factor)

    # -- Warm start: exact l2 on the sampled system. -------------------------
    g_sum = [[Fraction(0)] * d for _ in range(d)]
    y_sum = [Fraction(0)] * d
    for sid in range(1, instance.s + 1):
        rows = sa_views[sid - 1]
        g_local = gram(rows) if rows else [[0] * d for _ in range(d)]
        y_local = mat_vec(transpose(rows), sb_views[sid - 1]) if rows else [0] * d
        net.to_coordinator(sid, "gram", [list(r) for r in g_local])
        net.to_coordinator(sid, "atb", list(y_local))
        for i in range(d):
            y_sum[i] += y_local[i]
            for j in range(d):
                g_sum[i][j] += g_local[i][j]
    x0_exact = _solve_normal(g_sum, y_sum)
    x0 = np.array([float(v) for v in x0_exact])
    net.to_all_servers("warm-start", [float(v) for v in x0])
    net.to_all_servers("gram-total", [[int(v) for v in row] for row in g_sum])

    sa_float = [np.asarray(v, dtype=float) if v else np.zeros((0, d)) for v in sa_views]
    sb_float = [np.asarray(v, dtype=float) if v else np.zeros(0) for v in sb_views]

    def sampled_l1(xv: np.ndarray) -> float:
        total = 0.0
        for sa, sb in zip(sa_float, sb_float):
            if len(sa):
                total += float(np.abs(sa @ xv - sb).sum())
        return total

    # -- Constant-factor presolve for the target scale. -----------------------
    presolve_rows: list[tuple] = []
    m_pres = math.ceil(cfg.sampling_c * d * math.log2(d + 1))
    for sid in range(1, instance.s + 1):
        view = sampled_views[sid - 1]
        if not view:
            continue
        sk = _local_l1_sketch(view, m_pres, 0.9, stream.split("presolve", sid))
        net.to_coordinator(sid, "presolve-sketch", [list(r) for r in sk])
        presolve_rows.extend(sk)
    xp, _ = l1_minimize_exact(
        [r[:-1] for r in presolve_rows],
        [r[-1] for r in presolve_rows],
        guard=cfg.l1_oracle_guard,
    )
    opt_est = sampled_l1(np.array([float(v) for v in xp]))
    for sid in range(1, instance.s + 1):
        net.to_coordinator(sid, "presolve-value", float(opt_est))

    warm_val = sampled_l1(x0)
    if warm_val == 0.0 or opt_est == 0.0:
        value = float(_l1_value_round(instance, net, [Fraction(v) for v in x0_exact]))
        return ProtocolOutcome(
            "SOLVED",
            x=tuple(float(v) for v in x0),
            value=value,
            extra={"sampled_value": warm_val, "warm_start": True, "sampled_views": sampled_views},
        )

    delta = eps * opt_est
    theta = (d / max(n_sampled, d)) * opt_est * opt_est
    z0 = r_factor @ x0
    z = z0.copy()
    w_mat = r_inv.T @ np.asarray([[float(v) for v in row] for row in g_sum]) @ r_inv
    top_eig = float(np.linalg.eigvalsh(w_mat)[-1])

    lam_final = max(2.0 * delta / max(n_sampled, 1), 1e-12)
    lam_start = lam_final * (2.0 ** (cfg.agd_stages - 1))
    total_iters = math.ceil(cfg.agd_c2 * d / eps)
    per_stage = max(1, math.ceil(total_iters / cfg.agd_stages))

    def smoothed_value(z_vec, lam, sigma):
        """Total smoothed objective plus the per-server data pieces."""
        u = r_inv @ z_vec
        pieces = []
        for sa, sb in zip(sa_float, sb_float):
            if len(sa):
                res = sa @ u - sb
                pieces.append(float(np.sum(np.where(
                    np.abs(res) <= lam, res * res / (2.0 * lam), np.abs(res) - lam / 2.0
                ))))
            else:
                pieces.append(0.0)
        diff = z_vec - z0
        return sum(pieces) + 0.5 * sigma * float(diff @ diff), pieces

    best_z = z.copy()
    best_sampled = warm_val
    stage_log = []
    for stage in range(cfg.agd_stages):
        lam = lam_start / (2.0 ** stage)
        sigma = delta / max(theta, 1e-12) / (2.0 ** stage)
        beta = top_eig / lam + sigma
        step = 1.0 / beta
        y = z.copy()
        theta_k = 1.0
        f_start, _ = smoothed_value(z, lam, sigma)
        f_cur = f_start
        for _ in range(per_stage):
            net.mark_round()
            grad, per_server, aggregates = gradient_exchange(sa_float, sb_float, r_inv, y, lam)
            for sid in range(1, instance.s + 1):
                local_sign, local_cov, local_cross = per_server[sid - 1]
                net.to_coordinator(sid, "grad-sign", [int(round(v)) for v in local_sign])
                net.to_coordinator(sid, "grad-cov", [[int(round(v)) for v in row] for row in local_cov])
                net.to_coordinator(sid, "grad-cross", [int(round(v)) for v in local_cross])
            # Servers rebuild the gradient from the exact integer aggregates;
            # R^-1 never travels.
            agg_sign, agg_cov, agg_cross = aggregates
            net.to_all_servers("grad-sign-agg", [int(round(v)) for v in agg_sign])
            net.to_all_servers("grad-cov-agg", [[int(round(v)) for v in row] for row in agg_cov])
            net.to_all_servers("grad-cross-agg", [int(round(v)) for v in agg_cross])
            grad_full = grad + sigma * (y - z0)
            z_new = y - step * grad_full
            theta_new = (1.0 + math.sqrt(1.0 + 4.0 * theta_k * theta_k)) / 2.0
            y = z_new + ((theta_k - 1.0) / theta_new) * (z_new - z)
            f_new, pieces = smoothed_value(z_new, lam, sigma)
            for sid in range(1, instance.s + 1):
                net.to_coordinator(sid, "objective-part", pieces[sid - 1])
            net.to_all_servers("objective-total", f_new)
            if f_new > f_cur:
                # Monotone safeguard: drop momentum, keep the best iterate.
                y = z.copy()
                theta_new = 1.0
            else:
                z = z_new
                f_cur = f_new
            theta_k = theta_new
            x_cand = r_inv @ z
            cand_val = sampled_l1(x_cand)
            if cand_val < best_sampled:
                best_sampled = cand_val
                best_z = z.copy()
        stage_log.append((f_start, f_cur, lam, sigma))

    x_final = r_inv @ best_z
    value = float(
        _l1_value_round(instance, net, [Fraction(float(v)) for v in x_final])
    )
    return ProtocolOutcome(
        "SOLVED",
        x=tuple(float(v) for v in x_final),
        value=value,
        iterations=total_iters,
        extra={
            "sampled_value": best_sampled,
            "stages": stage_log,
            "sampled_views": sampled_views,
        },
    )


# ---------------------------------------------------------------------------
# l-infinity and lp regression via linear programming
# ---------------------------------------------------------------------------


def linf_lp_instance(instance: Instance) -> Instance:
    """The 2n-constraint, (d+1)-variable LP whose optimum is the minimax fit."""
    d = instance.d
    rows = []
    rhs = []
    part = []
    for i, (row, b) in enumerate(zip(instance.A, instance.b)):
        owner = instance.partition[i]
        rows.append(tuple(row) + (-1,))
        rhs.append(b)
        part.append(owner)
        rows.append(tuple(-v for v in row) + (-1,))
        rhs.append(-b)
        part.append(owner)
    c = tuple([0] * d + [-1])  # maximize -v
    return Instance(
        "linf-lp", len(rows), d + 1, instance.L, instance.s,
        tuple(rows), tuple(rhs), c, tuple(part),
    )


def linf_regression(
    instance: Instance, net: Network, stream: Stream, cfg: Constants
) -> ProtocolOutcome:
    from .lpsolve import clarkson

    lp = linf_lp_instance(instance)
    out = clarkson(lp, net, stream, cfg)
    if out.status != "SOLVED":
        return out
    x = out.x[: instance.d]
    return ProtocolOutcome(
        "SOLVED", x=x, value=out.x[instance.d], iterations=out.iterations,
        extra={"lp_iterations": out.iterations},
    )


def inv_exp_moment(p: float) -> float:
    """E[E^(-1/p)] for an exponential E: Gamma(1 - 1/p)."""
    return math.gamma(1.0 - 1.0 / p)


def lp_embed_reduce(
    instance: Instance,
    p: float,
    eps: float,
    stream: Stream,
    cfg: Constants,
    R: int | None = None,
    force_identity: bool = False,
):
    """Reduce lp regression to one LP through exponential max-stability.

    Each server draws the diagonal scalings for its own rows; entries are
    rounded onto a 2^-q grid and the grid is cleared, so the emitted LP has
    integer data.  Variables are (x, v_1 .. v_R); objective minimizes sum v.
    """
    if p <= 2:
        raise ValueError("embedding needs p > 2")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d = instance.d
    if R is None:
        R = math.ceil(cfg.sampling_c * d * math.log2((d + 2) / eps) / (eps * eps))
    q = math.ceil(3 * math.log2(max(d / eps, 2.0)))
    grid = Fraction(1, 1 << q)

    rows = []
    rhs = []
    part = []
    for r_blk in range(R):
        for j in range(instance.n):
            owner = instance.partition[j]
            if force_identity:
                scale_int = 1 << q
            else:
                draw = stream.split("embed", r_blk, j)
                e = max(draw.exponential(), 1e-300)
                g = trunc_to_grid(Fraction(e ** (-1.0 / p)), grid)
                scale_int = int(g / grid)
            if scale_int == 0:
                scale_int = 1
            arow = [scale_int * v for v in instance.A[j]]
            vcoef = [0] * R
            vcoef[r_blk] = -(1 << q)
            rows.append(tuple(arow) + tuple(vcoef))
            rhs.append(scale_int * instance.b[j])
            part.append(owner)
            rows.append(tuple(-v for v in arow) + tuple(vcoef))
            rhs.append(-scale_int * instance.b[j])
            part.append(owner)
    c = tuple([0] * d + [-1] * R)
    L_eff = max(abs(v).bit_length() for row in rows for v in row)
    lp = Instance(
        "lp-embed", len(rows), d + R, instance.L, instance.s,
        tuple(rows), tuple(rhs), c, tuple(part),
    )
    return lp, {"R": R, "q": q, "L_eff": L_eff}


def lp_regression(
    instance: Instance,
    net: Network,
    stream: Stream,
    cfg: Constants,
    p: float = 4.0,
    eps: float = 0.5,
) -> ProtocolOutcome:
    """Embed into a sum of l-infinity blocks, solve the LP, report ||Ax-b||_p.

    The assembled LP has d + R variables; beyond the exact solver's small
    dimension range the coordinator solves it in floats (HiGHS).
    """
    lp, info = lp_embed_reduce(instance, p, eps, stream.split("embed"), cfg)
    for sid in range(1, instance.s + 1):
        rows = [list(lp.A[i]) + [lp.b[i]] for i in lp.rows_of(sid)]
        if rows:
            net.to_coordinator(sid, "constraints", rows)

    dim = lp.d
    if dim <= 6:
        status, x_full, _ = solve_lp(instance_halfspaces(lp), [Fraction(v) for v in lp.c], stream.split("solve"))
        if status != "SOLVED":
            return ProtocolOutcome(status)
        x = [float(v) for v in x_full[: instance.d]]
    else:
        from scipy.optimize import linprog

        a_ub = np.array([[float(v) for v in row] for row in lp.A])
        b_ub = np.array([float(v) for v in lp.b])
        cost = np.array([0.0] * instance.d + [1.0] * info["R"])
        res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=(None, None), method="highs")
        if not res.success:
            return ProtocolOutcome("EMPTY", extra={"solver": res.message})
        x = [float(v) for v in res.x[: instance.d]]

    net.to_all_servers("solution", [float(v) for v in x])
    total = 0.0
    for sid in range(1, instance.s + 1):
        local = sum(
            abs(float(sum(a * v for a, v in zip(instance.A[i], x))) - float(instance.b[i])) ** p
            for i in instance.rows_of(sid)
        )
        net.to_coordinator(sid, "residual-lp", float(local))
        total += local
    return ProtocolOutcome(
        "SOLVED", x=tuple(x), value=total ** (1.0 / p), extra=info
    )
