"""Distributed linear programming.

All LPs are `max c.x subject to A x <= b` over exact rationals.  Two local
exact engines back the protocols:

* ``lp_exact_oracle``  - vertex enumeration over d-subsets of constraints,
  the reference solver used by tests (size-guarded);
* ``solve_lp``         - exact incremental solver (randomized insertion with
  recursion on violated constraints), fast for d <= 6, used as the
  subproblem solver inside the protocols.

Both bound the feasible region with the box |x_j| <= d! 2^(dL) + 1, which is
valid for every vertex of an L-bit LP by the Cramer bound, so INFEASIBLE /
UNBOUNDED are decided exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .commsim import Network, ProtocolOutcome
from .config import DEFAULTS, Constants
from .exactnum import INFEASIBLE, dot, rank_and_solve
from .instances import Instance
from .rng import Stream


class SizeGuardError(RuntimeError):
    """Raised when an exact computation would exceed its configured budget."""


Halfspace = tuple[tuple, Fraction]  # (coefficients a, rhs beta) meaning a.x <= beta


def cramer_bound(d: int, L: int) -> int:
    """Every vertex coordinate of an L-bit LP is a ratio of integers <= d! 2^(dL)."""
    return math.factorial(d) * (1 << (d * L))


def _int_rows(rows: list[Halfspace]) -> list[Halfspace]:
    """Scale each constraint to integer coefficients (direction-preserving)."""
    out = []
    for coeffs, beta in rows:
        denom = 1
        for v in list(coeffs) + [beta]:
            denom = denom * Fraction(v).denominator // math.gcd(denom, Fraction(v).denominator)
        out.append((tuple(Fraction(v) * denom for v in coeffs), Fraction(beta) * denom))
    return out


def effective_bitlength(rows: list[Halfspace], c=None) -> int:
    longest = 1
    for coeffs, beta in rows:
        for v in list(coeffs) + [beta]:
            longest = max(longest, abs(v.numerator).bit_length())
    if c is not None:
        for v in c:
            longest = max(longest, abs(int(v)).bit_length())
    return longest


def instance_halfspaces(inst: Instance) -> list[Halfspace]:
    return [(tuple(Fraction(v) for v in row), Fraction(b)) for row, b in zip(inst.A, inst.b)]


def box_halfspaces(d: int, bound) -> list[Halfspace]:
    rows = []
    for j in range(d):
        e = [Fraction(0)] * d
        e[j] = Fraction(1)
        rows.append((tuple(e), Fraction(bound)))
        e = [Fraction(0)] * d
        e[j] = Fraction(-1)
        rows.append((tuple(e), Fraction(bound)))
    return rows


# ---------------------------------------------------------------------------
# Reference solver: vertex enumeration
# ---------------------------------------------------------------------------


def _enumerate_vertices(rows: list[Halfspace], c, guard: int):
    """Best feasible vertex of the (boxed) system, or None when infeasible."""
    d = len(c)
    n = len(rows)
    if math.comb(n, d) > guard:
        raise SizeGuardError(f"C({n},{d}) exceeds the enumeration guard {guard}")
    best = None  # (value, vertex)
    for subset in combinations(range(n), d):
        coeffs = [rows[i][0] for i in subset]
        rhs = [rows[i][1] for i in subset]
        rank, _, x = rank_and_solve(coeffs, rhs)
        if rank < d or x == INFEASIBLE:
            continue
        if any(dot(a, x) > beta for a, beta in rows):
            continue
        value = dot(c, x)
        if best is None or value > best[0] or (value == best[0] and x < best[1]):
            best = (value, x)
    return best


def solve_lp_enumerate(
    rows: list[Halfspace], c, L: int | None = None, cfg: Constants = DEFAULTS
):
    """Exact LP solve by basis enumeration.

    Returns (status, x, value) with status SOLVED / INFEASIBLE / UNBOUNDED.
    Ties are broken toward the lexicographically smallest optimal vertex.
    """
    rows = _int_rows(rows)
    d = len(c)
    if L is None:
        L = effective_bitlength(rows, c)
    bound = cramer_bound(d, L) + 1
    boxed = rows + box_halfspaces(d, bound)
    best = _enumerate_vertices(boxed, c, cfg.oracle_guard)
    if best is None:
        return INFEASIBLE, None, None
    value, x = best
    if any(abs(v) == bound for v in x):
        # Optimum touches the guard box: decide boundedness by recession check.
        rec_rows = [(a, Fraction(0)) for a, _ in rows] + box_halfspaces(d, 1)
        rec = _enumerate_vertices(rec_rows, c, cfg.oracle_guard)
        if rec is not None and rec[0] > 0:
            return "UNBOUNDED", None, None
    return "SOLVED", tuple(x), value


def lp_exact_oracle(inst: Instance, cfg: Constants = DEFAULTS):
    """Reference oracle on an LP instance; see solve_lp_enumerate."""
    c = inst.c if inst.c is not None else tuple([0] * inst.d)
    return solve_lp_enumerate(instance_halfspaces(inst), [Fraction(v) for v in c], inst.L, cfg)


# ---------------------------------------------------------------------------
# Exact incremental solver (local computation)
# ---------------------------------------------------------------------------


def _solve_1d(cons: list[Halfspace], c, bound: Fraction):
    lo, hi = -bound, bound
    for (a,), beta in cons:
        if a > 0:
            hi = min(hi, beta / a)
        elif a < 0:
            lo = max(lo, beta / a)
        elif beta < 0:
            return None
    if lo > hi:
        return None
    if c[0] > 0:
        return [hi]
    return [lo]


def _solve_rec(cons: list[Halfspace], c, bound: Fraction):
    d = len(c)
    if d == 1:
        return _solve_1d(cons, c, bound)
    x = [bound if cj > 0 else -bound for cj in c]
    for i, (a, beta) in enumerate(cons):
        if dot(a, x) > beta:
            x = _solve_eq(cons[:i], c, bound, a, beta)
            if x is None:
                return None
    return x


def _solve_eq(cons: list[Halfspace], c, bound: Fraction, a, beta):
    """Optimum of the prefix subject to a.x = beta, via variable elimination."""
    d = len(c)
    k = next((j for j, v in enumerate(a) if v), None)
    if k is None:
        return None  # 0 = beta with beta != 0 is unreachable here; beta < 0 means empty
    ak = a[k]
    rest = [j for j in range(d) if j != k]

    def reduce_row(g, h):
        gk = g[k]
        return (
            tuple(g[j] - gk * a[j] / ak for j in rest),
            h - gk * beta / ak,
        )

    new_cons: list[Halfspace] = []
    # The eliminated variable's box turns into two explicit rows.
    ek = [Fraction(0)] * d
    ek[k] = Fraction(1)
    new_cons.append(reduce_row(tuple(ek), bound))
    ek[k] = Fraction(-1)
    new_cons.append(reduce_row(tuple(ek), bound))
    for g, h in cons:
        new_cons.append(reduce_row(g, h))

    c_red = [c[j] - c[k] * a[j] / ak for j in rest]
    y = _solve_rec(new_cons, c_red, bound)
    if y is None:
        return None
    x = [Fraction(0)] * d
    for pos, j in enumerate(rest):
        x[j] = y[pos]
    x[k] = (beta - sum(a[j] * x[j] for j in rest)) / ak
    return x


def solve_lp(rows: list[Halfspace], c, stream: Stream | None = None, L: int | None = None):
    """Exact incremental LP solve (value-correct for any insertion order).

    Returns (status, x, value); the box bound makes the solver total, and an
    optimum pinned to the box triggers the same recession test as the
    enumeration oracle.
    """
    rows = _int_rows(rows)
    d = len(c)
    if L is None:
        L = effective_bitlength(rows, c)
    bound = Fraction(cramer_bound(d, L) + 1)
    order = list(range(len(rows)))
    if stream is not None:
        stream.shuffle(order)
    cons = [rows[i] for i in order]
    c = [Fraction(v) for v in c]
    x = _solve_rec(cons, c, bound)
    if x is None:
        return INFEASIBLE, None, None
    if any(abs(v) == bound for v in x):
        rec_rows = [(a, Fraction(0)) for a, _ in rows]
        rec = _solve_rec(rec_rows, c, Fraction(1))
        if rec is not None and dot(c, rec) > 0:
            return "UNBOUNDED", None, None
    return "SOLVED", tuple(x), dot(c, x)


# ---------------------------------------------------------------------------
# Clarkson's algorithm
# ---------------------------------------------------------------------------


def _distribute_objective(inst: Instance, net: Network, cfg: Constants):
    if inst.c is not None and cfg.charge_objective:
        net.to_all_servers("objective", list(inst.c))


def clarkson(
    instance: Instance,
    net: Network,
    stream: Stream,
    cfg: Constants,
    rows_override: list[list[Halfspace]] | None = None,
    solution_encoder=None,
) -> ProtocolOutcome:
    """Sample 9d^2 constraints, solve, double the weight of violated ones.

    `rows_override` lets callers (the smoothed variant, regression paths)
    substitute per-server constraint lists; `solution_encoder` maps the exact
    solution to the payload actually shipped to servers plus the point that
    servers test violations against.
    """
    d = instance.d
    c = [Fraction(v) for v in (instance.c if instance.c is not None else [0] * d)]
    server_rows = (
        rows_override
        if rows_override is not None
        else [
            [instance_halfspaces(instance)[i] for i in instance.rows_of(sid)]
            for sid in range(1, instance.s + 1)
        ]
    )
    L = max(effective_bitlength([r for rs in server_rows for r in rs], c), 1)
    n_total = sum(len(rs) for rs in server_rows)
    if n_total == 0:
        return ProtocolOutcome("SOLVED", x=tuple([Fraction(0)] * d), value=Fraction(0))

    _distribute_objective(instance, net, cfg)
    # Multiplicities: one weight per (server, local row).
    mult = [[1] * len(rs) for rs in server_rows]
    sizes = [len(rs) for rs in server_rows]
    for sid in range(1, instance.s + 1):
        net.to_coordinator(sid, "h-size", sizes[sid - 1])

    sample_target = 9 * d * d
    cap = math.ceil(cfg.clarkson_cap * d * math.log2(n_total + 2))
    take_all = n_total <= sample_target
    history = []

    for iteration in range(1, cap + 1):
        net.mark_round()
        # -- sample R ------------------------------------------------------
        sampled: list[Halfspace] = []
        drawn: list[dict[int, int]] = [dict() for _ in range(instance.s)]
        if take_all:
            for sid in range(1, instance.s + 1):
                rows = server_rows[sid - 1]
                if rows:
                    net.to_coordinator(sid, "constraints", [list(a) + [b] for a, b in rows])
                    sampled.extend(rows)
                    drawn[sid - 1] = {i: 1 for i in range(len(rows))}
        else:
            weights = [float(sum(m)) for m in mult]
            counts = stream.split("counts", iteration).multinomial(sample_target, weights)
            for sid in range(1, instance.s + 1):
                net.to_server(sid, "sample-count", counts[sid - 1])
                if counts[sid - 1] == 0:
                    continue
                local = stream.split("draw", iteration, sid)
                cum = []
                acc = 0.0
                for m in mult[sid - 1]:
                    acc += m
                    cum.append(acc)
                for _ in range(counts[sid - 1]):
                    i = local.choice_weighted(cum)
                    drawn[sid - 1][i] = drawn[sid - 1].get(i, 0) + 1
                chosen = sorted(drawn[sid - 1])
                rows = [server_rows[sid - 1][i] for i in chosen]
                net.to_coordinator(sid, "constraints", [list(a) + [b] for a, b in rows])
                sampled.extend(rows)

        # -- solve the subproblem -------------------------------------------
        status, x_r, _ = solve_lp(sampled, c, stream.split("solve", iteration), L)
        if status == INFEASIBLE:
            net.to_all_servers("verdict", None, bits=1)
            return ProtocolOutcome(INFEASIBLE, iterations=iteration)
        if status == "UNBOUNDED":
            net.to_all_servers("verdict", None, bits=1)
            return ProtocolOutcome("UNBOUNDED", iterations=iteration)

        if solution_encoder is None:
            payload, test_point = list(x_r), x_r
        else:
            payload, test_point = solution_encoder(x_r)
        net.to_all_servers("solution", payload)

        # -- violation counts over H \ R: rows that entered the sample are
        # excluded, so grid rounding of the solution cannot re-flag the
        # sample's own binding constraints.
        violated_idx: list[list[int]] = []
        v_total = 0
        h_total = 0
        for sid in range(1, instance.s + 1):
            rows = server_rows[sid - 1]
            vi = [
                i
                for i, (a, beta) in enumerate(rows)
                if drawn[sid - 1].get(i, 0) == 0 and dot(a, test_point) > beta
            ]
            v_count = sum(mult[sid - 1][i] for i in vi)
            net.to_coordinator(sid, "violation-count", v_count)
            violated_idx.append(vi)
            v_total += v_count
            h_total += sum(mult[sid - 1])
        net.to_all_servers("v-total", v_total)

        updated = False
        if v_total == 0:
            history.append((v_total, h_total, updated))
            return ProtocolOutcome(
                "SOLVED",
                x=tuple(x_r),
                value=dot(c, x_r),
                iterations=iteration,
                extra={"history": history, "n": n_total},
            )
        if v_total <= Fraction(2 * h_total, 9 * d - 1):
            # H_i <- H_i union V_i: violated unsampled constraints double.
            updated = True
            for sid in range(1, instance.s + 1):
                for i in violated_idx[sid - 1]:
                    mult[sid - 1][i] *= 2
        history.append((v_total, h_total, updated))

    return ProtocolOutcome("PRESUMED_INFEASIBLE", iterations=cap, extra={"history": history})


# ---------------------------------------------------------------------------
# Smoothed analysis
# ---------------------------------------------------------------------------


def trunc_to_grid(value: Fraction, grid: Fraction) -> Fraction:
    """Round to the nearest integer multiple of the grid, ties toward +inf."""
    k = (value / grid + Fraction(1, 2)).__floor__()
    return k * grid


def sample_discrete_gaussian(sigma: float, t: int, stream: Stream) -> Fraction:
    """trunc_t of an N(0, sigma^2) draw: nearest multiple of 2^-t."""
    if not 0 < sigma <= 1:
        raise ValueError("sigma must be in (0, 1]")
    if t < 1:
        raise ValueError("t must be at least 1")
    g = sigma * stream.gauss()
    return trunc_to_grid(Fraction(g), Fraction(1, 1 << t))


@dataclass(frozen=True)
class PerturbedLP:
    base: Instance
    sigma: float
    t: int
    noise: tuple  # rows of Fractions, multiples of 2^-t

    @property
    def rows(self) -> list[Halfspace]:
        out = []
        for row, g_row, beta in zip(self.base.A, self.noise, self.base.b):
            out.append((tuple(Fraction(v) + g for v, g in zip(row, g_row)), Fraction(beta)))
        return out


def perturb_lp_stream(base: Instance, sigma: float, t: int, stream: Stream) -> PerturbedLP:
    """Add i.i.d. truncated Gaussian noise to every matrix entry."""
    min_t = math.ceil(math.log2(base.n * base.d / sigma) + base.L)
    if t < min_t:
        raise ValueError(f"t={t} below the guard {min_t} for this instance")
    noise = tuple(
        tuple(sample_discrete_gaussian(sigma, t, stream.split(i, j)) for j in range(base.d))
        for i in range(base.n)
    )
    return PerturbedLP(base, sigma, t, noise)


def perturb_lp(base: Instance, sigma: float, t: int, seed: int) -> PerturbedLP:
    return perturb_lp_stream(base, sigma, t, Stream(seed).split("smoothed-noise"))


def smoothed_delta(n: int, d: int, L: int, sigma: float, cfg: Constants) -> Fraction:
    bits = 2 * L + math.ceil(math.log2(n * d)) + math.ceil(math.log2(1 / sigma)) + cfg.smoothed_delta_slack
    return Fraction(1, 1 << bits)


def smoothed_clarkson(
    instance: Instance,
    net: Network,
    stream: Stream,
    cfg: Constants,
    sigma: float = 0.25,
    t: int = 60,
) -> ProtocolOutcome:
    """Clarkson on a noise-perturbed LP, shipping grid-rounded solutions.

    Each server perturbs its own rows from the shared noise stream, so the
    perturbation itself costs no communication.  Violation tests run against
    the delta-rounded broadcast point; the final answer is the unrounded
    optimum of the terminating iteration.
    """
    plp = perturb_lp_stream(instance, sigma, t, stream.split("smoothed-noise"))
    return run_smoothed_clarkson(plp, net, stream, cfg)


def run_smoothed_clarkson(
    plp: PerturbedLP, net: Network, stream: Stream, cfg: Constants
) -> ProtocolOutcome:
    base = plp.base
    delta = smoothed_delta(base.n, base.d, base.L, plp.sigma, cfg)
    rows = plp.rows
    per_server = [
        [rows[i] for i in base.rows_of(sid)] for sid in range(1, base.s + 1)
    ]

    def encoder(x_r):
        rounded = [trunc_to_grid(v, delta) for v in x_r]
        payload = [int(v / delta) for v in rounded]  # integers on the delta grid
        return payload, rounded

    outcome = clarkson(base, net, stream, cfg, rows_override=per_server, solution_encoder=encoder)
    outcome.extra["sigma"] = plp.sigma
    outcome.extra["t"] = plp.t
    outcome.extra["delta"] = delta
    outcome.extra["perturbed"] = plp
    return outcome


# ---------------------------------------------------------------------------
# Center of gravity
# ---------------------------------------------------------------------------


def center_of_gravity(
    instance: Instance,
    net: Network,
    stream: Stream,
    cfg: Constants,
    eps_round: float | None = None,
    optimize: bool | None = None,
    rounds_cap: int | None = None,
) -> ProtocolOutcome:
    """Cutting-plane feasibility / optimization with rounded cut directions.

    Every server replays the same hit-and-run chain from the shared stream,
    so centroid and covariance estimates are replicated for free; only the
    rounded direction of a violated constraint is ever broadcast.
    """
    import numpy as np

    d = instance.d
    if eps_round is None:
        eps_round = 0.09 / d ** 1.5
    if eps_round >= 0.1 / d ** 1.5:
        raise ValueError("eps_round must be below 0.1 / d^1.5")
    if optimize is None:
        optimize = instance.c is not None and any(instance.c)

    L = max(instance.L, 1)
    box = float(min(cramer_bound(d, L) + 1, 10.0 ** 12))
    if rounds_cap is None:
        rounds_cap = math.ceil(cfg.cog_c3 * d * d * L * math.log2(d + 2))
    n_samples = cfg.cog_samples_per_d * d
    burnin = cfg.cog_burnin_per_d2 * d * d

    _distribute_objective(instance, net, cfg)

    # P as exact halfspaces; the float mirror drives the sampler.
    polytope: list[Halfspace] = box_halfspaces(d, Fraction(box))
    rows_by_server = [
        [(np.array([float(v) for v in instance.A[i]]), float(instance.b[i])) for i in instance.rows_of(sid)]
        for sid in range(1, instance.s + 1)
    ]
    c_vec = np.array([float(v) for v in instance.c]) if optimize else None

    z = np.zeros(d)
    best_z = None
    best_val = -math.inf
    survival: list[float] = []
    chain = z.copy()

    for rnd in range(1, rounds_cap + 1):
        net.mark_round()
        normals = np.array([[float(v) for v in a] for a, _ in polytope])
        offsets = np.array([float(b) for _, b in polytope])
        sampler = stream.split("hit-and-run", rnd)
        samples = np.empty((n_samples, d))
        x = chain.copy()
        total_steps = burnin + n_samples
        for step in range(total_steps):
            u = np.array([sampler.gauss() for _ in range(d)])
            norm = float(np.linalg.norm(u))
            if norm == 0.0:
                continue
            u /= norm
            au = normals @ u
            ax = normals @ x
            t_hi, t_lo = math.inf, -math.inf
            for m in range(len(polytope)):
                slack = offsets[m] - ax[m]
                if au[m] > 1e-300:
                    t_hi = min(t_hi, slack / au[m])
                elif au[m] < -1e-300:
                    t_lo = max(t_lo, slack / au[m])
            if not (t_lo <= t_hi) or math.isinf(t_hi) or math.isinf(t_lo):
                continue
            x = x + (t_lo + (t_hi - t_lo) * sampler.random()) * u
            if step >= burnin:
                samples[step - burnin] = x
        chain = x
        z = samples.mean(axis=0)
        cov = np.cov(samples, rowvar=False).reshape(d, d)
        cov += np.eye(d) * (1e-12 * (1.0 + float(np.trace(cov))))

        # First violated constraint wins the round.
        violated = None
        for sid in range(1, instance.s + 1):
            for a, beta in rows_by_server[sid - 1]:
                if float(a @ z) > beta:
                    violated = (sid, a, beta)
                    break
            if violated:
                break

        if violated is None:
            for sid in range(1, instance.s + 1):
                net.verdict(sid, "point-ok")
            if not optimize:
                return ProtocolOutcome(
                    "FEASIBLE",
                    x=tuple(float(v) for v in z),
                    iterations=rnd,
                    extra={"cut_survival": survival, "polytope": polytope},
                )
            val = float(c_vec @ z)
            if val > best_val:
                best_val, best_z = val, z.copy()
            cut_a, cut_b = -c_vec, -val  # objective cut: c.x >= val
        else:
            sid, a, beta = violated
            evals, evecs = np.linalg.eigh(cov)
            evals = np.clip(evals, 1e-18, None)
            b_half = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
            u = b_half.T @ a
            u = u / np.linalg.norm(u)
            grid = np.floor(u / eps_round).astype(np.int64)
            net.server_broadcast(sid, "cut-direction", [int(v) for v in grid])
            a_tilde = grid * eps_round
            inv_half = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
            w = inv_half @ a_tilde
            # a_tilde is a rounded unit vector in the isotropic frame, so the
            # shifted cut sits at isotropic distance eps * d^1.5 <= 0.1 from
            # the centroid; a constant volume fraction falls off every round.
            shift = eps_round * d ** 1.5
            cut_a, cut_b = w, float(w @ z) + shift

        inside = samples @ cut_a <= cut_b
        survival.append(float(inside.mean()))
        polytope.append(
            (tuple(Fraction(float(v)) for v in cut_a), Fraction(float(cut_b)))
        )
        if not (float(cut_a @ chain) <= cut_b):
            chain = z.copy()

    if optimize and best_z is not None:
        return ProtocolOutcome(
            "SOLVED",
            x=tuple(float(v) for v in best_z),
            value=best_val,
            iterations=rounds_cap,
            extra={"cut_survival": survival, "polytope": polytope},
        )
    return ProtocolOutcome(
        "EMPTY", iterations=rounds_cap, extra={"cut_survival": survival, "polytope": polytope}
    )


# ---------------------------------------------------------------------------
# Seidel's algorithm, distributed
# ---------------------------------------------------------------------------


def seidel(instance: Instance, net: Network, stream: Stream, cfg: Constants) -> ProtocolOutcome:
    """Incremental insertion in a fixed server-major order.

    Constraint order is shuffled once per server and never re-randomized in
    recursive calls.  A violated constraint is broadcast unless server 1 owns
    it and the whole current equality stack is already known to server 1, in
    which case server 1 re-solves privately; recomputed optima are always
    broadcast.
    """
    d = instance.d
    if d > 6:
        raise SizeGuardError("seidel recursion is limited to d <= 6")
    c = [Fraction(v) for v in (instance.c if instance.c is not None else [0] * d)]
    all_rows = instance_halfspaces(instance)
    L = max(effective_bitlength(all_rows, c), 1)
    bound = Fraction(cramer_bound(d, L) + 1)

    _distribute_objective(instance, net, cfg)

    order: list[int] = []
    for sid in range(1, instance.s + 1):
        local = instance.rows_of(sid)
        stream.split("order", sid).shuffle(local)
        order.extend(local)
    cons = [all_rows[i] for i in order]
    owner = [instance.partition[i] for i in order]

    broadcast_rows: set[int] = set()
    broadcasts = {"constraint": 0, "solution": 0}

    def base_optimum(eqs: list[Halfspace]):
        """Box optimum under the equality stack (local exact computation)."""
        if not eqs:
            return [bound if cj > 0 else -bound for cj in c]
        rows: list[Halfspace] = []
        for a, beta in eqs:
            rows.append((a, beta))
            rows.append((tuple(-v for v in a), -beta))
        return _solve_rec(rows, c, bound)

    def rec(prefix: int, eqs: list[Halfspace]) -> list[Fraction] | None:
        x = base_optimum(eqs)
        if x is None:
            return None
        for idx in range(prefix):
            a, beta = cons[idx]
            if dot(a, x) <= beta:
                continue
            o = owner[idx]
            # Server 1 never broadcasts its own violated constraint: every
            # other stacked equality has been broadcast already, so server 1
            # can recompute privately and publish only the new optimum.
            if o != 1 and idx not in broadcast_rows:
                net.server_broadcast(o, "constraint", list(a) + [beta])
                broadcast_rows.add(idx)
                broadcasts["constraint"] += 1
            x = rec(idx, eqs + [(a, beta)])
            if x is None:
                return None
            net.server_broadcast(o, "solution", list(x))
            broadcasts["solution"] += 1
        return x

    x = rec(len(cons), [])
    for sid in range(1, instance.s + 1):
        net.verdict(sid, "segment-done")
    if x is None:
        return ProtocolOutcome(INFEASIBLE, extra={"broadcasts": dict(broadcasts)})
    return ProtocolOutcome(
        "SOLVED",
        x=tuple(x),
        value=dot(c, x),
        extra={"broadcasts": dict(broadcasts)},
    )


# ---------------------------------------------------------------------------
# Oracle as a protocol
# ---------------------------------------------------------------------------


def lp_oracle_entry(instance: Instance, net: Network, stream: Stream, cfg: Constants) -> ProtocolOutcome:
    """Ship everything to the coordinator and run the enumeration oracle."""
    _distribute_objective(instance, net, cfg)
    for sid in range(1, instance.s + 1):
        rows = instance.server_aug_rows(sid)
        if rows:
            net.to_coordinator(sid, "constraints", [list(r) for r in rows])
    status, x, value = lp_exact_oracle(instance, cfg)
    return ProtocolOutcome(status, x=x, value=value)
