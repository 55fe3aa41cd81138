"""Row sampling: leverage-score halving, Lewis-weight iteration, samplers.

The recursion keeps exact rows in the messages (integer rescaling only) but
scores are computed in double precision; the protocols only ever need
constant-factor accuracy there, and the exact rational scorer stays available
as the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .commsim import Network, ProtocolOutcome
from .config import Constants
from .exactnum import leverage_scores
from .instances import Instance
from .rng import Stream

MAX_RESCALE = 1 << 40


def leverage_scores_float(a_rows, b_rows, rcond: float = 1e-10) -> np.ndarray:
    """Generalized leverage scores of the rows of A w.r.t. B, in doubles.

    Rows outside the row space of B get +inf, matching the exact scorer.
    """
    a = np.asarray(a_rows, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if len(b_rows) == 0:
        out = np.full(len(a), np.inf)
        out[np.all(a == 0.0, axis=1)] = 0.0
        return out
    b = np.asarray(b_rows, dtype=float)
    _, sing, vt = np.linalg.svd(b, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        out = np.full(len(a), np.inf)
        out[np.all(a == 0.0, axis=1)] = 0.0
        return out
    keep = sing > sing[0] * rcond * max(b.shape)
    v_r = vt[keep].T  # d x r rowspace basis
    sig = sing[keep]
    proj = a @ v_r
    norms = np.einsum("ij,ij->i", a, a)
    resid = norms - np.einsum("ij,ij->i", proj, proj)
    tau = np.einsum("ij,ij->i", proj / sig, proj / sig)
    escaped = resid > (1e-16 + 1e-12 * norms)
    tau[escaped] = np.inf
    tau[norms == 0.0] = 0.0
    return tau


# ---------------------------------------------------------------------------
# Sampling plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingPlan:
    """Per-row sampling values with power-of-two rescale factors."""

    values: tuple  # p_i, each an exact power of two in [2^-80, 1]
    norm: str  # "l2" | "l1"
    N: int

    def rescale(self, i: int) -> int:
        p = self.values[i]
        r = 1.0 / math.sqrt(p) if self.norm == "l2" else 1.0 / p
        return int(round(r))


def _pow2_round_up(p: float, norm: str) -> float:
    """Round the sampling value up so its rescale factor is a power of two."""
    if p >= 1.0:
        return 1.0
    r = 1.0 / math.sqrt(p) if norm == "l2" else 1.0 / p
    r2 = 2 ** math.floor(math.log2(r))  # rescale rounds down => p rounds up
    r2 = min(max(r2, 1), MAX_RESCALE)
    return 1.0 / (r2 * r2) if norm == "l2" else 1.0 / r2


def make_plan(scores, target: float, norm: str) -> SamplingPlan:
    """Sampling values proportional to the scores, capped at one row each."""
    finite = [1.0 if math.isinf(t) else max(float(t), 0.0) for t in scores]
    total = sum(finite)
    if total <= 0.0:
        raise ValueError("all sampling scores vanish")
    vals = []
    for t, f in zip(scores, finite):
        raw = 1.0 if math.isinf(t) else min(1.0, f * target / total)
        vals.append(_pow2_round_up(max(raw, 2 ** -80), norm))
    n = math.ceil(sum(vals))
    return SamplingPlan(tuple(vals), norm, n)


def build_sampler(plan: SamplingPlan, stream: Stream) -> list[tuple[int, int]]:
    """N independent (row index, integer rescale) draws, one nonzero per row of S."""
    if sum(plan.values) <= 0.0:
        raise ValueError("empty sampling plan")
    cum = []
    acc = 0.0
    for p in plan.values:
        acc += p
        cum.append(acc)
    return [(i, plan.rescale(i)) for i in (stream.choice_weighted(cum) for _ in range(plan.N))]


def apply_sampler(rows, sampler) -> list[tuple]:
    return [tuple(v * scale for v in rows[idx]) for idx, scale in sampler]


# ---------------------------------------------------------------------------
# Distributed leverage-score approximation (recursive halving)
# ---------------------------------------------------------------------------


def _distributed_sample(server_views, plans, net: Network, stream: Stream, tag: str):
    """Run one sampling round across servers; coordinator rebroadcasts the rows.

    Each server ships only its own sampled, integer-rescaled rows; the number
    of draws per server is decided by the coordinator from the advertised
    local sampling mass.
    """
    s = len(server_views)
    masses = []
    for sid in range(1, s + 1):
        mass = sum(plans[sid - 1].values) if plans[sid - 1] else 0.0
        masses.append(mass)
        net.to_coordinator(sid, f"{tag}-mass", Fraction(mass))
    total = sum(masses)
    n_draws = math.ceil(total)
    if n_draws == 0:
        net.to_all_servers(f"{tag}-rows", [])
        return []
    counts = stream.split(tag, "counts").multinomial(n_draws, masses)
    gathered: list[tuple] = []
    for sid in range(1, s + 1):
        net.to_server(sid, f"{tag}-count", counts[sid - 1])
        if counts[sid - 1] == 0 or not plans[sid - 1]:
            continue
        local_plan = plans[sid - 1]
        local_stream = stream.split(tag, "draw", sid)
        cum = []
        acc = 0.0
        for p in local_plan.values:
            acc += p
            cum.append(acc)
        picks = [local_stream.choice_weighted(cum) for _ in range(counts[sid - 1])]
        rows = [
            tuple(v * local_plan.rescale(i) for v in server_views[sid - 1][i])
            for i in picks
        ]
        net.to_coordinator(sid, f"{tag}-rows", [list(r) for r in rows])
        gathered.extend(rows)
    net.to_all_servers(f"{tag}-rows", [list(r) for r in gathered])
    return gathered


def leverage_protocol(
    server_views, d: int, net: Network, stream: Stream, cfg: Constants, depth: int = 0
):
    """Approximate leverage scores by recursive halving.

    Returns (tilde_rows, per-server score arrays).  tilde approximates the
    stacked view in the spectral sense; scores are generalized scores against
    it, with the unsampled-row correction applied inside the recursion.
    """
    n = sum(len(v) for v in server_views)
    threshold = cfg.leverage_c0 * d * max(1, math.ceil(math.log2(d + 1)))
    if n <= threshold:
        gathered: list[tuple] = []
        for sid, view in enumerate(server_views, start=1):
            if view:
                net.to_coordinator(sid, "base-rows", [list(r) for r in view])
                gathered.extend(view)
        net.to_all_servers("base-rows", [list(r) for r in gathered])
        taus = []
        for view in server_views:
            if not view:
                taus.append(np.zeros(0))
                continue
            exact = leverage_scores(list(view), base=gathered) if gathered else []
            taus.append(np.array([float(t) for t in exact]))
        return gathered, taus

    # Halve locally, recurse on the sampled halves.
    child_views = []
    sampled_masks = []
    for sid, view in enumerate(server_views, start=1):
        idx = list(range(len(view)))
        stream.split("half", depth, sid).shuffle(idx)
        keep = sorted(idx[: len(view) // 2])
        mask = np.zeros(len(view), dtype=bool)
        mask[keep] = True
        sampled_masks.append(mask)
        child_views.append([view[i] for i in keep])
    tilde_prime, _ = leverage_protocol(child_views, d, net, stream, cfg, depth + 1)

    plans = []
    log_d = max(1.0, math.log2(d + 1))
    for view, mask in zip(server_views, sampled_masks):
        if not view:
            plans.append(None)
            continue
        tau = leverage_scores_float(view, tilde_prime)
        eff = np.where(
            mask,
            tau,
            np.where(np.isinf(tau), 1.0, np.where(tau == 0.0, 0.0, 1.0 / (1.0 + 1.0 / np.maximum(tau, 1e-300)))),
        )
        raw = [
            1.0 if math.isinf(t) else min(1.0, cfg.sampling_c * float(t) * log_d)
            for t in eff
        ]
        vals = tuple(_pow2_round_up(max(r, 2 ** -80), "l2") for r in raw)
        plans.append(SamplingPlan(vals, "l2", math.ceil(sum(vals))))

    tilde = _distributed_sample(server_views, plans, net, stream, f"lev{depth}")
    if not tilde:
        tilde = tilde_prime
    taus = [
        leverage_scores_float(view, tilde) if view else np.zeros(0)
        for view in server_views
    ]
    return tilde, taus


# ---------------------------------------------------------------------------
# Lewis weights
# ---------------------------------------------------------------------------


def lewis_iterations(n: int) -> int:
    return math.ceil(math.log2(math.log2(max(n, 4)))) + 3


def lewis_protocol(
    server_views, d: int, L: int, net: Network, stream: Stream, cfg: Constants, T: int | None = None
):
    """Distributed fixed-point iteration w <- sqrt(w * tau(W^(-1/2) A)).

    Weight scalings travel as integers (rounded w^(-1/2)), so the leverage
    subprotocol only ever ships integer rows.  Weights stay in (0, 1].
    """
    n = sum(len(v) for v in server_views)
    for view in server_views:
        for row in view:
            if not any(row):
                raise ValueError("lewis weights need every row to have a nonzero entry")
    if T is None:
        T = lewis_iterations(n)
    floor_exp = cfg.lewis_c1 * max(L, 1) * max(1, math.ceil(math.log2(max(n * d, 2))))
    w_floor = max(2.0 ** -min(floor_exp, 1000), 5e-324)

    weights = [np.ones(len(view)) for view in server_views]
    for t in range(T):
        scaled_views = []
        for view, w in zip(server_views, weights):
            scales = [max(1, round(1.0 / math.sqrt(wi))) for wi in w]
            scaled_views.append(
                [tuple(v * s for v in row) for row, s in zip(view, scales)]
            )
        _, taus = leverage_protocol(scaled_views, d, net, stream.split("lewis", t), cfg)
        for sid in range(len(server_views)):
            tau = np.where(np.isfinite(taus[sid]), taus[sid], 1.0)
            tau = np.clip(tau, 0.0, 1.0)
            weights[sid] = np.clip(np.sqrt(weights[sid] * tau), w_floor, 1.0)
    return weights


def lewis_weights_local(rows, T: int | None = None) -> np.ndarray:
    """Local Lewis-weight iteration with float leverage scores (no messages)."""
    a = np.asarray(rows, dtype=float)
    n = len(a)
    if T is None:
        T = lewis_iterations(n)
    w = np.ones(n)
    for _ in range(T):
        scaled = a / np.sqrt(w)[:, None]
        tau = leverage_scores_float(scaled, scaled)
        tau = np.clip(np.where(np.isfinite(tau), tau, 1.0), 0.0, 1.0)
        w = np.clip(np.sqrt(w * tau), 1e-300, 1.0)
    return w


# ---------------------------------------------------------------------------
# Registry entry points
# ---------------------------------------------------------------------------


def _views_from_instance(instance: Instance, augmented: bool):
    if augmented and instance.b is not None:
        return [instance.server_aug_rows(sid) for sid in range(1, instance.s + 1)]
    return [instance.server_rows(sid) for sid in range(1, instance.s + 1)]


def leverage_protocol_entry(
    instance: Instance, net: Network, stream: Stream, cfg: Constants
) -> ProtocolOutcome:
    views = _views_from_instance(instance, augmented=False)
    tilde, taus = leverage_protocol(views, instance.d, net, stream, cfg)
    flat = [float(t) for tau in taus for t in tau]
    return ProtocolOutcome(
        "OK",
        value=float(sum(min(t, 1.0) for t in flat)),
        extra={"tilde_rows": len(tilde), "scores": flat},
    )


def lewis_protocol_entry(
    instance: Instance, net: Network, stream: Stream, cfg: Constants
) -> ProtocolOutcome:
    views = _views_from_instance(instance, augmented=False)
    weights = lewis_protocol(views, instance.d, instance.L, net, stream, cfg)
    flat = [float(w) for ws in weights for w in ws]
    return ProtocolOutcome("OK", value=float(sum(flat)), extra={"weights": flat})
