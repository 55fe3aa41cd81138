"""Distributed linear-system protocols.

Three protocols over a row-partitioned system A x = b:

* ``det_solve``     - deterministic: servers take turns publishing equations
                      that are new relative to the shared independent set C;
                      everyone can then solve C locally.
* ``rand_feasibility`` - same round structure but all algebra happens mod a
                      random prime, so only residues ever travel.
* ``rand_solve``    - coordinator-only: servers propose random sign
                      combinations of their equations, cheaply pre-screened
                      mod a random prime, and only combinations that pass the
                      screen are sent at full precision.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .commsim import Network, ProtocolOutcome
from .config import Constants
from .exactnum import (
    INFEASIBLE,
    AugmentedBasis,
    random_prime,
    rank_and_solve,
)
from .instances import Instance
from .rng import Stream


class EquationSet:
    """Shared set C of mutually independent augmented equations."""

    def __init__(self, d: int, p: int | None = None):
        self.d = d
        self.rows: list[tuple] = []
        self.basis = AugmentedBasis(d, p)

    def classify(self, coeffs, rhs) -> str:
        return self.basis.classify(coeffs, rhs)

    def insert(self, coeffs, rhs) -> str:
        verdict = self.basis.insert(coeffs, rhs)
        if verdict == "independent":
            self.rows.append(tuple(coeffs) + (rhs,))
            assert self.basis.rank == len(self.rows)
        return verdict

    def solve(self):
        if not self.rows:
            return [Fraction(0)] * self.d
        coeffs = [row[:-1] for row in self.rows]
        rhs = [row[-1] for row in self.rows]
        _, _, x = rank_and_solve(coeffs, rhs)
        return x


def prime_range_hi(d: int, L: int, cfg: Constants) -> int:
    return (cfg.prime_base * d * max(L, 1)) ** cfg.prime_exp


def det_solve(instance: Instance, net: Network, stream: Stream, cfg: Constants) -> ProtocolOutcome:
    """Deterministic exact solve; at most d equations ever enter C."""
    d = instance.d
    shared = EquationSet(d)
    for sid in range(1, instance.s + 1):
        net.mark_round()
        local = shared.basis.copy()
        rows = instance.server_aug_rows(sid)
        to_publish = []
        for row in rows:
            verdict = local.insert(row[:-1], row[-1])
            if verdict == "inconsistent":
                net.verdict(sid, "infeasible")
                return ProtocolOutcome(INFEASIBLE)
            if verdict == "independent":
                to_publish.append(row)
        for row in to_publish:
            net.server_broadcast(sid, "equation", list(row))
            shared.insert(row[:-1], row[-1])
    x = shared.solve()
    return ProtocolOutcome("SOLVED", x=tuple(x), extra={"equations": len(shared.rows)})


def rand_feasibility(
    instance: Instance, net: Network, stream: Stream, cfg: Constants
) -> ProtocolOutcome:
    """Feasibility testing over F_p for one random prime p."""
    d = instance.d
    hi = prime_range_hi(d, instance.L, cfg)
    p = random_prime(hi, stream.split("prime"))
    net.to_all_servers("prime", p)

    shared = EquationSet(d, p)
    for sid in range(1, instance.s + 1):
        net.mark_round()
        local = shared.basis.copy()
        to_publish = []
        for row in instance.server_aug_rows(sid):
            reduced = [int(v) % p for v in row]
            verdict = local.insert(reduced[:-1], reduced[-1])
            if verdict == "inconsistent":
                net.verdict(sid, "infeasible")
                return ProtocolOutcome(INFEASIBLE, extra={"p": p})
            if verdict == "independent":
                to_publish.append(reduced)
        for row in to_publish:
            net.server_broadcast(sid, "equation-mod-p", row)
            shared.insert(row[:-1], row[-1])
    net.verdict(None, "feasible")
    return ProtocolOutcome("FEASIBLE", extra={"p": p})


def rand_solve(instance: Instance, net: Network, stream: Stream, cfg: Constants) -> ProtocolOutcome:
    """Randomized solving: mod-p screened sign combinations (coordinator model)."""
    d = instance.d
    hi = prime_range_hi(d, instance.L, cfg)
    p = random_prime(hi, stream.split("prime"))
    net.to_all_servers("prime", p)

    k_cap = math.ceil(cfg.k_combo_factor * math.log2(d + 2))
    shared = EquationSet(d)  # coordinator-side, exact
    shared_modp = AugmentedBasis(d, p)  # coordinator-side screen
    full_sends = 0

    for sid in range(1, instance.s + 1):
        net.mark_round()
        rows = instance.server_aug_rows(sid)
        # Local exact pre-reduction to a maximal independent subset.
        local = AugmentedBasis(d)
        s_i = []
        for row in rows:
            verdict = local.insert(row[:-1], row[-1])
            if verdict == "inconsistent":
                net.verdict(sid, "infeasible")
                return ProtocolOutcome(INFEASIBLE, extra={"p": p})
            if verdict == "independent":
                s_i.append(row)
        if not s_i:
            net.verdict(sid, "skip")
            continue

        combos = stream.split("combos", sid)
        attempts = 0
        while attempts < k_cap:
            attempts += 1
            signs = [combos.sign() for _ in s_i]
            combo = [sum(r * row[j] for r, row in zip(signs, s_i)) for j in range(d + 1)]
            reduced = [v % p for v in combo]
            net.to_coordinator(sid, "combo-mod-p", reduced)
            verdict_p = shared_modp.classify(reduced[:-1], reduced[-1])
            if verdict_p == "dependent":
                net.to_server(sid, "reject", None, bits=1)
                continue
            # Screen passed: request the full-precision equation.
            net.to_server(sid, "promote", None, bits=1)
            net.to_coordinator(sid, "equation", combo)
            full_sends += 1
            exact_verdict = shared.classify(combo[:-1], combo[-1])
            if exact_verdict == "inconsistent":
                return ProtocolOutcome(
                    INFEASIBLE, extra={"p": p, "full_sends": full_sends}
                )
            if exact_verdict == "independent":
                shared.insert(combo[:-1], combo[-1])
                shared_modp.insert(reduced[:-1], reduced[-1])
                attempts = 0
            # A mod-p false positive (dependent over Q) is dropped silently.

    x = shared.solve()
    assert x != INFEASIBLE  # C only ever holds mutually consistent rows
    return ProtocolOutcome(
        "SOLVED", x=tuple(x), extra={"p": p, "full_sends": full_sends, "equations": len(shared.rows)}
    )


def verify_solution(instance: Instance, x) -> bool:
    """Harness-side exact check that A x = b; outside the transcript."""
    for row, beta in zip(instance.A, instance.b):
        if sum(Fraction(a) * xv for a, xv in zip(row, x)) != beta:
            return False
    return True
