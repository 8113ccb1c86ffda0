"""Joint MCS / sparsity resource allocation.

Each layer is allocated independently: for every MCS index m whose user
coverage meets the layer's target, the layer-sparsity-maximization problem
finds the largest zero-probability p* whose expected delay still meets the
layer's transmission budget, and the pair with the greatest MCS index wins
(it yields the shortest message, hence the cheapest decode).  Expected delay
is monotone non-decreasing in p on [1/q, 1), so the root is found by
bisection on a guaranteed bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import amc
from .codec import SCHEMES, is_sparse, is_systematic

#: The open interval p < 1 needs a computable cap; at p -> 1 every delay term
#: diverges, so the cap never binds for a finite delay budget.
P_CAP_DELTA = 1e-6

_BISECT_TAU_TOL = 1e-9
_BISECT_P_TOL = 1e-13


@dataclass(frozen=True)
class McsTable:
    """Information bits carried by one resource block per MCS index 1..M."""

    r_bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.r_bits) < 1:
            raise ValueError("MCS table must have at least one entry")
        if any(r <= 0 for r in self.r_bits):
            raise ValueError("r(m) entries must be positive")
        if any(b <= a for a, b in zip(self.r_bits, self.r_bits[1:])):
            raise ValueError("r(m) must be strictly increasing in m")

    @property
    def M(self) -> int:
        return len(self.r_bits)

    def r(self, m: int) -> int:
        if not 1 <= m <= self.M:
            raise ValueError(f"MCS index must be in [1, {self.M}], got {m}")
        return self.r_bits[m - 1]

    def k_for(self, b_bits: int, m: int) -> int:
        """Source packets needed to carry b_bits at MCS m."""
        return math.ceil(b_bits / self.r(m))


@dataclass(frozen=True)
class UserFeedback:
    """Greatest MCS index a user reports as acceptable (0 = none)."""

    max_mcs: int

    def __post_init__(self):
        if self.max_mcs < 0:
            raise ValueError("max_mcs must be >= 0")


def derive_feedback(per_curve: Sequence[float], p_hat: float) -> UserFeedback:
    """Largest m whose PER is acceptable, i.e. at most ``p_hat``.

    Scans the prefix maximum of the curve so a non-monotone synthetic curve
    resolves conservatively: m counts only while every PER up to m is
    acceptable.
    """
    worst = 0.0
    best = 0
    for m, per in enumerate(per_curve, start=1):
        worst = max(worst, per)
        if worst <= p_hat:
            best = m
        else:
            break
    return UserFeedback(best)


def per_model(m: int, feedback: UserFeedback, p_hat: float) -> float:
    """PER approximation used during allocation: the acceptability threshold
    when transmitting at or below the user's reported MCS, 1 otherwise."""
    return p_hat if m <= feedback.max_mcs else 1.0


@dataclass(frozen=True)
class LayerTargets:
    """Service targets for one layer: size, delay budget, user coverage."""

    b_bits: int
    tau_hat: float
    u_hat: int

    def __post_init__(self):
        if self.b_bits < 1:
            raise ValueError("b_bits must be >= 1")
        if self.tau_hat <= 0:
            raise ValueError("tau_hat must be > 0")
        if self.u_hat < 1:
            raise ValueError("u_hat must be >= 1")


@dataclass(frozen=True)
class LayerAllocation:
    layer: int
    feasible: bool
    m: int | None = None
    p_zero: float | None = None
    k: int | None = None
    achieved_tau: float | None = None
    reason: str = ""


@dataclass(frozen=True)
class AllocationSolution:
    scheme: str
    q: int
    p_hat: float
    layers: tuple[LayerAllocation, ...]

    @property
    def all_feasible(self) -> bool:
        return all(a.feasible for a in self.layers)


def layer_delay(scheme: str, k: int, q: int, per: float, p_zero: float) -> float:
    """Expected transmissions for one layer under the given scheme."""
    model = amc.LayerModel(k=k, p_zero=p_zero, q=q, per=per)
    if is_systematic(scheme):
        return amc.tau_ssrlnc(model).tau
    return amc.tau_srlnc(model).tau


def solve_lsm(
    k: int,
    q: int,
    per: float,
    tau_hat: float,
    scheme: str,
    *,
    p_cap: float | None = None,
) -> float | None:
    """Largest p in [1/q, 1 - P_CAP_DELTA] whose delay meets ``tau_hat``.

    Returns None when even the densest admissible code misses the budget
    (tau(1/q) > tau_hat); returns the cap when the whole interval is
    feasible.  The returned p always satisfies tau(p) <= tau_hat, so an
    independent recheck of the budget cannot fail on a feasible answer.
    """
    if not is_sparse(scheme):
        raise ValueError(f"sparsity maximization applies to sparse schemes, got {scheme!r}")
    lo = 1.0 / q
    hi = p_cap if p_cap is not None else 1.0 - P_CAP_DELTA
    tau = lambda p: layer_delay(scheme, k, q, per, p)
    if tau(lo) > tau_hat:
        return None
    if tau(hi) <= tau_hat:
        return hi
    # Invariant: tau(lo) <= tau_hat < tau(hi).
    while hi - lo > _BISECT_P_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        t_mid = tau(mid)
        if t_mid <= tau_hat:
            lo = mid
            if tau_hat - t_mid <= _BISECT_TAU_TOL:
                break
        else:
            hi = mid
    return lo


def solve_st(
    max_mcs: Sequence[int],
    mcs_table: McsTable,
    layers: Sequence[LayerTargets],
    q: int,
    p_hat: float,
    scheme: str,
) -> AllocationSolution:
    """Allocate (m, p) for every layer.

    For each layer, every MCS index with sufficient user coverage is tried;
    among those whose sparsity maximization is feasible the greatest index is
    selected.  Dense schemes use the same selection with p pinned at 1/q.
    Later layers are restricted to MCS indices at least as large as earlier
    feasible layers' (coverage targets are non-increasing, so the sets of
    users reaching successive quality levels stay nested).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    M = mcs_table.M
    coverage = [0] * (M + 2)
    for m in range(1, M + 1):
        coverage[m] = sum(1 for mu in max_mcs if mu >= m)
    results: list[LayerAllocation] = []
    m_floor = 1
    for idx, targets in enumerate(layers, start=1):
        best: tuple[int, float, int] | None = None
        saw_coverage = False
        for m in range(m_floor, M + 1):
            if coverage[m] < targets.u_hat:
                continue
            saw_coverage = True
            k = mcs_table.k_for(targets.b_bits, m)
            if is_sparse(scheme):
                p = solve_lsm(k, q, p_hat, targets.tau_hat, scheme)
            else:
                p = 1.0 / q
                if layer_delay(scheme, k, q, p_hat, p) > targets.tau_hat:
                    p = None
            if p is not None:
                best = (m, p, k)
        if best is None:
            reason = (
                "delay budget unreachable for every coverage-feasible MCS"
                if saw_coverage
                else "user coverage target exceeds reachable users"
            )
            results.append(LayerAllocation(layer=idx, feasible=False, reason=reason))
            continue
        m, p, k = best
        results.append(
            LayerAllocation(
                layer=idx,
                feasible=True,
                m=m,
                p_zero=p,
                k=k,
                achieved_tau=layer_delay(scheme, k, q, p_hat, p),
            )
        )
        m_floor = m
    return AllocationSolution(scheme=scheme, q=q, p_hat=p_hat, layers=tuple(results))


def verify_allocation(
    solution: AllocationSolution,
    max_mcs: Sequence[int],
    mcs_table: McsTable,
    layers: Sequence[LayerTargets],
    *,
    tau_slack: float = 1e-9,
) -> bool:
    """Independent from-scratch recheck of a solution's feasible layers:
    coverage counts, message lengths, delay budgets and MCS monotonicity."""
    prev_m = 0
    for alloc, targets in zip(solution.layers, layers):
        if not alloc.feasible:
            continue
        if alloc.m < prev_m:
            return False
        prev_m = alloc.m
        if sum(1 for mu in max_mcs if mu >= alloc.m) < targets.u_hat:
            return False
        if mcs_table.k_for(targets.b_bits, alloc.m) != alloc.k:
            return False
        tau = layer_delay(solution.scheme, alloc.k, solution.q, solution.p_hat, alloc.p_zero)
        if tau > targets.tau_hat + tau_slack:
            return False
    return True
