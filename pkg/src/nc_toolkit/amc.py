"""Closed-form expected-delay model for sparse random linear coding.

The receiver's progress is an absorbing Markov chain over the defect of its
coefficient matrix: state i means k - i linearly independent vectors are
held, state 0 absorbs.  A received vector fails to increase the rank at
state i with probability at most

    P(k - i) = max(p_zero, (1 - p_zero) / (q - 1)) ** i

which this module uses as an approximation (it is exact at p_zero = 1/q).
Because the transition matrix is lower bidiagonal, the fundamental matrix is
lower triangular with constant columns, and every expected-delay quantity
reduces to a k-term sum; no matrix is ever inverted outside of the reference
oracle :func:`fundamental_matrix_reference`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


class DomainError(ValueError):
    """Argument outside the model's domain (state index, rank, ...)."""


class SingularMatrix(RuntimeError):
    """The reference fundamental-matrix inversion failed; for a valid model
    this cannot happen and signals an invariant violation."""


@dataclass(frozen=True)
class LayerModel:
    """One (user, layer) pair: message length, sparsity, field and PER."""

    k: int
    p_zero: float
    q: int
    per: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.p_zero < 1.0:
            raise ValueError(f"p_zero must be in (0, 1), got {self.p_zero}")
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        if not 0.0 <= self.per < 1.0:
            raise ValueError(
                f"per must be in [0, 1), got {self.per} "
                "(per = 1 makes every expected delay infinite)"
            )


@dataclass(frozen=True)
class DelayResult:
    """Expected transmissions ``tau`` plus the per-state values tau_i for
    i = 0..k (expected coded transmissions to absorb from defect i)."""

    tau: float
    per_state_tau: np.ndarray


def _mu(model: LayerModel) -> float:
    return max(model.p_zero, (1.0 - model.p_zero) / (model.q - 1))


def _one_minus_pow(mu: float, exponents: np.ndarray) -> np.ndarray:
    # 1 - mu**j without cancellation as mu -> 1.
    return -np.expm1(exponents * np.log1p(mu - 1.0))


def rank_failure_prob(model: LayerModel, t: int) -> float:
    """Probability that a fresh vector leaves the rank at t; approximated by
    mu**(k-t) with mu = max(p_zero, (1-p_zero)/(q-1))."""
    if not 0 <= t <= model.k - 1:
        raise DomainError(f"t must be in [0, {model.k - 1}], got {t}")
    return _mu(model) ** (model.k - t)


def transition_probability(model: LayerModel, i: int, j: int) -> float:
    """Probability of moving from defect state i to defect state j in one
    transmission; state 0 is absorbing."""
    k = model.k
    if not (0 <= i <= k and 0 <= j <= k):
        raise DomainError(f"states must be in [0, {k}], got ({i}, {j})")
    if i == 0:
        return 1.0 if j == 0 else 0.0
    fail = rank_failure_prob(model, k - i)
    ok = 1.0 - model.per
    if i - j == 1:
        return (1.0 - fail) * ok
    if i == j:
        return fail * ok + model.per
    return 0.0


def _state_terms(model: LayerModel) -> np.ndarray:
    """Expected transmissions spent leaving each state: term j (j = 1..k)
    is 1 / [(1 - per) (1 - mu**j)]."""
    j = np.arange(1, model.k + 1, dtype=np.float64)
    return 1.0 / ((1.0 - model.per) * _one_minus_pow(_mu(model), j))


def _per_state_tau(model: LayerModel) -> np.ndarray:
    out = np.zeros(model.k + 1)
    out[1:] = np.cumsum(_state_terms(model))
    return out


def tau_srlnc(model: LayerModel, *, extra_boundary_term: bool = False) -> DelayResult:
    """Expected transmissions to recover a layer under non-systematic coding.

    Computed as the k-term sum tau_k = sum_{j=1..k} 1/[(1-per)(1-mu**j)];
    ``extra_boundary_term`` adds one more 1/[(1-per)(1-mu**k)] waiting term,
    the constant offset of a (k+1)-term reading of the same recursion, kept
    available for comparison.
    """
    per_state = _per_state_tau(model)
    tau = float(per_state[-1])
    if extra_boundary_term:
        tau += float(per_state[-1] - per_state[-2])
    return DelayResult(tau=tau, per_state_tau=per_state)


def systematic_start_distribution(model: LayerModel) -> np.ndarray:
    """Distribution of the defect after the systematic phase: the chance of
    losing exactly i of the k uncoded packets is Binomial(k, per)."""
    return stats.binom.pmf(np.arange(model.k + 1), model.k, model.per)


def tau_ssrlnc(model: LayerModel) -> DelayResult:
    """Expected systematic-plus-coded transmissions under systematic coding.

    Averages (k - i) + tau_i over the binomial start distribution: k - i
    received systematic packets plus the coded transmissions needed to clear
    a defect of i.
    """
    per_state = _per_state_tau(model)
    pi = systematic_start_distribution(model)
    i = np.arange(model.k + 1, dtype=np.float64)
    tau = float(np.dot(pi, (model.k - i) + per_state))
    return DelayResult(tau=tau, per_state_tau=per_state)


def _dense_full_rank_cdf(k: int, q: int, r: int) -> float:
    """P(a random k x r dense matrix over GF(q) has rank k); zero for r < k."""
    i = np.arange(k, dtype=np.float64)
    return float(np.prod(-np.expm1((i - r) * math.log(q))))


def exact_dense_pmf(k: int, q: int, r: int) -> float:
    """Exact pmf of the number of transmissions needed at p_zero = 1/q,
    per = 0: the difference of consecutive full-rank probabilities."""
    if r < k:
        raise DomainError(f"r must be >= k = {k}, got {r}")
    if r == k:
        return _dense_full_rank_cdf(k, q, r)
    return _dense_full_rank_cdf(k, q, r) - _dense_full_rank_cdf(k, q, r - 1)


def exact_dense_mean(k: int, q: int, *, tail_tol: float = 1e-12) -> float:
    """Mean of the exact dense pmf, truncating once the missing tail mass
    drops below ``tail_tol``."""
    mean = 0.0
    prev = 0.0
    r = k
    while True:
        cdf = _dense_full_rank_cdf(k, q, r)
        mean += r * (cdf - prev)
        prev = cdf
        if 1.0 - cdf < tail_tol and r > k + 2:
            return mean
        if r > k + 100_000:  # pragma: no cover - convergence is geometric
            raise RuntimeError("dense pmf mean failed to converge")
        r += 1


def fundamental_matrix_reference(model: LayerModel) -> np.ndarray:
    """Reference oracle: build the transient transition block Q explicitly
    and invert I - Q numerically.

    Exists to cross-check the closed-form sums; limited to k <= 512 and never
    used on the hot path.  Row i sums of the result over columns 1..i give
    tau_i.
    """
    k = model.k
    if k > 512:
        raise DomainError("reference path is limited to k <= 512")
    q_block = np.zeros((k, k))
    for i in range(1, k + 1):
        q_block[i - 1, i - 1] = transition_probability(model, i, i)
        if i > 1:
            q_block[i - 1, i - 2] = transition_probability(model, i, i - 1)
    try:
        return np.linalg.inv(np.eye(k) - q_block)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - invariant guard
        raise SingularMatrix(str(exc)) from exc
