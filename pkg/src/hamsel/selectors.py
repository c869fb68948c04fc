"""Selection rules mapping observations to support vectors.

Boundary conventions are normative, not cosmetic: selection events use the
closed inequality ``>= t`` exactly as defined, and the adaptive procedure's
blocks are half-open ``w(g_k) <= |x| < w(g_{k-1})``.  With continuous noise
the boundaries are measure-zero; for Bernoulli/Poisson data they are not,
and the closed-form risks in :mod:`hamsel.risk` match these conventions
bit for bit.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import numkit
from .model import (
    Adaptive,
    CoshLLR,
    CrowdInstance,
    Family,
    GeneralLLR,
    Interval,
    LowerBound,
    OneSidedThreshold,
    ProblemInstance,
    SelectorSpec,
    SupportVector,
    TopS,
    TwoSided,
    TwoSidedThreshold,
    Universal,
)


def _as_observations(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("observations must be a nonempty 1-d vector")
    if not np.isfinite(arr).all():
        raise ValueError("observations must be finite")
    return arr


def _check_d_s(d: int, s: int) -> None:
    if not 1 <= s < d:
        raise ValueError(f"need 1 <= s < d, got s={s}, d={d}")


def _check_positive(**named: float) -> None:
    for name, value in named.items():
        if not (value > 0.0 and math.isfinite(value)):
            raise ValueError(f"need {name} > 0, got {value}")


# ---------------------------------------------------------------------------
# Plain thresholds
# ---------------------------------------------------------------------------


def threshold_one_sided(x, t: float) -> SupportVector:
    """Select j iff x_j >= t."""
    arr = _as_observations(x)
    if math.isnan(t):
        raise ValueError("threshold must not be NaN")
    return SupportVector(arr >= t)


def threshold_two_sided(x, t: float) -> SupportVector:
    """Select j iff |x_j| >= t; t must be nonnegative."""
    arr = _as_observations(x)
    if not t >= 0.0:
        raise ValueError(f"two-sided threshold must be >= 0, got {t}")
    return SupportVector(np.abs(arr) >= t)


def minimax_threshold(d: int, s: int, a: float, sigma: float = 1.0) -> float:
    """t = a/2 + (sigma^2/a) log((d-s)/s).

    The minimax threshold of the one-sided problem.  May be negative when
    s > d/2; it is returned as-is (callers needing an |x| threshold clamp
    at zero themselves).
    """
    _check_d_s(d, s)
    _check_positive(a=a, sigma=sigma)
    return a / 2.0 + (sigma * sigma / a) * math.log((d - s) / s)


# ---------------------------------------------------------------------------
# Cosh likelihood-ratio selector
# ---------------------------------------------------------------------------


def cosh_abs_threshold(a: float, t: float, sigma: float = 1.0) -> float:
    """|x| cut for the event log cosh(a x / sigma^2) >= t.

    cosh >= 1 makes the event certain for t <= 0; that case is reported as
    a zero threshold.
    """
    _check_positive(a=a, sigma=sigma)
    if math.isnan(t):
        raise ValueError("threshold must not be NaN")
    if t <= 0.0:
        return 0.0
    return (sigma * sigma / a) * numkit.arccosh_exp(t)


def cosh_threshold(d: int, s: int, a: float, sigma: float = 1.0) -> float:
    """The |x| cut equivalent to the canonical log-cosh selection event.

    The event log cosh(a x / sigma^2) >= a^2/(2 sigma^2) + log((d-s)/s)
    is, for u = e^{a^2/(2 sigma^2)} (d-s)/s, the same as
    |x| >= (sigma^2/a) arccosh(u) when u > 1 and always true otherwise.
    """
    _check_d_s(d, s)
    _check_positive(a=a, sigma=sigma)
    log_u = a * a / (2.0 * sigma * sigma) + math.log((d - s) / s)
    return cosh_abs_threshold(a, log_u, sigma)


def cosh_selector(
    x, d: int, s: int, a: float, sigma: float = 1.0
) -> SupportVector:
    """Exact-minimax symmetric selector for the two-sided class.

    Implemented through the equivalent |x| threshold of
    :func:`cosh_threshold`; tests assert agreement with the literal
    log-cosh comparison.
    """
    arr = _as_observations(x)
    if arr.size != d:
        raise ValueError(f"expected {d} observations, got {arr.size}")
    return SupportVector(np.abs(arr) >= cosh_threshold(d, s, a, sigma))


# ---------------------------------------------------------------------------
# General likelihood-ratio selectors
# ---------------------------------------------------------------------------


def _check_interval_params(family: Family, a0: float, a1: float, sigma: float) -> None:
    if not (math.isfinite(a0) and math.isfinite(a1) and a0 < a1):
        raise ValueError(f"need finite a0 < a1, got ({a0}, {a1})")
    if family is Family.GAUSSIAN:
        _check_positive(sigma=sigma)
    elif family is Family.BERNOULLI:
        if not (0.0 < a0 and a1 < 1.0):
            raise ValueError(f"Bernoulli rates must lie in (0,1), got ({a0}, {a1})")
    elif family is Family.POISSON:
        if not a0 > 0.0:
            raise ValueError(f"Poisson rates must be positive, got a0={a0}")
    else:
        raise ValueError(f"unknown family {family!r}")


def llr_threshold(
    family: Family, d: int, s: int, a0: float, a1: float, sigma: float = 1.0
) -> float:
    """Observation-scale cut equivalent to LLR(x) >= log((d-s)/s).

    All three families have likelihood ratios monotone increasing in x, so
    the selection event reduces to x >= t with

        Gaussian: t = (a1+a0)/2 + sigma^2 log((d-s)/s) / (a1-a0)
        Bernoulli: t = (log((d-s)/s) - log((1-a1)/(1-a0)))
                       / log((a1/(1-a1)) ((1-a0)/a0))
        Poisson:  t = (log((d-s)/s) + a1 - a0) / log(a1/a0)
    """
    _check_d_s(d, s)
    _check_interval_params(family, a0, a1, sigma)
    log_ratio = math.log((d - s) / s)
    if family is Family.GAUSSIAN:
        # grouped exactly like minimax_threshold so a0 = 0 reproduces it bitwise
        return (a1 + a0) / 2.0 + (sigma * sigma / (a1 - a0)) * log_ratio
    if family is Family.BERNOULLI:
        slope = math.log((a1 / (1.0 - a1)) * ((1.0 - a0) / a0))
        intercept = math.log((1.0 - a1) / (1.0 - a0))
        return (log_ratio - intercept) / slope
    return (log_ratio + a1 - a0) / math.log(a1 / a0)


def llr_selector(
    x, family: Family, d: int, s: int, a0: float, a1: float, sigma: float = 1.0
) -> SupportVector:
    """Likelihood-ratio selector for a two-distribution family."""
    arr = _as_observations(x)
    if arr.size != d:
        raise ValueError(f"expected {d} observations, got {arr.size}")
    if family is Family.BERNOULLI:
        if not np.isin(arr, (0.0, 1.0)).all():
            raise ValueError("Bernoulli observations must be 0/1 valued")
    elif family is Family.POISSON:
        if (arr < 0.0).any() or not (arr == np.floor(arr)).all():
            raise ValueError("Poisson observations must be nonnegative integers")
    t = llr_threshold(family, d, s, a0, a1, sigma)
    return SupportVector(arr >= t)


def crowd_weights(rates) -> tuple[np.ndarray, float]:
    """Per-worker log-likelihood weights and the shared intercept.

    Item j's log-likelihood ratio is sum_i votes[i,j] * w_i + b with
    w_i = log((a_i1/(1-a_i1)) ((1-a_i0)/a_i0)) and
    b = sum_i log((1-a_i1)/(1-a_i0)).
    """
    a0 = np.array([r[0] for r in rates], dtype=float)
    a1 = np.array([r[1] for r in rates], dtype=float)
    weights = np.log((a1 / (1.0 - a1)) * ((1.0 - a0) / a0))
    intercept = float(np.sum(np.log((1.0 - a1) / (1.0 - a0))))
    return weights, intercept


def crowd_selector(c: CrowdInstance, s: int) -> SupportVector:
    """Aggregate m workers' votes by likelihood ratio against log((d-s)/s)."""
    _check_d_s(c.d, s)
    weights, intercept = crowd_weights(c.rates)
    llr = c.votes.astype(float).T @ weights + intercept
    cut = math.log((c.d - s) / s)
    return SupportVector(llr >= cut)


# ---------------------------------------------------------------------------
# Order statistics, universal, adaptive
# ---------------------------------------------------------------------------


def top_s_selector(x, s: int, one_sided: bool = True) -> SupportVector:
    """Select the s largest coordinates; ties go to the lowest index.

    The one-sided variant ranks by value, the two-sided one by |value|.
    Stable sorting of the negated key makes the tie rule deterministic.
    """
    arr = _as_observations(x)
    if not 1 <= s <= arr.size:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={arr.size}")
    key = arr if one_sided else np.abs(arr)
    order = np.argsort(-key, kind="stable")
    bits = np.zeros(arr.size, dtype=bool)
    bits[order[:s]] = True
    return SupportVector(bits)


def universal_threshold(d: int, sigma: float = 1.0) -> float:
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    _check_positive(sigma=sigma)
    return sigma * math.sqrt(2.0 * math.log(d))


def universal_selector(x, d: int, sigma: float = 1.0) -> SupportVector:
    """Two-sided threshold at sigma sqrt(2 log d); needs no sparsity input."""
    arr = _as_observations(x)
    if arr.size != d:
        raise ValueError(f"expected {d} observations, got {arr.size}")
    return threshold_two_sided(arr, universal_threshold(d, sigma))


class AdaptiveResult(NamedTuple):
    support: SupportVector
    chosen_m: int
    diagnostics: dict


def adaptive_grid(s_star: int) -> list[int]:
    """Dyadic grid g_j = 2^(j-1), j = 1..M, M = max{m : 2^(m-1) <= s_star}."""
    if s_star < 2:
        raise ValueError(f"need s_star >= 2, got {s_star}")
    return [2 ** (j - 1) for j in range(1, s_star.bit_length() + 1)]


def adaptive_selector(x, s_star: int, sigma: float = 1.0) -> AdaptiveResult:
    """Data-driven two-sided threshold over the dyadic sparsity grid.

    With w(s) = sigma sqrt(2 log((d-s)/s)) and tau = (log(d/s_star - 1))^(-1/7),
    count the coordinates in each band N_k = #{j : w(g_k) <= |x_j| < w(g_{k-1})}
    for k = 2..M and take

        m_hat = min{m in {2..M} : N_k <= tau g_k for all k in {m..M}},

    falling back to M when no m qualifies.  The selection is the two-sided
    threshold at w(g_m_hat).  Requires 2 <= s_star <= d/4 so every band
    threshold is real and positive.
    """
    arr = _as_observations(x)
    d = arr.size
    _check_positive(sigma=sigma)
    if not 2 <= s_star:
        raise ValueError(f"need s_star >= 2, got {s_star}")
    if 4 * s_star > d:
        raise ValueError(f"need s_star <= d/4, got s_star={s_star}, d={d}")
    grid = adaptive_grid(s_star)
    m_cap = len(grid)
    w = [sigma * math.sqrt(2.0 * math.log((d - g) / g)) for g in grid]
    tau = math.log((d - s_star) / s_star) ** (-1.0 / 7.0)

    absx = np.abs(arr)
    counts = {
        k: int(np.count_nonzero((absx >= w[k - 1]) & (absx < w[k - 2])))
        for k in range(2, m_cap + 1)
    }
    chosen = m_cap
    for m in range(2, m_cap + 1):
        if all(counts[k] <= tau * grid[k - 1] for k in range(m, m_cap + 1)):
            chosen = m
            break
    threshold = w[chosen - 1]
    diagnostics = {
        "grid": grid,
        "thresholds": w,
        "tau": tau,
        "block_counts": counts,
        "threshold_used": threshold,
    }
    return AdaptiveResult(threshold_two_sided(arr, threshold), chosen, diagnostics)


# ---------------------------------------------------------------------------
# Symbolic selector kinds -> concrete specs
# ---------------------------------------------------------------------------

SELECTOR_KINDS = (
    "plus",
    "two-sided",
    "cosh",
    "llr",
    "tops",
    "universal",
    "adaptive",
)


def spec_for_kind(
    kind: str,
    p: ProblemInstance,
    s_star: int | None = None,
    c0: float = 16.0,
) -> SelectorSpec:
    """Instantiate a named selector at its canonical parameters for p.

    Thresholded kinds are placed at the instance's minimax threshold, which
    is what sweeps need when (d, s, a) vary per cell.
    """
    if kind not in SELECTOR_KINDS:
        raise ValueError(f"unknown selector kind {kind!r}")
    sig = p.signal
    if kind == "llr":
        return GeneralLLR()
    if kind == "tops":
        return TopS(p.s, one_sided=isinstance(sig, (LowerBound, Interval)))
    if kind == "universal":
        return Universal(p.d)
    if kind == "adaptive":
        if s_star is None:
            raise ValueError("adaptive selector needs s_star")
        return Adaptive(s_star, c0)
    if not isinstance(sig, (LowerBound, TwoSided)):
        raise ValueError(f"selector kind {kind!r} needs a LowerBound or TwoSided signal")
    t = minimax_threshold(p.d, p.s, sig.a, p.sigma)
    if kind == "plus":
        return OneSidedThreshold(t)
    if kind == "two-sided":
        return TwoSidedThreshold(max(t, 0.0))
    return CoshLLR(sig.a, sig.a**2 / (2.0 * p.sigma**2) + p.log_ratio)
