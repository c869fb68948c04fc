"""Closed-form risks, recovery bounds, and phase-boundary signal levels.

Every Psi function returns the maximal risk per signal coordinate: the
worst-case expected Hamming loss of the corresponding selector over its
class is s * Psi.  All formulas follow the closed ``>= t`` selection
convention of :mod:`hamsel.selectors`; for the discrete families this
matters at atoms and the two modules are kept consistent bit for bit.

Products like ((d-s)/s) * Phi(y) are routed through logs once Phi(y)
approaches the subnormal range, so extreme-tail values keep full relative
accuracy instead of degrading with the underflowing factor.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import numkit
from .model import (
    Family,
    LossKind,
    RiskReport,
    fresh_seed,
    rng_stream,
)
from .selectors import crowd_weights, llr_threshold

_UPPER_CONST = 2.0 + math.sqrt(2.0 * math.pi)


def _check_d_s(d: int, s: int) -> None:
    if not 1 <= s < d:
        raise ValueError(f"need 1 <= s < d, got s={s}, d={d}")


def _check_a_sigma(a: float, sigma: float) -> None:
    if not (a > 0.0 and math.isfinite(a)):
        raise ValueError(f"need a > 0, got {a}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError(f"need sigma > 0, got {sigma}")


def _scaled_tail(scale: float, log_scale: float, y: float) -> float:
    """scale * Phi(y), via logs once Phi(y) nears the subnormal range."""
    if y > -36.0:
        return scale * numkit.gaussian_cdf(y)
    return math.exp(log_scale + numkit.log_gaussian_tail(-y))


def psi_plus(d: int, s: int, a: float, sigma: float = 1.0) -> float:
    """Exact maximal risk per signal coordinate of the one-sided selector.

    Psi+ = ((d-s)/s) Phi(-a/(2 sigma) - sigma log((d-s)/s)/a)
         + Phi(-a/(2 sigma) + sigma log((d-s)/s)/a),

    the false-positive and miss probabilities of the threshold
    a/2 + sigma^2 log((d-s)/s)/a, the first weighted by (d-s)/s.
    """
    _check_d_s(d, s)
    _check_a_sigma(a, sigma)
    ratio = (d - s) / s
    log_ratio = math.log((d - s) / s)
    half = a / (2.0 * sigma)
    shift = sigma * log_ratio / a
    return _scaled_tail(ratio, log_ratio, -half - shift) + numkit.gaussian_cdf(
        -half + shift
    )


def psi_two_sided(d: int, s: int, a: float, sigma: float = 1.0) -> float:
    """Two-sided lower-bound rate: Psi+ with the miss argument clipped at 0."""
    _check_d_s(d, s)
    _check_a_sigma(a, sigma)
    ratio = (d - s) / s
    log_ratio = math.log((d - s) / s)
    half = a / (2.0 * sigma)
    shift = sigma * log_ratio / a
    return _scaled_tail(ratio, log_ratio, -half - shift) + numkit.gaussian_cdf(
        min(-half + shift, 0.0)
    )


def psi_bar(d: int, s: int, a: float, sigma: float = 1.0) -> float:
    """Exact maximal risk per signal coordinate of the symmetric selector.

    The log-cosh selection event reduces, for u = e^{a^2/(2 sigma^2)} (d-s)/s,
    to |x| >= sigma q with q = (sigma/a) arccosh(u).  Then

        PsiBar = ((d-s)/s) 2 Phi(-q) + [Phi(q - a/sigma) - Phi(-q - a/sigma)].

    For u <= 1 the selector keeps every coordinate, so the value is exactly
    (d-s)/s: no misses, all d-s off-support coordinates wrong.
    """
    _check_d_s(d, s)
    _check_a_sigma(a, sigma)
    ratio = (d - s) / s
    log_ratio = math.log((d - s) / s)
    log_u = a * a / (2.0 * sigma * sigma) + log_ratio
    if log_u <= 0.0:
        return ratio
    q = (sigma / a) * numkit.arccosh_exp(log_u)
    term_fp = _scaled_tail(2.0 * ratio, math.log(2.0) + log_ratio, -q)
    term_miss = numkit.gaussian_cdf(q - a / sigma) - numkit.gaussian_cdf(-q - a / sigma)
    return term_fp + max(term_miss, 0.0)


def psi_general(
    family: Family, d: int, s: int, a0: float, a1: float, sigma: float = 1.0
) -> float:
    """Maximal risk per signal coordinate of the likelihood-ratio selector.

    Computed as P_{a1}(no select) + ((d-s)/s) P_{a0}(select) with the
    family's observation-scale cut from :func:`hamsel.selectors.llr_threshold`.

    Gaussian risk depends on the means only through the separation a1 - a0
    (shifting both by a constant shifts the threshold identically), so it
    equals psi_plus(d, s, a1 - a0, sigma).  Bernoulli is piecewise in the
    cut's position against the atoms {0, 1}; Poisson reduces to CDFs at
    k = ceil(t), the smallest integer the selector keeps.
    """
    _check_d_s(d, s)
    if family is Family.GAUSSIAN:
        if not (math.isfinite(a0) and math.isfinite(a1) and a0 < a1):
            raise ValueError(f"need finite a0 < a1, got ({a0}, {a1})")
        return psi_plus(d, s, a1 - a0, sigma)
    ratio = (d - s) / s
    t = llr_threshold(family, d, s, a0, a1, sigma)
    if family is Family.BERNOULLI:
        if t <= 0.0:
            return ratio
        if t >= 1.0:
            return 1.0
        return (1.0 - a1) + a0 * ratio
    k_cut = math.ceil(t)
    if k_cut <= 0:
        return ratio
    return numkit.poisson_cdf(k_cut - 1, a1) + ratio * (
        1.0 - numkit.poisson_cdf(k_cut - 1, a0)
    )


def _check_rates(rates) -> tuple[tuple[float, float], ...]:
    out = tuple((float(a0), float(a1)) for a0, a1 in rates)
    if not out:
        raise ValueError("need at least one worker")
    for i, (a0, a1) in enumerate(out):
        if not (0.0 < a0 < 1.0 and 0.0 < a1 < 1.0):
            raise ValueError(f"worker {i + 1}: rates must lie in (0,1), got ({a0}, {a1})")
        if a0 == a1:
            raise ValueError(f"worker {i + 1}: rates must differ, got a0 = a1 = {a0}")
    return out


def psi_crowd(
    rates,
    d: int,
    s: int,
    mode: str = "enumerate",
    replications: int = 100_000,
    seed: int | None = None,
) -> RiskReport:
    """Per-signal-item risk of the m-worker vote aggregator.

    enumerate mode sums the exact pattern masses over {0,1}^m (m <= 20);
    mc mode simulates vote vectors under both hypotheses and reports the
    estimate with its standard error.  Masses are accumulated as direct
    products and direct sums, which keeps the m = 1 case identical to the
    single-worker Bernoulli formula down to the last bit.
    """
    rates = _check_rates(rates)
    _check_d_s(d, s)
    m = len(rates)
    ratio = (d - s) / s
    cut = math.log((d - s) / s)
    weights, intercept = crowd_weights(rates)
    a0 = np.array([r[0] for r in rates])
    a1 = np.array([r[1] for r in rates])

    if mode == "enumerate":
        if m > 20:
            raise ValueError(f"enumeration caps at 20 workers, got {m}")
        n = 1 << m
        idx = np.arange(n)
        llr = np.full(n, intercept)
        mass1 = np.ones(n)
        mass0 = np.ones(n)
        for i in range(m):
            on = ((idx >> i) & 1) == 1
            llr[on] += weights[i]
            mass1[on] *= a1[i]
            mass1[~on] *= 1.0 - a1[i]
            mass0[on] *= a0[i]
            mass0[~on] *= 1.0 - a0[i]
        selected = llr >= cut
        miss = float(np.sum(mass1[~selected]))
        false_pos = float(np.sum(mass0[selected]))
        return RiskReport(
            loss_kind=LossKind.NORMALIZED_HAMMING,
            closed_form=miss + ratio * false_pos,
        )

    if mode != "mc":
        raise ValueError(f"mode must be 'enumerate' or 'mc', got {mode!r}")
    if replications < 1:
        raise ValueError(f"need replications >= 1, got {replications}")
    if seed is None:
        seed = fresh_seed()
    rng = rng_stream(seed, 0)
    votes_on = (rng.random((replications, m)) < a1).astype(float)
    votes_off = (rng.random((replications, m)) < a0).astype(float)
    miss_ind = (votes_on @ weights + intercept < cut).astype(float)
    fp_ind = (votes_off @ weights + intercept >= cut).astype(float)
    estimate = float(miss_ind.mean() + ratio * fp_ind.mean())
    stderr = math.sqrt(
        (miss_ind.var(ddof=1) + ratio * ratio * fp_ind.var(ddof=1)) / replications
    )
    return RiskReport(
        loss_kind=LossKind.NORMALIZED_HAMMING,
        mc_estimate=estimate,
        mc_stderr=stderr,
        replications=replications,
        seed=seed,
    )


class WrongRecoveryBounds(NamedTuple):
    upper_plus: float
    upper_bar: float
    upper_two_sided: float
    lower_plus: float
    lower_bar: float


def wrong_recovery_bounds(
    d: int, s: int, a: float, sigma: float = 1.0
) -> WrongRecoveryBounds:
    """Bounds on P(recovered set != true set) under the least-favorable prior.

    Uppers are the expected Hamming losses s Psi+, s PsiBar, 2 s Psi of the
    one-sided, symmetric, and lower-bound-rate selectors; the matching lowers
    r/(1+r) come from the Hamming risk being concentrated on one-coordinate
    errors at the minimax point.
    """
    sp = s * psi_plus(d, s, a, sigma)
    sb = s * psi_bar(d, s, a, sigma)
    st = 2.0 * (s * psi_two_sided(d, s, a, sigma))
    return WrongRecoveryBounds(
        upper_plus=sp,
        upper_bar=sb,
        upper_two_sided=st,
        lower_plus=sp / (1.0 + sp),
        lower_bar=sb / (1.0 + sb),
    )


class RecoveryBounds(NamedTuple):
    w: float
    delta: float
    lower: float
    upper: float


def delta_bounds(d: int, s: int, a: float, sigma: float = 1.0) -> RecoveryBounds:
    """Two-sided envelope s Phi(-Delta) <= R <= (2 + sqrt(2 pi)) s Phi(-Delta).

    Delta = (a^2/sigma^2 - 2 log((d-s)/s)) / (2 a / sigma) when the numerator
    W is positive.  Below the boundary (W < 0) the lower bound degenerates to
    0 and the upper keeps its W = 0 value; Delta is reported as 0 in both
    degenerate regimes.  Requires 2s < d.
    """
    _check_d_s(d, s)
    _check_a_sigma(a, sigma)
    if 2 * s >= d:
        raise ValueError(f"need 2s < d, got s={s}, d={d}")
    w = a * a / (sigma * sigma) - 2.0 * math.log((d - s) / s)
    if w >= 0.0:
        delta = sigma * w / (2.0 * a)
        tail = numkit.gaussian_cdf(-delta)
        return RecoveryBounds(w, delta, s * tail, _UPPER_CONST * s * tail)
    return RecoveryBounds(w, 0.0, 0.0, _UPPER_CONST * s * 0.5)


class PhasePoint(NamedTuple):
    d: int
    s: int
    a_almost_full: float
    a_exact: float
    t_star: float
    w_star: float


def phase_point(d: int, s: int, sigma: float = 1.0) -> PhasePoint:
    """Signal levels of the almost-full and exact recovery boundaries.

    a_almost_full = sigma sqrt(2 log((d-s)/s)) is where the lower-bound rate
    Psi stops vanishing; a_exact = sigma (sqrt(2 log(d-s)) + sqrt(2 log s))
    is the exact-recovery boundary, where the one-sided minimax threshold
    collapses to t_star = sigma sqrt(2 log(d-s)).  w_star is the matching
    value of the margin W of :func:`delta_bounds`:

        2 log((d-s)/s) + w_star = 2 (sqrt(log(d-s)) + sqrt(log s))^2.

    Requires s >= 2 (so log s > 0) and 2s < d.
    """
    if s < 2:
        raise ValueError(f"need s >= 2, got {s}")
    _check_d_s(d, s)
    if 2 * s >= d:
        raise ValueError(f"need 2s < d, got s={s}, d={d}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError(f"need sigma > 0, got {sigma}")
    log_ratio = math.log((d - s) / s)
    a_almost_full = sigma * math.sqrt(2.0 * log_ratio)
    t_star = sigma * math.sqrt(2.0 * math.log(d - s))
    a_exact = t_star + sigma * math.sqrt(2.0 * math.log(s))
    w_star = 4.0 * (
        math.log(s) + math.sqrt(math.log(s) * math.log(d - s))
    )
    return PhasePoint(d, s, a_almost_full, a_exact, t_star, w_star)


def a0_adaptive(d: int, s: int, A: float, sigma: float = 1.0) -> float:
    """Signal level sigma sqrt(2 L + A sqrt(L)), L = log((d-s)/s); needs 2s < d."""
    _check_d_s(d, s)
    if 2 * s >= d:
        raise ValueError(f"need 2s < d, got s={s}, d={d}")
    if not (A >= 0.0 and math.isfinite(A)):
        raise ValueError(f"need A >= 0, got {A}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError(f"need sigma > 0, got {sigma}")
    log_ratio = math.log((d - s) / s)
    return sigma * math.sqrt(2.0 * log_ratio + A * math.sqrt(log_ratio))


def adaptive_A_min(d: int, s_star: int, c0: float = 16.0) -> float:
    """Smallest planner constant c0 sqrt(log log((d-s*)/s*)) the adaptive
    selector's guarantee asks for; requires (d-s*)/s* > e."""
    _check_d_s(d, s_star)
    if not (c0 > 0.0 and math.isfinite(c0)):
        raise ValueError(f"need c0 > 0, got {c0}")
    log_ratio = math.log((d - s_star) / s_star)
    if log_ratio <= 1.0:
        raise ValueError(
            f"need (d - s_star)/s_star > e for a positive double log, "
            f"got d={d}, s_star={s_star}"
        )
    return c0 * math.sqrt(math.log(log_ratio))
