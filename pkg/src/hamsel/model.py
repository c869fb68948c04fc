"""Shared domain types: problem classes, supports, selector specs, reports.

Immutable value objects only; random state is always passed explicitly as a
``numpy.random.Generator``.  Indices are 0-based internally and 1-based in
every user-facing serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np


class DataFormatError(ValueError):
    """Malformed user-supplied data file (message carries the line number)."""


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    POISSON = "poisson"


class LossKind(str, Enum):
    HAMMING = "hamming"
    NORMALIZED_HAMMING = "normalized-hamming"
    WRONG_RECOVERY = "wrong-recovery"


# ---------------------------------------------------------------------------
# Signal classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerBound:
    """One-sided class: s support coordinates with theta_j >= a, rest 0."""

    a: float


@dataclass(frozen=True)
class TwoSided:
    """Symmetric class: s support coordinates with |theta_j| >= a, rest 0."""

    a: float


@dataclass(frozen=True)
class Interval:
    """Two-value class: support coordinates at level a1, others at a0.

    For the Gaussian family a0 < a1 are arbitrary means (a0 = 0 recovers the
    one-sided class); for Bernoulli/Poisson they are the two rates.
    """

    a0: float
    a1: float


Signal = Union[LowerBound, TwoSided, Interval]


@dataclass(frozen=True)
class ProblemInstance:
    """A fully specified selection problem.

    Parameters
    ----------
    d, s : int
        Dimension and sparsity, 1 <= s < d.
    signal : Signal
        Signal-strength description; LowerBound/TwoSided are Gaussian-only,
        Interval covers the two-distribution setting for every family.
    family : Family
        Noise family.
    sigma : float
        Gaussian noise level (ignored by Bernoulli/Poisson but kept positive
        for uniformity).
    """

    d: int
    s: int
    signal: Signal
    family: Family = Family.GAUSSIAN
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"need d >= 2, got d={self.d}")
        if not 1 <= self.s < self.d:
            raise ValueError(f"need 1 <= s < d, got s={self.s}, d={self.d}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"need sigma > 0, got {self.sigma}")
        sig = self.signal
        if isinstance(sig, (LowerBound, TwoSided)):
            if self.family is not Family.GAUSSIAN:
                raise ValueError(
                    f"{type(sig).__name__} signal requires the Gaussian family"
                )
            if not (sig.a > 0.0 and math.isfinite(sig.a)):
                raise ValueError(f"need signal level a > 0, got {sig.a}")
        elif isinstance(sig, Interval):
            if not (math.isfinite(sig.a0) and math.isfinite(sig.a1)):
                raise ValueError("interval endpoints must be finite")
            if not sig.a0 < sig.a1:
                raise ValueError(f"need a0 < a1, got a0={sig.a0}, a1={sig.a1}")
            if self.family is Family.BERNOULLI:
                if not (0.0 < sig.a0 and sig.a1 < 1.0):
                    raise ValueError(
                        f"Bernoulli rates must lie in (0,1), got ({sig.a0}, {sig.a1})"
                    )
            elif self.family is Family.POISSON:
                if not sig.a0 > 0.0:
                    raise ValueError(f"Poisson rates must be positive, got a0={sig.a0}")
        else:
            raise TypeError(f"unknown signal type {type(sig).__name__}")

    @property
    def ratio(self) -> float:
        """(d - s)/s computed from exact integers before the division."""
        return (self.d - self.s) / self.s

    @property
    def log_ratio(self) -> float:
        return math.log((self.d - self.s) / self.s)


# ---------------------------------------------------------------------------
# Supports
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SupportVector:
    """Binary support pattern eta in {0,1}^d, stored as a read-only bool array."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("support bits must be a nonempty 1-d array")
        if b.dtype != np.bool_:
            vals = np.unique(b)
            if not np.isin(vals, (0, 1)).all():
                raise ValueError("support bits must be 0/1 valued")
            b = b.astype(bool)
        else:
            b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def d(self) -> int:
        return int(self.bits.size)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.bits))

    def indices(self) -> list[int]:
        """Selected positions, 1-based, ascending (the I/O convention)."""
        return [int(j) + 1 for j in np.flatnonzero(self.bits)]

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_indices(cls, d: int, indices_one_based) -> "SupportVector":
        bits = np.zeros(d, dtype=bool)
        for i in indices_one_based:
            if not 1 <= i <= d:
                raise ValueError(f"index {i} outside 1..{d}")
            bits[i - 1] = True
        return cls(bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SupportVector):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    __hash__ = None  # type: ignore[assignment]


def hamming_distance(u: SupportVector, v: SupportVector) -> int:
    """Number of positions where the two supports differ."""
    if u.d != v.d:
        raise ValueError(f"length mismatch: {u.d} vs {v.d}")
    return int(np.count_nonzero(u.bits != v.bits))


def support_summary(sv: SupportVector) -> dict:
    """JSON-ready view: 1-based indices plus the bitstring."""
    return {"selected": sv.indices(), "bits": sv.bitstring()}


# ---------------------------------------------------------------------------
# Selector specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OneSidedThreshold:
    """Select j iff x_j >= t."""

    t: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError(f"threshold must be finite, got {self.t}")


@dataclass(frozen=True)
class TwoSidedThreshold:
    """Select j iff |x_j| >= t, t >= 0."""

    t: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"two-sided threshold must be finite and >= 0, got {self.t}")


@dataclass(frozen=True)
class CoshLLR:
    """Select j iff log cosh(a x_j / sigma^2) >= t."""

    a: float
    t: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"need a > 0, got {self.a}")
        if not math.isfinite(self.t):
            raise ValueError(f"threshold must be finite, got {self.t}")


@dataclass(frozen=True)
class GeneralLLR:
    """Family likelihood-ratio selector at the canonical cut log((d-s)/s).

    Parameters come from the ProblemInstance it is run against (the cut is
    definitional, so this selector description carries no fields).
    """


@dataclass(frozen=True)
class TopS:
    """Select the s largest coordinates (by value, or by |value|)."""

    s: int
    one_sided: bool = True

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError(f"need s >= 1, got {self.s}")


@dataclass(frozen=True)
class Universal:
    """Two-sided threshold at sigma * sqrt(2 log d)."""

    d: int

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"need d >= 2, got {self.d}")


@dataclass(frozen=True)
class Adaptive:
    """Dyadic-grid data-driven threshold up to sparsity budget s_star.

    c0 is the planner constant of the signal-strength condition; the
    selector itself never uses it, it is carried for experiment configs.
    """

    s_star: int
    c0: float = 16.0

    def __post_init__(self) -> None:
        if self.s_star < 2:
            raise ValueError(f"need s_star >= 2, got {self.s_star}")
        if not (self.c0 > 0.0):
            raise ValueError(f"need c0 > 0, got {self.c0}")


SelectorSpec = Union[
    OneSidedThreshold,
    TwoSidedThreshold,
    CoshLLR,
    GeneralLLR,
    TopS,
    Universal,
    Adaptive,
]


# ---------------------------------------------------------------------------
# Crowdsourcing
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CrowdInstance:
    """m workers voting on d items, with per-worker error rates.

    rates[i] = (a_i0, a_i1): probability of voting 1 off-support and
    on-support respectively, both in (0,1), a_i0 != a_i1 (a worker may be
    anti-informative: a_i0 > a_i1 simply flips the sign of its weight).
    """

    votes: np.ndarray
    rates: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        v = np.asarray(self.votes)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("votes must be a nonempty m x d matrix")
        if not np.isin(np.unique(v), (0, 1)).all():
            raise ValueError("votes must be 0/1 valued")
        v = v.astype(np.int8)
        v.setflags(write=False)
        rates = tuple((float(a0), float(a1)) for a0, a1 in self.rates)
        if len(rates) != v.shape[0]:
            raise ValueError(
                f"got {len(rates)} rate pairs for {v.shape[0]} workers"
            )
        for i, (a0, a1) in enumerate(rates):
            if not (0.0 < a0 < 1.0 and 0.0 < a1 < 1.0):
                raise ValueError(f"worker {i + 1}: rates must lie in (0,1), got ({a0}, {a1})")
            if a0 == a1:
                raise ValueError(f"worker {i + 1}: rates must differ, got a0 = a1 = {a0}")
        object.__setattr__(self, "votes", v)
        object.__setattr__(self, "rates", rates)

    @property
    def m(self) -> int:
        return int(self.votes.shape[0])

    @property
    def d(self) -> int:
        return int(self.votes.shape[1])


# ---------------------------------------------------------------------------
# Risk reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskReport:
    """Closed-form and/or Monte Carlo risk values on a common footing."""

    loss_kind: LossKind
    closed_form: float | None = None
    bound_lower: float | None = None
    bound_upper: float | None = None
    mc_estimate: float | None = None
    mc_stderr: float | None = None
    replications: int = 0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.closed_form is None and self.mc_estimate is None:
            raise ValueError("report needs a closed form or an MC estimate")
        if self.mc_estimate is not None:
            if self.replications < 1:
                raise ValueError("MC estimate requires replications >= 1")
            if self.mc_stderr is None or self.mc_stderr < 0.0:
                raise ValueError(f"need mc_stderr >= 0, got {self.mc_stderr}")
        if (self.bound_lower is not None and self.bound_upper is not None
                and self.bound_lower > self.bound_upper):
            raise ValueError("bound_lower exceeds bound_upper")

    def to_dict(self) -> dict:
        return {
            "loss": self.loss_kind.value,
            "closed_form": self.closed_form,
            "bound_lower": self.bound_lower,
            "bound_upper": self.bound_upper,
            "estimate": self.mc_estimate,
            "stderr": self.mc_stderr,
            "replications": self.replications,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


def rng_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream: an independent generator per (seed, index).

    Philox keyed by the pair makes replication #index reproducible on its
    own, so parallel schedules and sequential runs give identical draws.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if not 0 <= index < 2**64:
        raise ValueError(f"stream index out of range: {index}")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def fresh_seed() -> int:
    """OS-entropy 64-bit seed for runs where the caller supplied none.

    Callers must echo it back in their output, otherwise the run cannot be
    reproduced.
    """
    return int(np.random.SeedSequence().entropy) & (2**64 - 1)


def uniform_support(d: int, s: int, rng: np.random.Generator) -> SupportVector:
    """Uniformly random s-subset of {1..d} as a support vector.

    Fisher-Yates via ``rng.permutation``: exact uniformity, O(d).  s = d is
    allowed (the full support is forced).
    """
    if not 1 <= s <= d:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={d}")
    bits = np.zeros(d, dtype=bool)
    bits[rng.permutation(d)[:s]] = True
    return SupportVector(bits)


def least_favorable_draw(
    p: ProblemInstance, rng: np.random.Generator
) -> tuple[np.ndarray, SupportVector]:
    """Draw (theta, eta) from the least-favorable prior of p's class.

    LowerBound: support uniform over s-subsets, all signal values equal to a.
    TwoSided: additionally one global sign flip with probability 1/2 (the
    mixture of the two pure-sign priors), not per-coordinate signs.

    Draw order is part of the reproducibility contract: the support
    permutation is consumed first, then (TwoSided only) the sign.
    """
    if p.family is not Family.GAUSSIAN:
        raise ValueError("least-favorable draws are defined for the Gaussian family")
    sig = p.signal
    if isinstance(sig, Interval):
        raise ValueError(
            "Interval class has a fixed two-point least-favorable configuration; "
            "draw only the support"
        )
    eta = uniform_support(p.d, p.s, rng)
    value = sig.a
    if isinstance(sig, TwoSided) and rng.random() < 0.5:
        value = -sig.a
    theta = np.where(eta.bits, value, 0.0)
    return theta, eta


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def read_observations_csv(path: str) -> np.ndarray:
    """One numeric value per line, no header."""
    values: list[float] = []
    blank_at: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                if blank_at is None:
                    blank_at = ln
                continue
            if blank_at is not None:
                raise DataFormatError(f"{path}: line {blank_at}: empty row")
            try:
                val = float(text)
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {ln}: not a number: {text!r}"
                ) from None
            if not math.isfinite(val):
                raise DataFormatError(f"{path}: line {ln}: non-finite value {text!r}")
            values.append(val)
    if not values:
        raise DataFormatError(f"{path}: empty observations file")
    return np.asarray(values, dtype=float)


def read_votes_csv(path: str) -> np.ndarray:
    """m header-less rows of d comma-separated 0/1 entries."""
    rows: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            fields = [f.strip() for f in text.split(",")]
            row = []
            for f in fields:
                if f not in ("0", "1"):
                    raise DataFormatError(
                        f"{path}: line {ln}: vote entries must be 0 or 1, got {f!r}"
                    )
                row.append(int(f))
            if rows and len(row) != len(rows[0]):
                raise DataFormatError(
                    f"{path}: line {ln}: expected {len(rows[0])} entries, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: empty votes file")
    return np.asarray(rows, dtype=np.int8)


def read_rates_csv(path: str) -> list[tuple[float, float]]:
    """m rows of "a_i0,a_i1"."""
    rates: list[tuple[float, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            fields = text.split(",")
            if len(fields) != 2:
                raise DataFormatError(
                    f"{path}: line {ln}: expected 'a0,a1', got {text!r}"
                )
            try:
                a0, a1 = float(fields[0]), float(fields[1])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {ln}: not numeric: {text!r}"
                ) from None
            rates.append((a0, a1))
    if not rates:
        raise DataFormatError(f"{path}: empty rates file")
    return rates
