"""Payoff model for a minted rNFT.

A token pays a one-off price ``p0`` split between itself and its referents,
settling a fraction ``lambda`` up front and the rest in ``d`` compounding
installments. It earns a geometrically decaying reward for every later token
that refers to it. Utility is income minus outcome.

Analysis quantities are floats. Settlement (the share vector) is exact, in
integer minor units.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from rnft.errors import (
    CountShapeMismatch,
    InvalidParams,
    InvalidWeights,
    SigmaOutOfRange,
    StepTooLarge,
)

MINOR_UNITS = 10**6
WEIGHT_TOLERANCE = 1e-9

DEFAULT_STEP = 1e-4
DEFAULT_RTOL = 1e-6


@dataclass(frozen=True)
class IncentiveParams:
    o_hat: float = 100.0
    lam: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0
    g: float = 4.0
    k_scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.o_hat) and self.o_hat > 0):
            raise InvalidParams(f"O_hat must be > 0, got {self.o_hat!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParams(f"lambda must be in [0, 1], got {self.lam!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParams(f"alpha must be in [0, 1], got {self.alpha!r}")
        for name in ("beta", "g", "k_scale"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParams(f"{name} must be > 0, got {value!r}")

    _JSON_KEYS = {
        "O_hat": "o_hat",
        "lambda": "lam",
        "alpha": "alpha",
        "beta": "beta",
        "g": "g",
        "k_scale": "k_scale",
    }

    def to_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in self._JSON_KEYS.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "IncentiveParams":
        unknown = set(data) - set(cls._JSON_KEYS)
        if unknown:
            raise InvalidParams(f"unknown parameter keys {sorted(unknown)}")
        try:
            kwargs = {cls._JSON_KEYS[k]: float(v) for k, v in data.items()}
        except (TypeError, ValueError) as exc:
            raise InvalidParams(str(exc)) from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "IncentiveParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class WeightVector:
    """Self weight ``w0`` plus cross weights aligned with the referring list."""

    w0: float
    cross: tuple[float, ...] = ()

    def __post_init__(self):
        entries = (self.w0, *self.cross)
        if any(not math.isfinite(w) or w < 0 for w in entries):
            raise InvalidWeights(f"weights must be finite and non-negative: {entries}")
        if abs(math.fsum(entries) - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidWeights(f"weights must sum to 1, got {math.fsum(entries)!r}")

    @classmethod
    def from_profit_sharing(cls, profit_sharing: Sequence[float]) -> "WeightVector":
        cross = tuple(float(w) for w in profit_sharing)
        w0 = 1.0 - math.fsum(cross)
        if -WEIGHT_TOLERANCE <= w0 < 0:
            w0 = 0.0
        return cls(w0, cross)

    @classmethod
    def original(cls) -> "WeightVector":
        return cls(1.0, ())

    def as_list(self) -> list[float]:
        return [self.w0, *self.cross]


@dataclass(frozen=True)
class PayoffBreakdown:
    p0: float
    r: float
    sigma: float
    d: int
    outcome: float
    income_schedule: tuple[float, ...]
    income: float
    utility: float
    referrer_counts: tuple[int, ...] = ()

    def as_row(self) -> dict:
        return {
            "p0": self.p0,
            "r": self.r,
            "sigma": self.sigma,
            "d": self.d,
            "outcome": self.outcome,
            "income": self.income,
            "utility": self.utility,
        }


@dataclass(frozen=True)
class HessianProbe:
    """Second partials of utility in the free coordinates (sigma, r).

    ``A``, ``B``, ``C`` and ``det`` are the analytic values; the ``fd_*``
    fields hold the central finite-difference estimates they were checked
    against.
    """

    A: float
    B: float
    C: float
    det: float
    classification: str
    fd_A: float = 0.0
    fd_B: float = 0.0
    fd_C: float = 0.0
    fd_det: float = 0.0
    sigma: float = 0.0
    r: float = 0.0
    step: float = DEFAULT_STEP


def interest_rate(params: IncentiveParams, weights: WeightVector) -> float:
    """r = alpha * (sum of cross weights), which is alpha * (1 - w0)."""
    return params.alpha * math.fsum(weights.cross)


def descending_rate(params: IncentiveParams, weights: WeightVector) -> float:
    """sigma = 1 / (w0 + beta), defined only when that lands in (0, 1]."""
    denom = weights.w0 + params.beta
    if denom < 1.0:
        raise SigmaOutOfRange(
            f"w0 + beta = {denom!r} < 1 puts sigma outside (0, 1]"
        )
    return 1.0 / denom


def payment_depth(params: IncentiveParams) -> int:
    if params.lam == 1.0:
        return 0
    return max(1, math.floor(params.g * (1.0 - params.lam)))


def allocate_largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    """Split ``total`` integer units proportionally to ``weights``, summing exactly.

    Floors every exact quota, then hands the leftover units to the largest
    fractional remainders (lowest index first on ties).
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    fracs = [Fraction(w) for w in weights]
    if not fracs or any(f < 0 for f in fracs):
        raise InvalidWeights("need at least one non-negative weight")
    denom = sum(fracs)
    if denom == 0:
        raise InvalidWeights("weights sum to zero")
    quotas = [f * total / denom for f in fracs]
    shares = [math.floor(q) for q in quotas]
    leftover = total - sum(shares)
    by_remainder = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in by_remainder[:leftover]:
        shares[i] += 1
    return shares


def to_minor_units(amount: float) -> int:
    return int(round(Fraction(amount) * MINOR_UNITS))


def initial_price(params: IncentiveParams, weights: WeightVector) -> tuple[float, list[int]]:
    """Return ``p0`` and its distribution ``[self, referent_1, ...]`` in minor units."""
    p0 = params.o_hat
    return p0, allocate_largest_remainder(to_minor_units(p0), weights.as_list())


def outcome(p0: float, lam: float, d: int, r: float) -> float:
    """Up-front part plus ``d`` equal installments compounded at ``r`` per round."""
    if d == 0 or r == 0:
        # zero interest: the installments add back up to the deferred remainder
        return p0
    installment = p0 * (1.0 - lam) / d
    terms = [lam * p0]
    growth = 1.0
    for _ in range(d):
        growth *= 1.0 + r
        terms.append(growth * installment)
    return math.fsum(terms)


def outcome_closed_form(p0: float, lam: float, d: int, r: float) -> float:
    if d == 0 or r == 0:
        return p0
    installment = p0 * (1.0 - lam) / d
    # (1+r) * ((1+r)^d - 1) / r, with expm1/log1p to stay accurate for tiny r
    series = (1.0 + r) * math.expm1(d * math.log1p(r)) / r
    return lam * p0 + series * installment


def outcome_of(params: IncentiveParams, weights: WeightVector) -> float:
    return outcome(
        params.o_hat, params.lam, payment_depth(params), interest_rate(params, weights)
    )


def income(k: float, sigma: float, counts: Sequence[int]) -> tuple[list[float], float]:
    """Round ``j`` (1-based) earns ``k * sigma**j * counts[j-1]``."""
    schedule = []
    power = 1.0
    for c in counts:
        power *= sigma
        schedule.append(k * power * c)
    return schedule, math.fsum(schedule)


def income_of(
    params: IncentiveParams, weights: WeightVector, referrer_counts: Sequence[int]
) -> tuple[list[float], float]:
    d = payment_depth(params)
    if len(referrer_counts) != d:
        raise CountShapeMismatch(f"{len(referrer_counts)} counts for depth {d}")
    return income(params.k_scale, descending_rate(params, weights), referrer_counts)


def utility(
    sigma: float,
    r: float,
    *,
    p0: float,
    lam: float,
    d: int,
    k: float,
    counts: Sequence[int],
) -> float:
    """Utility with (sigma, r) treated as free coordinates."""
    if len(counts) != d:
        raise CountShapeMismatch(f"{len(counts)} counts for depth {d}")
    return income(k, sigma, counts)[1] - outcome(p0, lam, d, r)


def payoff(
    params: IncentiveParams, weights: WeightVector, referrer_counts: Sequence[int]
) -> PayoffBreakdown:
    d = payment_depth(params)
    r = interest_rate(params, weights)
    sigma = descending_rate(params, weights)
    p0, _ = initial_price(params, weights)
    schedule, total_income = income_of(params, weights, referrer_counts)
    spent = outcome_of(params, weights)
    return PayoffBreakdown(
        p0=p0,
        r=r,
        sigma=sigma,
        d=d,
        outcome=spent,
        income_schedule=tuple(schedule),
        income=total_income,
        utility=total_income - spent,
        referrer_counts=tuple(referrer_counts),
    )


def payoff_of(graph, token_id: int, params: IncentiveParams) -> PayoffBreakdown:
    """Payoff of a registered token, counting its referrers over the next ``d`` heights."""
    weights = WeightVector.from_profit_sharing(graph.profit_sharing_of(token_id))
    counts = graph.referrer_counts_by_height(token_id, payment_depth(params))
    return payoff(params, weights, counts)


def analytic_hessian(
    sigma: float, r: float, *, p0: float, lam: float, d: int, k: float, counts: Sequence[int]
) -> tuple[float, float, float]:
    a = math.fsum(
        k * j * (j - 1) * sigma ** (j - 2) * c for j, c in enumerate(counts, start=1) if j >= 2
    )
    installment = p0 * (1.0 - lam) / d if d else 0.0
    c_ = -math.fsum(
        j * (j - 1) * (1.0 + r) ** (j - 2) * installment for j in range(2, d + 1)
    )
    return a, 0.0, c_


def exact_utility(
    sigma: Fraction,
    r: Fraction,
    *,
    p0: float,
    lam: float,
    d: int,
    k: float,
    counts: Sequence[int],
) -> Fraction:
    """:func:`utility` in exact rational arithmetic (floats convert losslessly)."""
    k, p0, lam = Fraction(k), Fraction(p0), Fraction(lam)
    earned = sum(k * sigma**j * c for j, c in enumerate(counts, start=1))
    if d == 0:
        return earned - p0
    installment = p0 * (1 - lam) / d
    spent = lam * p0 + sum((1 + r) ** j * installment for j in range(1, d + 1))
    return earned - spent


def finite_difference_hessian(f, x, y, h) -> tuple[float, float, float]:
    """Central second differences of ``f(x, y)``: (f_xx, f_xy, f_yy).

    Arguments may be Fractions, in which case ``f`` should be exact and the
    only error left is the O(h**2) truncation term.
    """
    f0 = f(x, y)
    fxx = (f(x + h, y) - 2 * f0 + f(x - h, y)) / (h * h)
    fyy = (f(x, y + h) - 2 * f0 + f(x, y - h)) / (h * h)
    fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h)
    return float(fxx), float(fxy), float(fyy)


def classify(det: float) -> str:
    if det < 0:
        return "non-convex"
    if det == 0:
        return "degenerate"
    return "convex-candidate"


def hessian_probe(
    params: IncentiveParams,
    weights: WeightVector,
    referrer_counts: Sequence[int],
    step: float = DEFAULT_STEP,
    *,
    sigma: Optional[float] = None,
    r: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
) -> HessianProbe:
    """Curvature of utility in (sigma, r), analytic and by finite differences.

    ``sigma`` and ``r`` default to the values derived from ``params`` and
    ``weights``; pass them to probe an arbitrary point. The difference
    quotients are evaluated exactly, so they carry truncation error only.
    Raises :class:`StepTooLarge` if the two routes disagree beyond ``rtol``
    (relative to the analytic value, or absolute when that is zero).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    d = payment_depth(params)
    if sigma is None:
        sigma = descending_rate(params, weights)
    if r is None:
        r = interest_rate(params, weights)
    if len(referrer_counts) != d:
        raise CountShapeMismatch(f"{len(referrer_counts)} counts for depth {d}")
    model = dict(p0=params.o_hat, lam=params.lam, d=d, k=params.k_scale, counts=referrer_counts)

    a, b, c = analytic_hessian(sigma, r, **model)
    fd_a, fd_b, fd_c = finite_difference_hessian(
        lambda s, q: exact_utility(s, q, **model), Fraction(sigma), Fraction(r), Fraction(step)
    )
    for name, exact, approx in (("A", a, fd_a), ("B", b, fd_b), ("C", c, fd_c)):
        if abs(approx - exact) > rtol * max(abs(exact), 1.0):
            raise StepTooLarge(
                f"finite-difference {name}={approx!r} disagrees with analytic {exact!r} "
                f"at step {step!r}"
            )
    det = a * c - b * b
    return HessianProbe(
        A=a,
        B=b,
        C=c,
        det=det,
        classification=classify(det),
        fd_A=fd_a,
        fd_B=fd_b,
        fd_C=fd_c,
        fd_det=fd_a * fd_c - fd_b * fd_b,
        sigma=sigma,
        r=r,
        step=step,
    )
