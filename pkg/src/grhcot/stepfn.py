"""Character partial-sum step function and its Fourier partial sums.

S(x) sums the character over 1..x with half weight at the endpoint,
extended to the real line as an even periodic function of period |D|.
Plateau values over one period live in a cached StepTable; exact and
floating entry points are kept separate so the half-value convention
at jumps is never triggered by floating rounding.
"""

from __future__ import annotations

import functools
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .numkernel import Discriminant, ReducedFraction, chi

__all__ = [
    "StepTable",
    "make_step_table",
    "step_S",
    "fourier_S_partial",
    "breakpoints_in",
    "StepIntegrals",
    "make_step_integrals",
]

ExactLike = (int, Fraction, ReducedFraction)


@dataclass(frozen=True)
class StepTable:
    """Plateau values of S over one period: entry j holds S on (j, j+1)."""

    D: Discriminant
    interval_values: tuple[int, ...]

    def __post_init__(self) -> None:
        period = self.D.modulus
        if len(self.interval_values) != period:
            raise ValueError(
                f"need {period} interval values, got {len(self.interval_values)}"
            )
        if self.interval_values[-1] != 0:
            raise ValueError("plateau just below the period end must be 0")
        prev = self.interval_values[0]
        if prev != 0:
            raise ValueError("plateau on (0,1) must be 0")
        for j in range(1, period):
            cur = self.interval_values[j]
            if cur - prev != chi(self.D, j):
                raise ValueError(f"plateau difference at {j} does not match the character")
            prev = cur
        if min(self.interval_values) < 0:
            raise ValueError("plateau values must be nonnegative")

    @property
    def mean(self) -> Fraction:
        """Average plateau value over one period."""
        return Fraction(sum(self.interval_values), self.D.modulus)

    def max_value(self) -> int:
        return max(self.interval_values)


@functools.lru_cache(maxsize=None)
def _table_cached(d: int) -> StepTable:
    D = Discriminant(d)
    period = D.modulus
    values = []
    acc = 0
    for j in range(period):
        if j > 0:
            acc += chi(D, j)
        values.append(acc)
    return StepTable(D, tuple(values))


def make_step_table(D: Discriminant) -> StepTable:
    """The cached plateau table for D."""
    return _table_cached(D.D)


def _step_exact(D: Discriminant, x: Fraction) -> Fraction:
    table = make_step_table(D)
    period = D.modulus
    t = abs(x) % period
    n = int(t)
    if t == n:
        if n == 0:
            return Fraction(0)
        below = table.interval_values[n - 1]
        return below + Fraction(chi(D, n), 2)
    return Fraction(table.interval_values[n])


def step_S(D: Discriminant, x) -> Fraction | int:
    """S(x): exact rational inputs get jump-midpoint semantics, floats get plateaus.

    Floats closer than a few ulps to a jump raise, because the plateau
    side cannot be decided from the rounded value.
    """
    if isinstance(x, ReducedFraction):
        x = x.as_fraction()
    if isinstance(x, ExactLike):
        return _step_exact(D, Fraction(x))
    table = make_step_table(D)
    period = D.modulus
    t = math.fabs(float(x)) % period
    nearest = round(t)
    tol = 4.0 * sys.float_info.epsilon * max(1.0, abs(float(x)))
    if abs(t - nearest) <= tol:
        j = nearest % period
        if chi(D, j) != 0:
            raise ValueError(
                f"ambiguous breakpoint: {x!r} is within rounding error of a jump of S"
            )
        return table.interval_values[j]
    return table.interval_values[int(t)]


def fourier_S_partial(D: Discriminant, x: float, M: int) -> float:
    """Partial Fourier sum: mean minus (sqrt|D|/pi) sum chi(m) cos(2 pi m x/|D|)/m."""
    if M < 1:
        raise ValueError(f"M must be at least 1, got {M}")
    from .lfun import h_prime

    period = D.modulus
    table = np.array([chi(D, r) for r in range(period)], dtype=np.float64)
    m = np.arange(1, M + 1, dtype=np.int64)
    coeff = table[m % period]
    terms = coeff * np.cos((2.0 * math.pi / period) * m * float(x)) / m
    total = np.add.reduce(terms)
    return float(h_prime(D)) - math.sqrt(period) / math.pi * float(total)


class StepIntegrals:
    """Exact repeated antiderivatives of the mean-zero part of S.

    With g0 = S - mean, the iterated integrals g1, g2, g3 (each shifted to
    mean zero over one period, so all three are periodic) let integrals of
    g0 against u**-w tails be corrected to O(T**-4) exactly:

        int_T^inf g0(u) u**(-w) du =
            -g1(T) T**-w - w g2(T) T**(-w-1) - w(w+1) g3(T) T**(-w-2)
            + w(w+1)(w+2) int_T^inf g3(u) u**(-w-3) du

    and the last remainder is bounded by max|g3| * |w(w+1)(w+2)| * T**(-w-2)/(w+2).
    All node values and means are exact rationals.
    """

    def __init__(self, D: Discriminant):
        table = make_step_table(D)
        P = D.modulus
        hp = table.mean
        v = [Fraction(x) for x in table.interval_values]
        slope = [vj - hp for vj in v]
        a1 = [Fraction(0)]
        for j in range(P):
            a1.append(a1[j] + slope[j])
        # mean of g1 over a period vanishes (g1 is odd about P/2)
        a2 = [Fraction(0)]
        for j in range(P):
            a2.append(a2[j] + a1[j] + slope[j] / 2)
        mean2 = sum(a2[j] + a1[j] / 2 + slope[j] / 6 for j in range(P)) / P
        a3 = [Fraction(0)]
        for j in range(P):
            a3.append(a3[j] + (a2[j] - mean2) + a1[j] / 2 + slope[j] / 6)
        mean3 = sum(
            a3[j] + (a2[j] - mean2) / 2 + a1[j] / 6 + slope[j] / 24 for j in range(P)
        ) / P
        a4 = [Fraction(0)]
        for j in range(P):
            a4.append(
                a4[j] + (a3[j] - mean3) + (a2[j] - mean2) / 2 + a1[j] / 6 + slope[j] / 24
            )
        mean4 = sum(
            a4[j]
            + (a3[j] - mean3) / 2
            + (a2[j] - mean2) / 6
            + a1[j] / 24
            + slope[j] / 120
            for j in range(P)
        ) / P
        self.D = D
        self.period = P
        self.mean = hp
        self._v = v
        self._slope = slope
        self._a1 = a1
        self._a2 = a2
        self._a3 = a3
        self._a4 = a4
        self._mean2 = mean2
        self._mean3 = mean3
        self._mean4 = mean4
        self.max_g1 = max(abs(x) for x in a1) + max(abs(s) for s in slope) / 2
        self.max_g3 = max(abs(x - mean3) for x in a3) + Fraction(1)  # crude pad
        self.max_g4 = max(abs(x - mean4) for x in a4) + Fraction(1)  # crude pad

    def _split(self, t: Fraction) -> tuple[int, Fraction]:
        t = t % self.period
        j = int(t)
        return j, t - j

    def g1(self, t) -> Fraction:
        """int_0^t (S - mean), periodic, mean zero."""
        j, tau = self._split(Fraction(t))
        return self._a1[j] + self._slope[j] * tau

    def g2(self, t) -> Fraction:
        """Mean-zero second antiderivative."""
        j, tau = self._split(Fraction(t))
        return (
            self._a2[j]
            + self._a1[j] * tau
            + self._slope[j] * tau * tau / 2
            - self._mean2
        )

    def g3(self, t) -> Fraction:
        """Mean-zero third antiderivative."""
        j, tau = self._split(Fraction(t))
        return (
            self._a3[j]
            + (self._a2[j] - self._mean2) * tau
            + self._a1[j] * tau * tau / 2
            + self._slope[j] * tau**3 / 6
            - self._mean3
        )

    def g4(self, t) -> Fraction:
        """Mean-zero fourth antiderivative."""
        j, tau = self._split(Fraction(t))
        return (
            self._a4[j]
            + (self._a3[j] - self._mean3) * tau
            + (self._a2[j] - self._mean2) * tau * tau / 2
            + self._a1[j] * tau**3 / 6
            + self._slope[j] * tau**4 / 24
            - self._mean4
        )

    def tail_m1(self, T, p) -> complex:
        """int_T^inf g1(u) u**(-p) du for Re(p) > 1.

        Truncated at the g4 level; the dropped remainder is
        p(p+1)(p+2) int_T^inf g4(u) u**(-p-3) du, bounded by
        max|g4| |p(p+1)(p+2)| T**(-Re p - 2) / (Re p + 2).
        """
        TF = Fraction(T)
        p = complex(p)
        tp = complex(T) ** (-p)
        return (
            -float(self.g2(TF)) * tp
            - p * float(self.g3(TF)) * tp / T
            - p * (p + 1) * float(self.g4(TF)) * tp / T**2
        )

    def tail_m2(self, T, p) -> complex:
        """int_T^inf g2(u) u**(-p) du for Re(p) > 1, truncated at the g4 level."""
        TF = Fraction(T)
        p = complex(p)
        tp = complex(T) ** (-p)
        return -float(self.g3(TF)) * tp - p * float(self.g4(TF)) * tp / T

    def tail_m3(self, T, p) -> complex:
        """int_T^inf g3(u) u**(-p) du for Re(p) > 1, truncated at the g4 level."""
        TF = Fraction(T)
        p = complex(p)
        return -float(self.g4(TF)) * complex(T) ** (-p)

    def tail_integral_inv_square(self, T) -> float:
        """int_T^inf (S(u) - mean) u**-2 du, exact to O(max|g3|/T**4)."""
        T = Fraction(T)
        val = -self.g1(T) / T**2 - 2 * self.g2(T) / T**3 - 6 * self.g3(T) / T**4
        return float(val)

    def tail_integral_power(self, T: float, w) -> complex:
        """int_T^inf (S(u) - mean) u**(-w) du for Re(w) > 1, to O(T**(-Re w - 2))."""
        TF = Fraction(T)
        g1 = float(self.g1(TF))
        g2 = float(self.g2(TF))
        g3 = float(self.g3(TF))
        tw = complex(T) ** (-w)
        return -g1 * tw / T - w * g2 * tw / T**2 - w * (w + 1) * g3 * tw / T**3


@functools.lru_cache(maxsize=None)
def _integrals_cached(d: int) -> StepIntegrals:
    return StepIntegrals(Discriminant(d))


def make_step_integrals(D: Discriminant) -> StepIntegrals:
    """Cached exact antiderivative data for D."""
    return _integrals_cached(D.D)


def breakpoints_in(D: Discriminant, interval: tuple, scale=1) -> list:
    """Sorted jump points of t -> S(scale*t) in the half-open interval (lo, hi].

    Exact scale (int or Fraction) gives exact Fraction breakpoints; a float
    scale gives float breakpoints.
    """
    lo, hi = interval
    if hi < lo:
        raise ValueError(f"empty interval ({lo}, {hi})")
    if scale == 0:
        raise ValueError("scale must be nonzero")
    if isinstance(scale, ReducedFraction):
        scale = scale.as_fraction()
    exact = isinstance(scale, ExactLike) and isinstance(lo, ExactLike) and isinstance(hi, ExactLike)
    period = D.modulus
    a = abs(Fraction(scale) if exact else Fraction(float(scale)))
    # jumps of S(u) sit at integers u = j with chi(|j|) != 0; t = j / scale
    j_lo = a * Fraction(lo) if exact else Fraction(float(lo)) * a
    j_hi = a * Fraction(hi) if exact else Fraction(float(hi)) * a
    out = []
    j_start = math.floor(j_lo) + 1 if j_lo == math.floor(j_lo) else math.ceil(j_lo)
    for j in range(j_start, math.floor(j_hi) + 1):
        if chi(D, abs(j) % period) != 0:
            t = Fraction(j) / a
            out.append(t if exact else float(t))
    return out
