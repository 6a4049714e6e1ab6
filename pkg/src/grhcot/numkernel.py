"""Exact integer and rational arithmetic shared by the whole package.

Quadratic characters via the Kronecker symbol, classical arithmetic
functions (divisor sums, Bernoulli numbers, up/down numbers), reduced
fractions, fundamental discriminants, and the precision contract that
every floating-point operation in the package works against.

All types here are immutable values and all functions are pure.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "PrecisionContext",
    "ReducedFraction",
    "Discriminant",
    "chi",
    "divisor_sigma",
    "bernoulli",
    "updown",
    "reduce",
]


@dataclass(frozen=True)
class PrecisionContext:
    """Target relative error and a hard cap on series/quadrature terms."""

    rel_tol: float = 1e-12
    term_budget: int = 10_000_000

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0.0):
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.term_budget < 1:
            raise ValueError(
                f"term_budget must be at least 1, got {self.term_budget}"
            )


@dataclass(frozen=True, order=True)
class ReducedFraction:
    """Nonnegative rational num/den in lowest terms."""

    num: int
    den: int = 1

    def __post_init__(self) -> None:
        if self.num < 0:
            raise ValueError(f"num must be nonnegative, got {self.num}")
        if self.den < 1:
            raise ValueError(f"den must be positive, got {self.den}")
        if math.gcd(self.num, self.den) != 1:
            raise ValueError(f"{self.num}/{self.den} is not in lowest terms")

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __float__(self) -> float:
        return self.num / self.den

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


def _squarefree(n: int) -> bool:
    # n >= 1
    if n % 4 == 0:
        return False
    p = 3
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 2
    return True


@dataclass(frozen=True)
class Discriminant:
    """Fundamental discriminant D < 0 of an imaginary quadratic field."""

    D: int

    def __post_init__(self) -> None:
        d = self.D
        if d >= 0:
            raise ValueError(f"discriminant must be negative, got {d}")
        if d % 4 == 1:
            ok = _squarefree(-d)
        elif d % 4 == 0:
            m = d // 4
            ok = m % 4 in (2, 3) and _squarefree(-m)
        else:
            ok = False
        if not ok:
            raise ValueError(f"{d} is not a fundamental discriminant")

    @property
    def modulus(self) -> int:
        """Conductor |D| of the character chi(D, .)."""
        return -self.D


def _kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) for arbitrary integers."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -1
    if n % 2 == 0:
        if a % 2 == 0:
            return 0
        e = 0
        while n % 2 == 0:
            n //= 2
            e += 1
        if e % 2 == 1 and a % 8 in (3, 5):
            result = -result
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    if n != 1:
        return 0
    return result


@functools.lru_cache(maxsize=None)
def _chi_table(d: int) -> tuple[int, ...]:
    """chi values on one full period, indexed by residue mod |D|."""
    return tuple(_kronecker(d, r) for r in range(-d))


def chi(D: Discriminant, n: int) -> int:
    """Quadratic character chi_D(n), the Kronecker symbol (D|n)."""
    table = _chi_table(D.D)
    if n >= 0:
        return table[n % len(table)]
    # period |D| only holds for n > 0; negative n goes through the symbol
    return _kronecker(D.D, n)


def divisor_sigma(nu: int, n: int) -> int:
    """Sum of d**nu over the positive divisors d of n."""
    if nu < 0:
        raise ValueError(f"nu must be nonnegative, got {nu}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    total = 0
    i = 1
    while i * i <= n:
        if n % i == 0:
            total += i**nu
            j = n // i
            if j != i:
                total += j**nu
        i += 1
    return total


@functools.lru_cache(maxsize=None)
def _bernoulli_upto(m: int) -> tuple[Fraction, ...]:
    """B_0..B_m by the defining recurrence, exact."""
    if m == 0:
        return (Fraction(1),)
    prev = _bernoulli_upto(m - 1)
    # sum_{j=0}^{m} C(m+1, j) B_j = 0
    acc = Fraction(0)
    for j, bj in enumerate(prev):
        acc += math.comb(m + 1, j) * bj
    return prev + (Fraction(-acc, m + 1),)


def bernoulli(k: int) -> Fraction:
    """Exact Bernoulli number B_k for even k >= 2."""
    if k < 2 or k % 2 != 0:
        raise ValueError(f"k must be an even integer >= 2, got {k}")
    return _bernoulli_upto(k)[k]


def updown(k: int) -> int:
    """Number of alternating permutations of {1..k}, by the Seidel triangle."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    row = [1]
    for i in range(1, k + 1):
        new = [0]
        for j in range(i):
            new.append(new[-1] + row[i - 1 - j])
        row = new
    return row[-1]


def reduce(m: int, n: int) -> tuple[ReducedFraction, int]:
    """m/n in lowest terms together with the common factor removed."""
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got {m}, {n}")
    g = math.gcd(m, n)
    return ReducedFraction(m // g, n // g), g
