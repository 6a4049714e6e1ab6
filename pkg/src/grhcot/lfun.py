"""Dirichlet L-functions for odd real characters, and Mellin cross-checks.

L(s) is assembled from Hurwitz zeta values at the character residues;
Hurwitz zeta itself is Euler-Maclaurin with a fixed Bernoulli order and
an imaginary-part-aware shift. The regulated variant (pole subtracted)
makes the character sum stable arbitrarily close to s = 1, where the
individual zeta terms blow up but their combination does not.
"""

from __future__ import annotations

import cmath
import functools
import math
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError
from .numkernel import Discriminant, PrecisionContext, bernoulli, chi
from .stepfn import make_step_integrals, make_step_table

__all__ = [
    "DEFAULT_CTX",
    "hurwitz_zeta",
    "L_chi",
    "h_prime",
    "mellin_C_check",
    "mellin_S_check",
]

DEFAULT_CTX = PrecisionContext(rel_tol=1e-12, term_budget=10_000_000)

_EM_ORDER = 12
_B_OVER_FACT = [float(bernoulli(2 * j) / math.factorial(2 * j)) for j in range(1, _EM_ORDER + 1)]


def _hurwitz_reg(s: complex, a: float, ctx: PrecisionContext) -> complex:
    """zeta(s, a) - 1/(s-1): entire in s, so usable at and near s = 1."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    s = complex(s)
    im = abs(s.imag)
    N = max(0, math.ceil(10.0 + im - a))
    while True:
        if N > ctx.term_budget:
            raise BudgetExceededError(
                f"hurwitz_zeta needed more than {ctx.term_budget} direct terms"
            )
        if N:
            k = np.arange(N, dtype=np.float64) + a
            direct = complex(np.add.reduce(np.exp(-s * np.log(k))))
        else:
            direct = 0.0 + 0.0j
        x = a + N
        lx = math.log(x)
        w = (1.0 - s) * lx
        if s == 1.0:
            tail = complex(-lx)
        elif abs(w) <= 0.5:
            acc = 0.0 + 0.0j
            term = 1.0 + 0.0j
            for k2 in range(1, 18):
                acc += term
                term *= w / (k2 + 1)
            tail = -lx * acc
        else:
            tail = (cmath.exp(w) - 1.0) / (s - 1.0)
        xs = cmath.exp(-s * lx)
        val = direct + tail + 0.5 * xs
        rising = s
        xp = xs / x
        last = 0.0
        for j in range(1, _EM_ORDER + 1):
            term2 = _B_OVER_FACT[j - 1] * rising * xp
            val += term2
            last = abs(term2)
            rising *= (s + 2 * j - 1) * (s + 2 * j)
            xp /= x * x
        scale = max(abs(val), 1e-300)
        if last <= ctx.rel_tol * scale or last <= 1e-18 * scale:
            return val
        N = max(2 * N, N + 16)


def hurwitz_zeta(s, a: float, ctx: PrecisionContext = DEFAULT_CTX) -> complex:
    """zeta(s, a) by Euler-Maclaurin; the s = 1 pole raises."""
    s = complex(s)
    if s == 1.0:
        raise ValueError("hurwitz_zeta has a pole at s = 1")
    return _hurwitz_reg(s, a, ctx) + 1.0 / (s - 1.0)


def L_chi(D: Discriminant, s, ctx: PrecisionContext = DEFAULT_CTX) -> complex:
    """L(s, chi_D) = |D|**(-s) * sum_r chi(r) zeta(s, r/|D|).

    The pole parts of the zeta terms cancel (the character sums to zero
    over a period), so the regulated zeta keeps the formula valid at s = 1.
    """
    s = complex(s)
    P = D.modulus
    acc = 0.0 + 0.0j
    for r in range(1, P):
        c = chi(D, r)
        if c:
            acc += c * _hurwitz_reg(s, r / P, ctx)
    return cmath.exp(-s * math.log(P)) * acc


@functools.lru_cache(maxsize=None)
def _h_prime_cached(d: int, ctx: PrecisionContext) -> Fraction:
    D = Discriminant(d)
    P = D.modulus
    v = math.sqrt(P) * L_chi(D, 1.0, ctx).real / math.pi
    best: Fraction | None = None
    best_dist = math.inf
    for den in range(1, 7):
        cand = Fraction(round(v * den), den)
        dist = abs(v - float(cand))
        if dist < best_dist:
            best, best_dist = cand, dist
    if best is None or best_dist >= 1e-6:
        raise ValueError(
            f"h_prime snap failed for D={d}: {v} is not within 1e-6 of a "
            "rational with denominator <= 6"
        )
    return best


def h_prime(D: Discriminant, ctx: PrecisionContext = DEFAULT_CTX) -> Fraction:
    """sqrt(|D|) L(1)/pi snapped to the nearest rational with denominator <= 6."""
    return _h_prime_cached(D.D, ctx)


def _mellin_S_numeric(D: Discriminant, a: float, s: complex, ctx: PrecisionContext) -> complex:
    """a**s * int_1^inf S(u) u**(-s-1) du, piecewise exact plus corrected tail."""
    table = make_step_table(D)
    si = make_step_integrals(D)
    P = D.modulus
    hp = float(si.mean)
    sigma = s.real
    # truncation J: remainder after exact g3-corrections is
    # O(|s+1||s+2||s+3| max|g3| J^(-sigma-3)); pick J from rel_tol
    target = ctx.rel_tol
    J = 1000 * P
    while True:
        coef = abs((s + 1) * (s + 2) * (s + 3)) * float(si.max_g3)
        if coef * J ** (-sigma - 3.0) <= target or J >= ctx.term_budget:
            break
        J *= 4
    if J > ctx.term_budget:
        raise BudgetExceededError(f"mellin_S_check needs J={J} pieces, over budget")
    j = np.arange(1, J, dtype=np.float64)
    plate = np.array([float(x) for x in table.interval_values])
    v = plate[np.arange(1, J) % P]
    # piece integrals v_j (j^-s - (j+1)^-s)/s
    jp = np.exp(-s * np.log(j))
    jp1 = np.exp(-s * np.log(j + 1.0))
    pieces = complex(np.add.reduce(v * (jp - jp1))) / s
    tail_mean = hp * complex(J) ** (-s) / s
    tail_osc = si.tail_integral_power(float(J), s + 1.0)
    integral = pieces + tail_mean + tail_osc
    return complex(a) ** s * integral


def mellin_S_check(
    D: Discriminant, a: float, s, ctx: PrecisionContext = DEFAULT_CTX
) -> tuple[complex, complex]:
    """(numeric, closed) for int_0^inf S(a/x) x**(s-1) dx = (a**s/s) L(s).

    The substitution u = a/x turns the numeric side into a**s times the
    piecewise-exact integral of S(u) u**(-s-1) over (1, inf).
    """
    s = complex(s)
    if not s.real > 0:
        raise ValueError(f"need Re(s) > 0, got {s}")
    if not 0 < a <= 1:
        raise ValueError(f"need a in (0, 1], got {a}")
    numeric = _mellin_S_numeric(D, a, s, ctx)
    closed = complex(a) ** s / s * L_chi(D, s, ctx)
    return numeric, closed


# quadrature node cache for the folded transform of C: ("exact", num, den) -> C value
_c_node_cache: dict = {}


def _c_exact_node(num: int, den: int) -> float:
    from .cotsum import c_value
    from .numkernel import reduce as nk_reduce

    key = ("exact", num, den)
    got = _c_node_cache.get(key)
    if got is None:
        D4 = Discriminant(-4)
        rf, _ = nk_reduce(num, den)
        got = math.pi / (4 * rf.den) * c_value(D4, rf.num, rf.den)
        _c_node_cache[key] = got
    return got


def _step_tail_transform(D: Discriminant, w: complex, cut: int, terms: int) -> complex:
    """int_cut^inf (C(u) - h' L(1)) u**w du for -2 < Re(w) < -1, D = -4.

    Writing S as a sum of shifted plateaus chi(j) [t > j] turns C(u) into
    h' L(1) plus an absolutely convergent series of antiderivative tails,

        C(u) - h' L(1) = -sum_j chi(j) (g1(ju) / (j**2 u)
                         + 2 g2(ju) / (j**3 u**2) + 6 g3(ju) / (j**4 u**3))

    up to a g4-level remainder, and each term integrates against u**w in
    closed form via the tail_m* functionals. The j-th summand decays like
    j**-3, so a fixed truncation suffices far below float precision.
    """
    si = make_step_integrals(D)
    total = 0.0 + 0.0j
    for j in range(1, terms + 1):
        cj = chi(D, j)
        if cj == 0:
            continue
        T = j * cut
        inner = (
            si.tail_m1(T, 1.0 - w)
            + 2.0 * si.tail_m2(T, 2.0 - w)
            + 6.0 * si.tail_m3(T, 3.0 - w)
        )
        total -= cj * complex(j) ** (-2.0 - w) * inner
    return total


def mellin_C_check(
    D: Discriminant, s, ctx: PrecisionContext = DEFAULT_CTX
) -> tuple[complex, complex]:
    """(numeric, closed) Mellin transform of C on the strip -1 < Re(s) < 0.

    Numeric side: int_0^1 C(x) (x**(s-1) + x**(-s-2)) dx after folding the
    (1, inf) half by the scaling relation C(x) = x C(1/x). The linear part
    (pi/8) x integrates in closed form, the remainder is quadratured on five
    dyadic octaves down to 1/32 with exact cotangent values of C at rational
    nodes, and the (0, 1/32) leftover maps under x -> 1/x onto deep-tail
    integrals summed exactly by _step_tail_transform.
    Closed side: -L(-s) L(s+1) / (s (s+1)).
    """
    s = complex(s)
    if D.D != -4:
        raise ValueError("mellin_C_check is defined for D = -4 only")
    if not -1.0 < s.real < 0.0:
        raise ValueError(f"need -1 < Re(s) < 0, got {s}")
    c8 = math.pi / 8.0
    numeric = c8 * (1.0 / (s + 1.0) - 1.0 / s)
    nodes4, _ = np.polynomial.legendre.leggauss(4)

    def kernel(x: float) -> complex:
        return x ** (s.real - 1) * cmath.exp(1j * s.imag * math.log(x)) + x ** (
            -s.real - 2
        ) * cmath.exp(-1j * s.imag * math.log(x))

    # octaves (2**-(k+1), 2**-k]: exact rational nodes on a 1024-per-octave
    # dyadic grid, 4-node interpolatory weights in subpanel-local coordinates
    grid = 1024
    per = 8  # grid units per subpanel
    rel = 0.5 + 0.5 * nodes4
    t = np.array([round(r * per) / per for r in rel])
    V = np.vander(t, increasing=True).T
    mom = np.array([1.0 / (i + 1) for i in range(len(t))])
    base_wts = np.linalg.solve(V, mom)
    for k in range(0, 5):
        den = (2 ** (k + 1)) * grid
        for g0 in range(grid, 2 * grid, per):
            for r, wi in zip(rel, base_wts * (per / den)):
                gn = g0 + round(r * per)
                xi = gn / den
                g = _c_exact_node(gn, den) - c8 * xi
                numeric += wi * g * kernel(xi)
    numeric += _step_tail_transform(D, s - 1.0, 32, 512)
    numeric += _step_tail_transform(D, -s - 2.0, 32, 512)
    closed = -L_chi(D, -s, ctx) * L_chi(D, s + 1.0, ctx) / (s * (s + 1.0))
    return numeric, closed
