"""Exact cotangent-sum values of the pair invariant c and its halves h.

h(m, n) is a finite sum of chi-weighted step values times cotangents of
k pi / (|D| n); c(m, n) = h(m, n) + h(n, m). Everything reduces to exact
rational bookkeeping plus one trigonometric call per term, so values are
deterministic to the last bit. A reduced-fraction cache with hex-float
persistence keeps Gram sweeps from recomputing shared pairs.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .numkernel import Discriminant, PrecisionContext, ReducedFraction, chi, reduce
from .stepfn import make_step_table, step_S

__all__ = [
    "CotangentExpression",
    "CValueCache",
    "h_exact",
    "c_selection_rule",
    "c_value",
    "c_integral_oracle",
    "eval_cot",
    "DEFAULT_CTX",
]

DEFAULT_CTX = PrecisionContext(rel_tol=1e-12, term_budget=10_000_000)


@dataclass(frozen=True)
class CotangentExpression:
    """Sum of coeff * cot(pi * angle) terms, angles strictly inside (0, 1)."""

    terms: tuple[tuple[Fraction, ReducedFraction], ...]

    def __post_init__(self) -> None:
        last = None
        for coeff, angle in self.terms:
            if coeff == 0:
                raise ValueError("zero coefficient must not be stored")
            if coeff.denominator not in (1, 2):
                raise ValueError(f"coefficient {coeff} has denominator > 2")
            frac = angle.as_fraction()
            if not 0 < frac < 1:
                raise ValueError(f"angle {angle} outside (0, 1)")
            if last is not None and frac <= last:
                raise ValueError("angles must be strictly increasing")
            last = frac

    @staticmethod
    def from_terms(items) -> "CotangentExpression":
        """Combine duplicate angles, drop zeros, sort."""
        acc: dict[Fraction, Fraction] = {}
        for coeff, angle in items:
            coeff = Fraction(coeff)
            a = angle.as_fraction() if isinstance(angle, ReducedFraction) else Fraction(angle)
            acc[a] = acc.get(a, Fraction(0)) + coeff
        out = []
        for a in sorted(acc):
            c = acc[a]
            if c != 0:
                out.append((c, ReducedFraction(a.numerator, a.denominator)))
        return CotangentExpression(tuple(out))

    def __len__(self) -> int:
        return len(self.terms)


def eval_cot(expr: CotangentExpression, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """Evaluate sum coeff * cot(pi * angle).

    Angles above 1/2 are reflected (cot(pi(1-a)) = -cot(pi a)) so the tan
    argument stays in (0, pi/2] where it is well conditioned.
    """
    total = 0.0
    vals = []
    for coeff, angle in expr.terms:
        a = angle.as_fraction()
        if a > Fraction(1, 2):
            v = -float(coeff) / math.tan(math.pi * float(1 - a))
        else:
            v = float(coeff) / math.tan(math.pi * float(a))
        vals.append(v)
    if vals:
        total = float(np.add.reduce(np.array(vals, dtype=np.float64)))
    return total


def h_exact(D: Discriminant, m: int, n: int) -> CotangentExpression:
    """Exact expression for h(m, n): sum over 0 < k < |D| n / 2."""
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got {m}, {n}")
    P = D.modulus
    kmax = (P * n - 1) // 2 if (P * n) % 2 else P * n // 2 - 1
    items = []
    for k in range(1, kmax + 1):
        ck = chi(D, k)
        if ck == 0:
            continue
        s = step_S(D, Fraction(k * m, n))
        coeff = ck * s
        if coeff == 0:
            continue
        items.append((coeff, ReducedFraction(*Fraction(k, P * n).as_integer_ratio())))
    return CotangentExpression.from_terms(items)


def c_selection_rule(m: int, n: int) -> CotangentExpression:
    """Exact expression for c(m, n) as differences of cotangent pairs.

    Valid for the modulus-4 character only: for each window pair (j, k)
    with overlapping support, contribute cot(pi a) - cot(pi b); the minus
    term is stored reflected as +cot(pi (1-b)), and b = 1/2 contributes
    nothing since cot(pi/2) = 0.
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got {m}, {n}")
    half = Fraction(1, 2)
    items = []
    for j in range(0, m // 2 + 1):
        for k in range(0, n // 2 + 1):
            a = max(Fraction(4 * j + 1, 4 * m), Fraction(4 * k + 1, 4 * n))
            b = min(Fraction(4 * j + 3, 4 * m), Fraction(4 * k + 3, 4 * n), half)
            if a < b:
                items.append((Fraction(1), ReducedFraction(*a.as_integer_ratio())))
                if b != half:
                    r = 1 - b
                    items.append((Fraction(1), ReducedFraction(*r.as_integer_ratio())))
    return CotangentExpression.from_terms(items)


def _h_float(D: Discriminant, a: int, b: int) -> float:
    """Floating h(a, b) via one vectorized pass, one reduction."""
    P = D.modulus
    M = P * b
    kmax = (M - 1) // 2 if M % 2 else M // 2 - 1
    if kmax < 1:
        return 0.0
    table = make_step_table(D)
    plate = np.array([float(v) for v in table.interval_values], dtype=np.float64)
    plate_prev = np.roll(plate, 1)  # value just below integer j
    half_chi = np.array([chi(D, r) for r in range(P)], dtype=np.float64) / 2.0
    chi_arr = 2.0 * half_chi
    k = np.arange(1, kmax + 1, dtype=np.int64)
    ck = chi_arr[k % P]
    num = (k * a) % M
    quo = num // b
    rem = num % b
    s_plateau = plate[quo]
    s_at_int = plate_prev[quo] + half_chi[quo % P]
    s = np.where(rem == 0, s_at_int, s_plateau)
    cot = 1.0 / np.tan((math.pi / M) * k)
    return float(np.add.reduce(ck * s * cot))


def _c_raw(D: Discriminant, m: int, n: int) -> float:
    return _h_float(D, m, n) + _h_float(D, n, m)


class CValueCache:
    """Reduced-pair store of floating C(p/q) values with hex persistence.

    Records are `D,p,q,<hex float>` lines sorted by (D, q, p); hex codec
    makes round trips bit exact. Concurrent fills compute missing pairs
    in worker threads (each pair is one independent pure computation),
    then a single writer inserts results.
    """

    def __init__(self, path: str | None = None):
        self._data: dict[tuple[int, int, int], float] = {}
        self._lock = threading.Lock()
        self._dirty = False
        self.hits = 0
        self.misses = 0
        self.path = path
        if path is not None:
            self._load(path)

    def _load(self, path: str) -> None:
        try:
            fh = open(path, "r", encoding="ascii")
        except FileNotFoundError:
            return
        with fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    d_s, p_s, q_s, hex_s = line.split(",")
                    d, p, q = int(d_s), int(p_s), int(q_s)
                    if p > q or math.gcd(p, q) != 1:
                        raise ValueError("pair is not reduced with p <= q")
                    value = float.fromhex(hex_s)
                except ValueError as exc:
                    raise ValueError(
                        f"malformed cache record at line {lineno} of {path}: "
                        f"{line!r} ({exc})"
                    ) from exc
                self._data[(d, p, q)] = value

    def save(self, path: str | None = None) -> None:
        path = path or self.path
        if path is None:
            raise ValueError("no cache path configured")
        with self._lock:
            keys = sorted(self._data, key=lambda t: (t[0], t[2], t[1]))
            with open(path, "w", encoding="ascii") as fh:
                for d, p, q in keys:
                    fh.write(f"{d},{p},{q},{self._data[(d, p, q)].hex()}\n")
            self._dirty = False

    def __len__(self) -> int:
        return len(self._data)

    @staticmethod
    def _compute(d: int, p: int, q: int) -> float:
        D = Discriminant(d)
        return math.pi / (D.modulus * q) * _c_raw(D, p, q)

    def get_C(self, D: Discriminant, p: int, q: int) -> float:
        """C(p/q) for reduced p <= q, computing and caching when missing."""
        key = (D.D, p, q)
        got = self._data.get(key)
        if got is None:
            got = self._compute(*key)
            with self._lock:
                self._data[key] = got
                self._dirty = True
                self.misses += 1
        else:
            self.hits += 1
        return got

    def ensure(self, D: Discriminant, pairs, threads: int = 1) -> None:
        """Fill missing reduced pairs (p, q), p <= q, in parallel."""
        pairs = list(pairs)
        missing = [
            (D.D, p, q) for p, q in pairs if (D.D, p, q) not in self._data
        ]
        self.hits += len(pairs) - len(missing)
        if not missing:
            return
        if threads <= 1:
            results = [self._compute(*key) for key in missing]
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(lambda k: self._compute(*k), missing))
        with self._lock:
            for key, val in zip(missing, results):
                self._data[key] = val
            self._dirty = True
            self.misses += len(missing)


_DEFAULT_CACHE = CValueCache()


def c_value(
    D: Discriminant,
    m: int,
    n: int,
    ctx: PrecisionContext = DEFAULT_CTX,
    cache: CValueCache | None = None,
) -> float:
    """Floating c(m, n), routed through the reduced-pair cache.

    Non-reduced and transposed arguments resolve through homogeneity
    (c scales linearly under common factors) and symmetry before the
    cache is consulted.
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got {m}, {n}")
    store = cache if cache is not None else _DEFAULT_CACHE
    rf, g = reduce(m, n)
    p, q = rf.num, rf.den
    lo, hi = (p, q) if p <= q else (q, p)
    C = store.get_C(D, lo, hi)
    return g * (D.modulus * hi / math.pi) * C


def c_integral_oracle(
    D: Discriminant, m: int, n: int, T: float
) -> tuple[float, float]:
    """Truncated integral form of c(m, n) plus a rigorous tail bound.

    Integrates the product of the two scaled step functions against 1/t^2
    piecewise exactly over (0, T]; the discarded tail is bounded by
    prefactor * max(S)^2 / T. Returns (value, bound).
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got {m}, {n}")
    if not T >= 1:
        raise ValueError(f"cutoff T must be >= 1, got {T}")
    P = D.modulus
    table = make_step_table(D)
    plate = np.array([float(v) for v in table.interval_values], dtype=np.float64)
    pref = P / math.pi
    # work on the integer grid u = t*m*n: jumps at u = n*j (first factor)
    # and u = m*j (second), chi(j) != 0; pieces below the first jump are zero
    u_end = float(T) * m * n
    bps = []
    for step_len in (n, m):
        j = np.arange(1, int(u_end // step_len) + 1, dtype=np.int64)
        mask = np.array([chi(D, r) for r in range(P)], dtype=bool)[j % P]
        bps.append((j[mask] * step_len).astype(np.float64))
    u = np.unique(np.concatenate(bps))
    u = u[u < u_end]
    if u.size == 0:
        return 0.0, pref * float(table.max_value()) ** 2 / float(T)
    edges = np.append(u, u_end)
    ui = edges[:-1].astype(np.int64)
    v1 = plate[(ui // n) % P]
    v2 = plate[(ui // m) % P]
    pieces = v1 * v2 * (1.0 / edges[:-1] - 1.0 / edges[1:])
    val = pref * m * n * float(np.add.reduce(pieces))
    bound = pref * float(table.max_value()) ** 2 / float(T)
    return val, bound
