"""Bordered Gram sweep tying projection distances to the growth ratio R(N).

The pair matrix holds the cotangent pair values c(m, n); the augmented
matrix adds the border (1, ..., N) and a corner entry. R(N) is the ratio
N det(pair) / det(augmented), evaluated through one bordered-determinant
identity instead of two determinants.

Corner derivation. The Gram matrix of the N shifted square waves is
(pi / (|D| N)) times the pair matrix, the inner products against the
target indicator are (n/N) L(1) = (pi / (|D| N)) kappa n with
kappa = sqrt(|D|) h', and the target has unit norm. Scaling the border
row and column by 1/kappa turns the augmented Gram matrix into
(pi / (|D| N)) kappa^2 times the integer-bordered matrix with corner
N / (pi h'^2), so

    dist2 = pi h'^2 / R(N),    R(N) = N / (N / (pi h'^2) - |y|^2),

where y solves the triangular system L y = (1, ..., N) against the
Cholesky factor L of the pair matrix. For the modulus-4 character
h' = 1/2, the corner is 4N/pi and dist2 = (pi/4) / R(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cotsum import CValueCache, c_value
from .lfun import L_chi, h_prime
from .numkernel import Discriminant, PrecisionContext, reduce

DEFAULT_CTX = PrecisionContext(rel_tol=1e-12, term_budget=10_000_000)

__all__ = [
    "SweepRecord",
    "GramSweepState",
    "sweep_extend",
    "assemble_pair_matrix",
    "distance_direct",
    "fit_log",
    "zero_bound",
    "render_csv",
    "DEFAULT_CTX",
]


@dataclass(frozen=True)
class SweepRecord:
    """One sweep row: size, growth ratio, squared distance, log det."""

    N: int
    R: float
    dist2: float
    logdetC: float


class GramSweepState:
    """Growable Cholesky factor of the pair matrix plus its border data.

    Single-writer: only sweep_extend mutates an instance. The stored
    factor satisfies chol @ chol.T == pair matrix; border_solution is
    the forward-substitution solve against (1, ..., N).
    """

    def __init__(self, D: Discriminant) -> None:
        self.D = D
        self.N = 0
        self.log_det = 0.0
        self.records: list[SweepRecord] = []
        hp = float(h_prime(D))
        self._pi_hp2 = math.pi * hp * hp
        self._cap = 64
        self._L = np.zeros((self._cap, self._cap))
        self._y = np.zeros(self._cap)

    @property
    def chol(self) -> np.ndarray:
        return self._L[: self.N, : self.N].copy()

    @property
    def border_solution(self) -> np.ndarray:
        return self._y[: self.N].copy()

    def corner(self, N: int) -> float:
        """Augmented-matrix corner entry N / (pi h'^2)."""
        return N / self._pi_hp2

    def _grow_to(self, n: int) -> None:
        if n <= self._cap:
            return
        cap = self._cap
        while cap < n:
            cap *= 2
        L = np.zeros((cap, cap))
        L[: self.N, : self.N] = self._L[: self.N, : self.N]
        y = np.zeros(cap)
        y[: self.N] = self._y[: self.N]
        self._L, self._y, self._cap = L, y, cap


_SHARED_CACHE = CValueCache()


def _store(cache: CValueCache | None) -> CValueCache:
    return cache if cache is not None else _SHARED_CACHE


def _reduced_pairs(items) -> list[tuple[int, int]]:
    pairs = set()
    for m, n in items:
        rf, _ = reduce(m, n)
        p, q = rf.num, rf.den
        pairs.add((p, q) if p <= q else (q, p))
    return sorted(pairs)


def _column(
    D: Discriminant,
    k: int,
    ctx: PrecisionContext,
    threads: int,
    cache: CValueCache,
) -> np.ndarray:
    """Pair values c(m, k) for m = 1..k, prefilled in parallel.

    Parallelism covers only the independent per-pair computations; the
    assembly order is fixed, so results do not depend on threads.
    """
    if threads > 1:
        cache.ensure(D, _reduced_pairs((m, k) for m in range(1, k + 1)), threads=threads)
    return np.array([c_value(D, m, k, ctx, cache) for m in range(1, k + 1)])


def sweep_extend(
    state: GramSweepState,
    upto: int,
    ctx: PrecisionContext = DEFAULT_CTX,
    threads: int = 1,
    cache: CValueCache | None = None,
) -> GramSweepState:
    """Extend the sweep to size upto, one bordered Cholesky row per N.

    Each step appends the column (c(1,N), ..., c(N,N)), extends the
    factor in O(N^2) by forward substitution, updates the border solve,
    and records R(N), dist2, and the running log determinant.
    """
    if upto <= state.N:
        raise ValueError(f"upto must exceed the current size {state.N}")
    D = state.D
    store = _store(cache)
    for k in range(state.N + 1, upto + 1):
        col = _column(D, k, ctx, threads, store)
        state._grow_to(k)
        L, y = state._L, state._y
        i = k - 1
        w = np.empty(k)
        for j in range(i):
            w[j] = (col[j] - float(np.dot(L[j, :j], w[:j]))) / L[j, j]
        pivot = col[i] - float(np.dot(w[:i], w[:i]))
        if pivot <= 0.0:
            raise ValueError(
                f"matrix not positive definite: Cholesky pivot {pivot:.6g} "
                f"at N={k} (precision failure or entry bug)"
            )
        w[i] = math.sqrt(pivot)
        L[i, : i + 1] = w
        y[i] = (k - float(np.dot(L[i, :i], y[:i]))) / w[i]
        state.log_det += 2.0 * math.log(w[i])
        state.N = k
        y2 = float(np.dot(y[:k], y[:k]))
        R = k / (state.corner(k) - y2)
        dist2 = 1.0 - (state._pi_hp2 / k) * y2
        state.records.append(SweepRecord(k, R, dist2, state.log_det))
    return state


def assemble_pair_matrix(
    D: Discriminant,
    N: int,
    ctx: PrecisionContext = DEFAULT_CTX,
    threads: int = 1,
    cache: CValueCache | None = None,
) -> np.ndarray:
    """Dense N x N matrix of pair values c(m, n)."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    store = _store(cache)
    if threads > 1:
        items = ((m, n) for n in range(1, N + 1) for m in range(1, n + 1))
        store.ensure(D, _reduced_pairs(items), threads=threads)
    M = np.empty((N, N))
    for n in range(1, N + 1):
        for m in range(1, n + 1):
            M[m - 1, n - 1] = M[n - 1, m - 1] = c_value(D, m, n, ctx, store)
    return M


def distance_direct(
    D: Discriminant,
    N: int,
    ctx: PrecisionContext = DEFAULT_CTX,
    cache: CValueCache | None = None,
) -> float:
    """Squared projection distance by a from-scratch normal-equations solve.

    Builds the Gram matrix (pi / (|D| N)) c(m, n), the border inner
    products (n/N) L(1), and solves with a dense LU factorization; an
    independent oracle for the sweep's dist2.
    """
    M = assemble_pair_matrix(D, N, ctx, cache=cache)
    G = (math.pi / (D.modulus * N)) * M
    L1 = L_chi(D, 1.0).real
    u = L1 * np.arange(1, N + 1, dtype=np.float64) / N
    coeffs = np.linalg.solve(G, u)
    return 1.0 - float(np.dot(u, coeffs))


def fit_log(records, n_from: int, n_to: int) -> tuple[float, float, float]:
    """Least-squares fit R(N) ~ a log N + b over the window [n_from, n_to].

    Returns (slope, intercept, rms residual).
    """
    if n_from < 2 or n_to <= n_from:
        raise ValueError(f"need n_to > n_from >= 2, got [{n_from}, {n_to}]")
    pts = [(r.N, r.R) for r in records if n_from <= r.N <= n_to]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 records in the window, got {len(pts)}")
    logs = np.array([math.log(n) for n, _ in pts])
    rs = np.array([r for _, r in pts])
    A = np.vstack([logs, np.ones_like(logs)]).T
    coef, _, _, _ = np.linalg.lstsq(A, rs, rcond=None)
    resid = rs - A @ coef
    rms = math.sqrt(float(resid @ resid) / len(pts))
    return float(coef[0]), float(coef[1]), rms


def zero_bound(rho: complex) -> float:
    """Growth-ratio ceiling (pi/8) |rho|^2 / (Re rho - 1/2) forced by a zero.

    Pure formula utility; requires Re(rho) > 1/2.
    """
    rho = complex(rho)
    if not rho.real > 0.5:
        raise ValueError(f"need Re(rho) > 1/2, got {rho.real}")
    return (math.pi / 8.0) * abs(rho) ** 2 / (rho.real - 0.5)


def render_csv(records) -> str:
    """CSV rows N,R,dist2,logdetC with shortest round-trip float text."""
    lines = ["N,R,dist2,logdetC"]
    for r in records:
        lines.append(f"{r.N},{r.R!r},{r.dist2!r},{r.logdetC!r}")
    return "\n".join(lines) + "\n"
