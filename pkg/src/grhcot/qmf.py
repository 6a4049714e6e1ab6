"""Boundary functions of the cotangent sums and their modular cocycle.

H at rationals is an exact finite cotangent sum; C extends it continuously
to the real line and is evaluated either exactly (rational arguments) or
by piecewise integration of the product of two step functions with exact
antiderivative tail corrections (real arguments), cross-checkable against
a sine-integral series. The s-deformed variants, the Abel regularization,
the group cocycle with certified sign character, continuity probes, and
asymptotic-expansion fits live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import sici

from .cotsum import c_selection_rule, c_value, eval_cot, h_exact
from .errors import BudgetExceededError
from .numkernel import Discriminant, PrecisionContext, ReducedFraction, chi
from .stepfn import make_step_integrals, make_step_table

__all__ = [
    "GroupElement",
    "AsymptoticFit",
    "group_element_from_residue",
    "group_element_from_word",
    "eval_H_rational",
    "eval_C",
    "eval_C_series",
    "eval_Hs",
    "eval_Cs",
    "eval_T_reg",
    "cocycle_C_gamma",
    "continuity_probe",
    "asymp_fit",
    "DEFAULT_CTX",
]

DEFAULT_CTX = PrecisionContext(rel_tol=1e-12, term_budget=10_000_000)

ExactLike = (int, Fraction, ReducedFraction)


def _as_fraction(x) -> Fraction:
    if isinstance(x, ReducedFraction):
        return x.as_fraction()
    return Fraction(x)


# ---------------------------------------------------------------------------
# group elements with certified sign character


@dataclass(frozen=True)
class GroupElement:
    """Unimodular integer matrix in the extended congruence group for D.

    epsilon is the value of the sign character; provenance records which
    certificate pinned it ("residue" or "word"). Construct through
    group_element_from_residue / group_element_from_word.
    """

    a: int
    b: int
    c: int
    d: int
    D: Discriminant
    epsilon: int
    provenance: str

    def __post_init__(self) -> None:
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("matrix determinant must be 1")
        P = self.D.modulus
        level = P if P % 2 else P // 2
        if self.c % level != 0 and self.a % level != 0:
            raise ValueError(
                f"matrix is not in the level-{level} group for D={self.D.D}"
            )
        if self.epsilon not in (-1, 1):
            raise ValueError("epsilon must be +1 or -1")
        if self.provenance not in ("residue", "word"):
            raise ValueError("provenance must be 'residue' or 'word'")

    def apply(self, x: Fraction) -> Fraction:
        den = self.c * x + self.d
        if den == 0:
            raise ValueError(f"{x} is the pole of the fractional-linear action")
        return (self.a * x + self.b) / den


def _residue_epsilon(D: Discriminant, a: int, b: int, c: int, d: int) -> int | None:
    """+1 if the matrix is +-identity mod |D|, -1 if S times such; else None."""
    P = D.modulus

    def is_pm_identity(m) -> bool:
        (x, y), (z, w) = m
        return (
            (x % P, y % P, z % P, w % P) == (1 % P, 0, 0, 1 % P)
            or ((-x) % P, (-y) % P, (-z) % P, (-w) % P) == (1 % P, 0, 0, 1 % P)
        )

    if is_pm_identity(((a, b), (c, d))):
        return 1
    # S^-1 gamma = (c, d; -a, -b)
    if is_pm_identity(((c, d), (-a, -b))):
        return -1
    return None


def group_element_from_residue(D: Discriminant, a: int, b: int, c: int, d: int) -> GroupElement:
    """Certify epsilon by congruence mod |D|; reject when neither case applies."""
    eps = _residue_epsilon(D, a, b, c, d)
    if eps is None:
        raise ValueError(
            "epsilon not pinned: matrix is congruent to neither +-identity "
            "nor S times +-identity mod |D|; supply a generator word instead"
        )
    return GroupElement(a, b, c, d, D, eps, "residue")


def _parse_word(word) -> list:
    if isinstance(word, str):
        tokens = word.split()
    else:
        tokens = list(word)
    out = []
    for tok in tokens:
        if tok == "S":
            out.append(("S", 0))
        elif isinstance(tok, str) and tok.startswith("T^"):
            out.append(("T", int(tok[2:])))
        elif isinstance(tok, str) and tok == "T":
            out.append(("T", 1))
        elif isinstance(tok, tuple) and tok[0] in ("S", "T"):
            out.append(tok)
        else:
            raise ValueError(f"unrecognized word token {tok!r}")
    return out


def group_element_from_word(D: Discriminant, word) -> GroupElement:
    """Build from a word in S and the translation subgroup, with epsilon.

    Translations must be multiples of |D| (odd D) or |D|/2 (even D). For
    odd D the character counts inversions; for even D it counts all
    generator letters. A residue certificate, when it also applies, must
    agree and is cross-checked.
    """
    P = D.modulus
    u = P if P % 2 else P // 2
    m = ((1, 0), (0, 1))
    eps = 1
    for kind, k in _parse_word(word):
        if kind == "S":
            g = ((0, -1), (1, 0))
            eps = -eps
        else:
            if k % u != 0:
                raise ValueError(
                    f"translation T^{k} is not a multiple of the group lattice {u}"
                )
            g = ((1, k), (0, 1))
            if P % 2 == 0 and (abs(k) // u) % 2 == 1:
                eps = -eps
        m = (
            (m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]),
            (m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]),
        )
    a, b = m[0]
    c, d = m[1]
    res = _residue_epsilon(D, a, b, c, d)
    if res is not None and res != eps:
        raise ValueError(
            "inconsistent certificates: residue and word epsilon disagree"
        )
    return GroupElement(a, b, c, d, D, eps, "word")


# ---------------------------------------------------------------------------
# H and C


def eval_H_rational(D: Discriminant, x, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """H at an exact rational: (pi / (|D| n)) times the finite cotangent sum.

    Arbitrary rationals reduce into [0, |D|) by evenness and periodicity.
    """
    f = abs(_as_fraction(x)) % D.modulus
    if f == 0:
        return 0.0
    m, n = f.numerator, f.denominator
    return math.pi / (D.modulus * n) * eval_cot(h_exact(D, m, n), ctx)


def _piecewise_product_integral(
    D: Discriminant, x: float, s: float, rel_tol: float, term_budget: int, T_len: float
) -> float:
    """s-weighted integral of S(t) S(x t) t**(-s-1) over (0, T] plus exact tails.

    Returns sum of piece integrals s * int t^(-s-1) (telescoping powers)
    plus the mean and single-factor oscillation tails beyond T; the
    remaining cross-oscillation error decays faster than any retained term.
    """
    P = D.modulus
    table = make_step_table(D)
    si = make_step_integrals(D)
    plate = np.array([float(v) for v in table.interval_values])
    chimask = np.array([chi(D, r) != 0 for r in range(P)])
    hp = float(si.mean)
    start = max(1.0, 1.0 / x)
    Tend = float(P * math.ceil((start + T_len) / P))
    est = (Tend - start) * (1.0 + x)
    if est > term_budget:
        raise BudgetExceededError(
            f"piecewise integral needs about {est:.3g} breakpoints, over the "
            f"budget of {term_budget}"
        )
    win = max(1024.0, 4e6 / (1.0 + x))
    parts = []
    w0 = start
    while w0 < Tend:
        w1 = min(w0 + win, Tend)
        j1 = np.arange(math.floor(w0) + 1, math.floor(w1) + 1, dtype=np.int64)
        j1 = j1[chimask[j1 % P]].astype(np.float64)
        j2 = np.arange(math.floor(x * w0) + 1, math.floor(x * w1) + 1, dtype=np.int64)
        j2 = (j2[chimask[j2 % P]].astype(np.float64)) / x
        inner = np.unique(np.concatenate((j1, j2)))
        inner = inner[(inner > w0) & (inner < w1)]
        edges = np.concatenate(([w0], inner, [w1]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        v = plate[(np.floor(mids).astype(np.int64)) % P] * plate[
            (np.floor(x * mids).astype(np.int64)) % P
        ]
        if s == 1.0:
            piece = v * (1.0 / edges[:-1] - 1.0 / edges[1:])
        else:
            piece = v * (edges[:-1] ** (-s) - edges[1:] ** (-s))
        parts.append(float(np.add.reduce(piece)))
        w0 = w1
    total = float(np.add.reduce(np.array(parts))) if parts else 0.0
    # tails: mean part exactly, each factor's oscillation exactly
    tail = hp * hp * Tend ** (-s)
    tail += s * hp * float(si.tail_integral_power(Tend, s + 1.0).real)
    tail += s * hp * x**s * float(si.tail_integral_power(x * Tend, s + 1.0).real)
    return total + tail


def eval_C(D: Discriminant, x, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """C(x), even in x with C(0) = 0.

    Rational arguments take the exact finite-cotangent route through the
    pair cache; real arguments integrate the step-function product
    piecewise out to T = max(S)^2/rel_tol beyond the support edge, with
    exact tail corrections.
    """
    if isinstance(x, ExactLike):
        f = abs(_as_fraction(x))
        if f == 0:
            return 0.0
        p, q = f.numerator, f.denominator
        return math.pi / (D.modulus * q) * c_value(D, p, q, ctx)
    ax = abs(float(x))
    if ax == 0.0:
        return 0.0
    smax = float(make_step_table(D).max_value())
    T_len = smax * smax / ctx.rel_tol
    return _piecewise_product_integral(D, ax, 1.0, ctx.rel_tol, ctx.term_budget, T_len)


def _divisor_counts(K: int) -> np.ndarray:
    d = np.zeros(K + 1, dtype=np.int64)
    i = 1
    while i * i <= K:
        d[i * i] += 1
        d[i * i + i :: i] += 2
        i += 1
    return d


def eval_C_series(D: Discriminant, x: float, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """Cross-check route for C at real x > 0 via the sine-integral kernel.

    C(x) = pi/8 + x sum chi(n) d(n) J(pi n x / 2) with
    J(y) = pi/2 - Si(y) - cos(y)/y. Modulus-4 character only. Terms are
    summed in whole character periods so the conditional tail cancels.
    """
    if D.D != -4:
        raise ValueError("series route is defined for D = -4 only")
    x = abs(float(x))
    if x == 0.0:
        return 0.0
    K = min(int(4 * math.ceil(2000.0 / (x * math.sqrt(ctx.rel_tol)) / 4)), ctx.term_budget)
    d = _divisor_counts(K)
    n = np.arange(1, K + 1, dtype=np.float64)
    chi4 = np.zeros(K, dtype=np.float64)
    chi4[0::4] = 1.0  # n = 1 mod 4
    chi4[2::4] = -1.0  # n = 3 mod 4
    y = (math.pi * x / 2.0) * n
    si_y, _ = sici(y)
    J = (math.pi / 2.0 - si_y) - np.cos(y) / y
    terms = chi4 * d[1:] * J
    return math.pi / 8.0 + x * float(np.add.reduce(terms))


# ---------------------------------------------------------------------------
# s-deformed variants


def eval_Hs(D: Discriminant, x, s: float, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """Absolutely convergent character sum sum_k chi(k) S(k x) / k**s, s > 1.

    Exact rational x resolves the k-periodicity into Hurwitz zeta values
    (stable arbitrarily close to s = 1); real x truncates with the crude
    max(S) tail bound.
    """
    if not s > 1.0:
        raise ValueError(f"need s > 1, got {s}")
    from .lfun import _hurwitz_reg

    P = D.modulus
    if isinstance(x, ExactLike):
        f = abs(_as_fraction(x))
        m, n = f.numerator, f.denominator
        period = P * n
        from .stepfn import step_S

        weights = []
        for r in range(1, period + 1):
            cr = chi(D, r)
            if cr == 0:
                weights.append(0.0)
                continue
            weights.append(float(cr * step_S(D, Fraction(r * m, n))))
        if abs(sum(weights)) > 1e-9:
            raise ValueError("periodic weight sum must vanish")
        acc = 0.0
        for r, wgt in enumerate(weights, start=1):
            if wgt:
                acc += wgt * _hurwitz_reg(complex(s), r / period, ctx).real
        return period ** (-s) * acc
    ax = abs(float(x))
    table = make_step_table(D)
    smax = float(table.max_value())
    # tail bound smax * K^(1-s)/(s-1) <= rel_tol
    K = int((smax / ((s - 1.0) * ctx.rel_tol)) ** (1.0 / (s - 1.0))) + 1
    if K > ctx.term_budget:
        raise BudgetExceededError(
            f"H_s truncation needs {K} terms at s={s}, over budget"
        )
    plate = np.array([float(v) for v in table.interval_values])
    chiarr = np.array([float(chi(D, r)) for r in range(P)])
    k = np.arange(1, K + 1, dtype=np.float64)
    sk = plate[(np.floor(np.mod(ax * k, P))).astype(np.int64)]
    terms = chiarr[np.arange(1, K + 1) % P] * sk / k**s
    return float(np.add.reduce(terms))


def eval_Cs(D: Discriminant, x: float, s: float, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """s-weighted product integral s*int S(t) S(x t) t**(-s-1) dt, s > 0."""
    if not s > 0.0:
        raise ValueError(f"need s > 0, got {s}")
    ax = abs(float(x))
    if ax == 0.0:
        return 0.0
    smax = float(make_step_table(D).max_value())
    # residual cross-oscillation bound smax^2 T^(-s) drives the cutoff
    T_len = max(1e4, (smax * smax / ctx.rel_tol) ** (1.0 / float(s)))
    return _piecewise_product_integral(D, ax, float(s), ctx.rel_tol, ctx.term_budget, T_len)


def eval_T_reg(D: Discriminant, x: float, eps: float, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """Abel-type regularization sum at smoothing eps > 0, arctan form.

    T(x, eps) = (1/2) sum_k chi(k)/k * arctan(cos(k pi x/2)/sinh(k eps)).
    Modulus-4 character only; the exponential-sum form is eval'd by tests.
    """
    if D.D != -4:
        raise ValueError("regularized sum is defined for D = -4 only")
    if not eps > 0.0:
        raise ValueError(f"need eps > 0, got {eps}")
    # arctan(cos/sinh(k eps)) decays like 2 e^{-k eps}
    K = int(math.ceil((math.log(4.0 / ctx.rel_tol) + 5.0) / eps)) + 4
    if K > ctx.term_budget:
        raise BudgetExceededError(f"T regularization needs {K} terms, over budget")
    k = np.arange(1, K + 1, dtype=np.float64)
    chi4 = np.zeros(K, dtype=np.float64)
    chi4[0::4] = 1.0
    chi4[2::4] = -1.0
    vals = chi4 / k * np.arctan(np.cos(k * (math.pi * x / 2.0)) / np.sinh(k * eps))
    return 0.5 * float(np.add.reduce(vals))


# ---------------------------------------------------------------------------
# cocycle and probes


def cocycle_C_gamma(gamma: GroupElement, x, ctx: PrecisionContext = DEFAULT_CTX) -> float:
    """C_gamma(x) = H(x) - epsilon * |c x + d| * H(gamma x) at rational x."""
    f = _as_fraction(x)
    den = gamma.c * f + gamma.d
    if den == 0:
        raise ValueError(f"{x} is the pole of the action of the matrix")
    gx = (gamma.a * f + gamma.b) / den
    D = gamma.D
    return eval_H_rational(D, f, ctx) - gamma.epsilon * abs(float(den)) * eval_H_rational(
        D, gx, ctx
    )


def continuity_probe(f, x0, radii, ctx: PrecisionContext = DEFAULT_CTX) -> dict:
    """Sample f at x0 +- r for shrinking rational radii and report behavior.

    Returns a JSON-ready dict with per-side values, tail oscillations
    (max - min over the remaining shrinking radii), one-sided difference
    quotients, and a least-squares fit of value against log r.
    """
    x0f = _as_fraction(x0)
    rads = [Fraction(r) if not isinstance(r, ReducedFraction) else r.as_fraction() for r in radii]
    if any(r <= 0 for r in rads) or any(rads[i + 1] >= rads[i] for i in range(len(rads) - 1)):
        raise ValueError("radii must be positive and strictly decreasing")
    center = float(f(x0f))
    report: dict = {"x0": str(x0f), "center": center, "radii": [float(r) for r in rads], "sides": {}}
    for label, sign in (("+", 1), ("-", -1)):
        vals = [float(f(x0f + sign * r)) for r in rads]
        tail_osc = [max(vals[i:]) - min(vals[i:]) for i in range(len(vals))]
        diffs = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
        slopes = [(v - center) / (sign * float(r)) for v, r in zip(vals, rads)]
        lr = np.array([math.log(float(r)) for r in rads])
        A = np.vstack([lr, np.ones_like(lr)]).T
        coef, res, _, _ = np.linalg.lstsq(A, np.array(vals), rcond=None)
        rms = math.sqrt(res[0] / len(vals)) if res.size else 0.0
        report["sides"][label] = {
            "values": vals,
            "tail_oscillation": tail_osc,
            "consecutive_diffs": diffs,
            "slopes": slopes,
            "log_fit": {"slope": float(coef[0]), "intercept": float(coef[1]), "rms": rms},
        }
    return report


@dataclass(frozen=True)
class AsymptoticFit:
    """Fitted expansion around a rational base point."""

    target: str
    alpha: ReducedFraction
    side: str
    log_coefficient: float
    constants: tuple
    uncertainties: tuple
    residual: float

    def to_json_dict(self) -> dict:
        return {
            "target": self.target,
            "side": self.side,
            "coefficients": [self.log_coefficient, *self.constants],
            "uncertainties": list(self.uncertainties),
            "residual": self.residual,
        }


def _lstsq_with_uncertainty(A: np.ndarray, y: np.ndarray):
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(1, len(y) - A.shape[1])
    sigma2 = float(resid @ resid) / dof
    try:
        cov = sigma2 * np.linalg.pinv(A.T @ A)
        unc = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        unc = np.full(A.shape[1], math.inf)
    rms = math.sqrt(float(resid @ resid) / len(y))
    return coef, unc, rms


def _lattice(n_range, stride) -> list[Fraction]:
    if not (isinstance(n_range, tuple) and len(n_range) == 2):
        out = [Fraction(n) for n in n_range]
        if any(out[i + 1] <= out[i] for i in range(len(out) - 1)):
            raise ValueError("explicit n values must be strictly increasing")
        return out
    lo, hi = n_range
    step = Fraction(stride)
    if step not in (Fraction(1), Fraction(1, 2)):
        raise ValueError("stride must be 1 (integers) or 1/2 (half-integers)")
    out = []
    n = Fraction(lo)
    if step == Fraction(1, 2) and n.denominator == 1:
        n += step  # start on the half-integer lattice proper
    while n <= hi:
        out.append(n)
        n += 1  # same lattice: consecutive points one apart
    return out


def asymp_fit(
    target: str,
    n_range,
    side: str = "+",
    stride=1,
    ctx: PrecisionContext = DEFAULT_CTX,
    D: Discriminant | None = None,
    alpha=None,
) -> AsymptoticFit:
    """Least-squares fit of the declared expansion shape on exact samples.

    Targets: "H_at_1" (log n, const, even inverse powers), "C_at_1"
    (const, log n/n, inverse powers), "C_at_inverse_integers" (pure
    inverse powers of n along one residue class), "H_at_alpha" (log n,
    const, inverse powers around a supplied rational base point).
    """
    if D is None:
        D = Discriminant(-4)
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    sgn = 1 if side == "+" else -1
    ns = _lattice(n_range, stride)
    if not ns or float(ns[-1]) / float(ns[0]) < 8.0:
        raise ValueError("n_range must span at least a decade of n")
    nf = np.array([float(n) for n in ns])
    if target == "H_at_1":
        xs = [1 + sgn * Fraction(1, 1) / n for n in ns]
        y = np.array([eval_H_rational(D, x, ctx) for x in xs])
        A = np.vstack([np.log(nf), np.ones_like(nf), nf**-2.0, nf**-4.0, nf**-6.0]).T
        base = ReducedFraction(1, 1)
    elif target == "C_at_1":
        xs = [1 + sgn * Fraction(1, 1) / n for n in ns]
        y = np.array([eval_C(D, x, ctx) for x in xs])
        A = np.vstack(
            [np.ones_like(nf), np.log(nf) / nf, nf**-1.0, nf**-2.0, nf**-3.0, nf**-4.0, nf**-5.0]
        ).T
        base = ReducedFraction(1, 1)
    elif target == "C_at_inverse_integers":
        xs = [Fraction(1, 1) / n for n in ns]
        y = np.array([eval_C(D, x, ctx) for x in xs])
        A = np.vstack([nf ** -float(k) for k in range(1, 8)]).T
        base = ReducedFraction(0, 1)
    elif target == "H_at_alpha":
        if alpha is None:
            raise ValueError("H_at_alpha needs the base point alpha")
        af = _as_fraction(alpha)
        xs = [af + sgn * Fraction(1, 1) / n for n in ns]
        y = np.array([eval_H_rational(D, x, ctx) for x in xs])
        A = np.vstack(
            [np.log(nf), np.ones_like(nf), np.log(nf) / nf, nf**-1.0, nf**-2.0, nf**-3.0]
        ).T
        base = ReducedFraction(af.numerator, af.denominator)
    else:
        raise ValueError(f"unknown fit target {target!r}")
    coef, unc, rms = _lstsq_with_uncertainty(A, y)
    if target == "C_at_1":
        logc, consts = float(coef[1]), (float(coef[0]), *map(float, coef[2:]))
        uncs = (float(unc[1]), float(unc[0]), *map(float, unc[2:]))
    elif target == "C_at_inverse_integers":
        logc, consts = 0.0, tuple(map(float, coef))
        uncs = (0.0, *map(float, unc))
    else:
        logc, consts = float(coef[0]), tuple(map(float, coef[1:]))
        uncs = tuple(map(float, unc))
    return AsymptoticFit(
        target=target,
        alpha=base,
        side=side,
        log_coefficient=logc,
        constants=consts,
        uncertainties=uncs,
        residual=rms,
    )
