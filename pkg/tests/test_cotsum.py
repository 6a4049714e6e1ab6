"""Tests for exact cotangent expressions, the pair cache, and cross-routes."""

import math
import random
from fractions import Fraction

import pytest

from grhcot.cotsum import (
    CotangentExpression,
    CValueCache,
    c_integral_oracle,
    c_selection_rule,
    c_value,
    eval_cot,
    h_exact,
)
from grhcot.numkernel import Discriminant, ReducedFraction

D3 = Discriminant(-3)
D4 = Discriminant(-4)
D7 = Discriminant(-7)


def test_expression_validation():
    ok = CotangentExpression(((Fraction(1), ReducedFraction(1, 4)),))
    assert len(ok) == 1
    with pytest.raises(ValueError):
        CotangentExpression(((Fraction(0), ReducedFraction(1, 4)),))
    with pytest.raises(ValueError):
        CotangentExpression(((Fraction(1, 3), ReducedFraction(1, 4)),))
    with pytest.raises(ValueError):
        CotangentExpression(((Fraction(1), ReducedFraction(5, 4)),))
    with pytest.raises(ValueError):
        CotangentExpression(
            (
                (Fraction(1), ReducedFraction(1, 2)),
                (Fraction(1), ReducedFraction(1, 4)),
            )
        )


def test_expression_from_terms_combines_and_drops():
    expr = CotangentExpression.from_terms(
        [
            (Fraction(1, 2), ReducedFraction(1, 4)),
            (Fraction(1, 2), ReducedFraction(1, 4)),
            (Fraction(1), ReducedFraction(1, 3)),
            (Fraction(-1), ReducedFraction(1, 3)),
        ]
    )
    assert expr.terms == ((Fraction(1), ReducedFraction(1, 4)),)


def test_eval_cot_reflection():
    # cot(pi/4) = 1 and cot(3 pi/4) = -1
    e1 = CotangentExpression(((Fraction(1), ReducedFraction(1, 4)),))
    e2 = CotangentExpression(((Fraction(1), ReducedFraction(3, 4)),))
    assert eval_cot(e1) == pytest.approx(1.0, abs=1e-15)
    assert eval_cot(e2) == pytest.approx(-1.0, abs=1e-15)
    assert eval_cot(CotangentExpression(())) == 0.0


def test_h_anchor_values():
    assert eval_cot(h_exact(D4, 1, 1)) == pytest.approx(0.5, abs=1e-15)
    assert eval_cot(h_exact(D4, 3, 4)) == pytest.approx(
        -1.6955181300451472, abs=2e-15
    )
    assert eval_cot(h_exact(D4, 4, 3)) == pytest.approx(4.0, abs=2e-15)


def test_h_exact_rejects_nonpositive():
    with pytest.raises(ValueError):
        h_exact(D4, 0, 1)
    with pytest.raises(ValueError):
        h_exact(D4, 1, -2)


def test_pair_value_closed_forms():
    # modulus-4 pair values with algebraic closed forms
    cases = [
        ((1, 1), 1.0),
        ((1, 2), 2.0 - math.sqrt(2.0)),
        ((1, 3), 2.0 - math.sqrt(3.0)),
        ((2, 3), math.sqrt(2.0)),
        ((3, 4), 6.0 - 2.0 * math.sqrt(2.0 + math.sqrt(2.0))),
    ]
    for (m, n), want in cases:
        got = c_value(D4, m, n)
        assert abs(got - want) <= 1e-12 * abs(want), (m, n)


def test_pair_value_symmetry_and_homogeneity():
    # the cache routes through the reduced transposed pair, so these are
    # float-exact, not merely close
    assert c_value(D4, 3, 4) == c_value(D4, 4, 3)
    assert c_value(D4, 2, 4) == 2.0 * c_value(D4, 1, 2)
    assert c_value(D4, 3, 3) == 3.0 * c_value(D4, 1, 1)
    assert c_value(D7, 6, 10) == 2.0 * c_value(D7, 3, 5)


def test_pair_value_other_discriminants():
    assert c_value(D3, 1, 1) == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-14)


def test_selection_rule_terms_for_3_4():
    expr = c_selection_rule(3, 4)
    flat = [(coeff, (a.num, a.den)) for coeff, a in expr.terms]
    assert flat == [
        (Fraction(1), (1, 12)),
        (Fraction(1), (5, 12)),
        (Fraction(1), (9, 16)),
        (Fraction(1), (13, 16)),
    ]


def test_selection_rule_matches_pair_route():
    rng = random.Random(20260819)
    for _ in range(30):
        m = rng.randrange(1, 17)
        n = rng.randrange(1, 17)
        via_sel = eval_cot(c_selection_rule(m, n))
        via_cache = c_value(D4, m, n)
        assert abs(via_sel - via_cache) <= 1e-12 * max(1.0, abs(via_cache)), (m, n)


def test_h_sum_matches_pair_route():
    rng = random.Random(7)
    for d in (-3, -4, -7):
        D = Discriminant(d)
        for _ in range(10):
            m = rng.randrange(1, 13)
            n = rng.randrange(1, 13)
            direct = eval_cot(h_exact(D, m, n)) + eval_cot(h_exact(D, n, m))
            routed = c_value(D, m, n)
            assert abs(direct - routed) <= 1e-11 * max(1.0, abs(routed)), (d, m, n)


def test_integral_oracle_within_bound():
    rng = random.Random(11)
    for d in (-3, -4, -7):
        D = Discriminant(d)
        for _ in range(5):
            m = rng.randrange(1, 9)
            n = rng.randrange(1, 9)
            val, bound = c_integral_oracle(D, m, n, 1e4)
            assert bound > 0
            assert abs(val - c_value(D, m, n)) <= bound, (d, m, n)


def test_integral_oracle_bound_shrinks():
    v1, b1 = c_integral_oracle(D4, 3, 4, 1e3)
    v2, b2 = c_integral_oracle(D4, 3, 4, 1e5)
    assert b2 < b1
    assert abs(v2 - c_value(D4, 3, 4)) < abs(v1 - c_value(D4, 3, 4))


def test_integral_oracle_rejects_bad_input():
    with pytest.raises(ValueError):
        c_integral_oracle(D4, 0, 1, 10.0)
    with pytest.raises(ValueError):
        c_integral_oracle(D4, 1, 1, 0.5)


def test_c_value_rejects_nonpositive():
    with pytest.raises(ValueError):
        c_value(D4, 0, 3)


def test_cache_round_trip_bit_exact(tmp_path):
    path = str(tmp_path / "pairs.csv")
    cache = CValueCache(path)
    pairs = [(1, 2), (3, 4), (1, 7), (5, 8)]
    cache.ensure(D4, pairs, threads=1)
    cache.save()
    reloaded = CValueCache(path)
    for p, q in pairs:
        assert reloaded.get_C(D4, p, q) == cache.get_C(D4, p, q)  # bit exact
    assert len(reloaded) == len(pairs)


def test_cache_thread_determinism():
    pairs = [(p, q) for q in range(1, 40) for p in range(1, q + 1) if math.gcd(p, q) == 1]
    c1 = CValueCache()
    c1.ensure(D4, pairs, threads=1)
    c4 = CValueCache()
    c4.ensure(D4, pairs, threads=4)
    for p, q in pairs:
        assert c1.get_C(D4, p, q) == c4.get_C(D4, p, q), (p, q)


def test_cache_rejects_malformed_record(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("-4,2,4,0x1.0p-1\n", encoding="ascii")
    with pytest.raises(ValueError):
        CValueCache(str(path))


def test_cache_ignores_blank_lines(tmp_path):
    path = tmp_path / "pairs.csv"
    path.write_text("\n-4,1,2," + (0.25).hex() + "\n\n", encoding="ascii")
    cache = CValueCache(str(path))
    assert len(cache) == 1
    assert cache.get_C(D4, 1, 2) == 0.25
