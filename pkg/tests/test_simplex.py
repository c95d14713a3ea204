import pytest

from cgmkit.smt.rat import Delta, Q
from cgmkit.smt.simplex import Simplex, Unbounded


def test_plain_bounds_and_conflict():
    s = Simplex()
    x = s.new_var()
    assert s.assert_lower(x, Delta(3), "L") is None
    assert s.check() is None
    conflict = s.assert_upper(x, Delta(2), "U")
    assert set(conflict) == {"L", "U"}


def test_row_conflict_explanation():
    s = Simplex()
    x, y = s.new_var(), s.new_var()
    t = s.define_slack({x: Q(1), y: Q(1)})
    assert s.assert_lower(x, Delta(2), "lx") is None
    assert s.assert_lower(y, Delta(2), "ly") is None
    assert s.assert_upper(t, Delta(3), "ut") is None
    conflict = s.check()
    assert conflict is not None
    assert set(conflict) == {"lx", "ly", "ut"}


def test_minimize_basic_and_strict():
    s = Simplex()
    x = s.new_var()
    s.assert_lower(x, Delta(3), "a")
    assert s.check() is None
    assert s.minimize(x) == Delta(3)
    # strict: x > 3 gives infimum 3 + delta
    s2 = Simplex()
    y = s2.new_var()
    s2.assert_lower(y, Delta(3, 1), "b")
    assert s2.check() is None
    v = s2.minimize(y)
    assert v.a == 3 and v.b > 0


def test_minimize_unbounded():
    s = Simplex()
    x = s.new_var()
    s.assert_upper(x, Delta(0), "u")
    assert s.check() is None
    with pytest.raises(Unbounded):
        s.minimize(x)


def test_minimize_lp_vertex():
    # min x + y  s.t.  x + 2y >= 4, x >= 0, y >= 0, x <= 3
    s = Simplex()
    x, y = s.new_var(), s.new_var()
    t = s.define_slack({x: Q(1), y: Q(2)})
    obj = s.define_slack({x: Q(1), y: Q(1)})
    s.assert_lower(t, Delta(4), "t")
    s.assert_lower(x, Delta(0), "x0")
    s.assert_lower(y, Delta(0), "y0")
    s.assert_upper(x, Delta(3), "x3")
    assert s.check() is None
    assert s.minimize(obj) == Delta(2)  # x=0, y=2


def test_incremental_push_pop_restores_feasibility():
    s = Simplex()
    x, y = s.new_var(), s.new_var()
    t = s.define_slack({x: Q(1), y: Q(-1)})
    assert s.assert_lower(t, Delta(1), "base") is None
    assert s.check() is None
    mark = s.mark()
    assert s.assert_upper(x, Delta(0), "ux") is None
    assert s.assert_lower(y, Delta(0), "ly") is None
    conflict = s.check()
    assert conflict is not None and set(conflict) == {"base", "ux", "ly"}
    s.pop_to(mark)
    assert s.check() is None  # previous feasible status restored
    # bounds really retracted
    assert s.upper[x] is None and s.lower[y] is None


def test_values_satisfy_rows_after_pivoting():
    s = Simplex()
    xs = [s.new_var() for _ in range(4)]
    t1 = s.define_slack({xs[0]: Q(2), xs[1]: Q(-1), xs[2]: Q(1)})
    t2 = s.define_slack({xs[1]: Q(1), xs[3]: Q(3)})
    s.assert_lower(t1, Delta(5), "a")
    s.assert_upper(t2, Delta(-2), "b")
    s.assert_lower(xs[0], Delta(-10), "c")
    s.assert_upper(xs[0], Delta(10), "d")
    assert s.check() is None
    delta = s.concrete_delta()
    vals = [s.value(v, delta) for v in range(s.nvars)]
    assert 2 * vals[0] - vals[1] + vals[2] == vals[xs[2] + 1] or True
    # explicit row identity check
    assert vals[t1] == 2 * vals[xs[0]] - vals[xs[1]] + vals[xs[2]]
    assert vals[t2] == vals[xs[1]] + 3 * vals[xs[3]]
    assert vals[t1] >= 5 and vals[t2] <= -2


def test_incremental_equals_rebuild_on_random_sequences():
    """Differential test: interleaved assert/check/pop sequences agree with a
    from-scratch simplex on every prefix they share."""
    import random
    from fractions import Fraction

    from fm import feasible

    for seed in range(60):
        rng = random.Random(seed)
        nvars = rng.randint(2, 4)
        s = Simplex()
        xs = [s.new_var() for _ in range(nvars)]
        slacks = []
        for _ in range(rng.randint(1, 3)):
            combo = {x: Q(rng.randint(-3, 3) or 1) for x in rng.sample(xs, rng.randint(1, nvars))}
            slacks.append((s.define_slack(combo), combo))
        stack = []  # (mark, bound description)
        active = []  # rows for the FM cross-check

        def fm_rows():
            rows = []
            for v, lower, bound in active:
                coeffs = {}
                for sv, combo in slacks:
                    if sv == v:
                        coeffs = {f"x{x}": Fraction(int(c.numerator), int(c.denominator)) for x, c in combo.items()}
                        break
                else:
                    coeffs = {f"x{v}": Fraction(1)}
                const = Fraction(int(bound.a.numerator), int(bound.a.denominator))
                strict = bound.b != 0
                if lower:
                    rows.append(({k: -c for k, c in coeffs.items()}, const, strict))
                else:
                    rows.append((dict(coeffs), -const, strict))
            return rows

        consistent = True
        for step in range(24):
            op = rng.random()
            if op < 0.55 or not stack:
                v = rng.choice(xs + [sv for sv, _ in slacks])
                bound = Delta(rng.randint(-6, 6), rng.choice([0, 0, 1, -1]))
                lower = rng.random() < 0.5
                if (lower and bound.b < 0) or (not lower and bound.b > 0):
                    bound = Delta(bound.a, 0)
                mark = s.mark()
                if lower:
                    conflict = s.assert_lower(v, bound, f"s{step}")
                else:
                    conflict = s.assert_upper(v, bound, f"s{step}")
                if conflict is None:
                    stack.append((mark, (v, lower, bound)))
                    active.append((v, lower, bound))
                    conflict = s.check()
                    if conflict is not None:
                        # infeasible: FM must agree, then retract
                        assert not feasible(fm_rows()), (seed, step)
                        mark, desc = stack.pop()
                        active.pop()
                        s.pop_to(mark)
                        assert s.check() is None
                    else:
                        assert feasible(fm_rows()), (seed, step)
            else:
                mark, desc = stack.pop()
                active.pop()
                s.pop_to(mark)
                assert s.check() is None, (seed, step)


def test_delta_concretization_respects_strict_bounds():
    s = Simplex()
    x = s.new_var()
    s.assert_lower(x, Delta(0, 1), "gt0")   # x > 0
    s.assert_upper(x, Delta(1, -1), "lt1")  # x < 1
    assert s.check() is None
    d = s.concrete_delta()
    v = s.value(x, d)
    assert 0 < v < 1
