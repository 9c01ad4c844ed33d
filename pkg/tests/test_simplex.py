from fractions import Fraction

from evimech import simplex

F = Fraction


def test_simple_maximization():
    # max 3x + 2y st x + y <= 4, x + 3y <= 6, x,y >= 0 -> (4, 0), value 12
    result = simplex.maximize(
        [F(3), F(2)],
        [([F(1), F(1)], simplex.LE, F(4)), ([F(1), F(3)], simplex.LE, F(6))],
        [(F(0), None), (F(0), None)],
    )
    assert result.status == "optimal"
    assert result.objective == F(12)
    assert result.values == [F(4), F(0)]


def test_equality_and_fractional_optimum():
    # max x + y st x + 2y == 1, x <= 1/3 -> x=1/3, y=1/3
    result = simplex.maximize(
        [F(1), F(1)],
        [([F(1), F(2)], simplex.EQ, F(1))],
        [(F(0), F(1, 3)), (F(0), None)],
    )
    assert result.status == "optimal"
    assert result.objective == F(2, 3)
    assert result.values == [F(1, 3), F(1, 3)]


def test_free_variables():
    # max -x st x >= -5 encoded with free variable and explicit constraint
    result = simplex.maximize(
        [F(-1)],
        [([F(1)], simplex.GE, F(-5))],
        [(None, None)],
    )
    assert result.status == "optimal"
    assert result.objective == F(5)
    assert result.values == [F(-5)]


def test_infeasible():
    result = simplex.maximize(
        [F(1)],
        [([F(1)], simplex.LE, F(1)), ([F(1)], simplex.GE, F(2))],
        [(F(0), None)],
    )
    assert result.status == "infeasible"


def test_unbounded():
    result = simplex.maximize([F(1)], [], [(F(0), None)])
    assert result.status == "unbounded"


def test_degenerate_cycling_guard():
    # classic degenerate LP; Bland's rule must terminate
    result = simplex.maximize(
        [F(3, 4), F(-150), F(1, 50), F(-6)],
        [
            ([F(1, 4), F(-60), F(-1, 25), F(9)], simplex.LE, F(0)),
            ([F(1, 2), F(-90), F(-1, 50), F(3)], simplex.LE, F(0)),
            ([F(0), F(0), F(1), F(0)], simplex.LE, F(1)),
        ],
        [(F(0), None)] * 4,
    )
    assert result.status == "optimal"
    assert result.objective == F(1, 20)


def test_feasibility_helper():
    assert simplex.feasible([([F(1)], simplex.LE, F(1))], [(F(0), None)])
    assert not simplex.feasible(
        [([F(1)], simplex.LE, F(0)), ([F(1)], simplex.GE, F(1))], [(F(0), None)]
    )
