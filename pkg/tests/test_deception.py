from fractions import Fraction

import pytest

from evimech import fixtures
from evimech.deception import (
    Bet,
    CombinatorialBlowup,
    InfeasibleSeparation,
    NoImbalance,
    PurePlan,
    certify_bet,
    find_perfect_deception,
    find_pure_perfect_deception,
    identity_plan,
    induced_distribution,
    perfect_deception,
    sourcewise_worst_case,
    synthesize_bet,
    synthesize_gamma_delta,
)
from evimech.scenario import Distribution

F = Fraction
TOP = frozenset({"mh", "lmh"})
LOW = frozenset({"lmh"})
EMPTY = frozenset()


@pytest.fixture
def leading():
    return fixtures.leading_example()


@pytest.fixture
def perturbed():
    return fixtures.perturbed_example()


def test_induced_distribution_of_known_plan(leading):
    plan = find_perfect_deception(leading, "A", "H", "M")
    assert plan is not None
    assert not plan.check(leading)
    induced = induced_distribution(plan)
    assert induced == Distribution({TOP: F(2, 5), LOW: F(3, 5)})
    # the 0.6-mass source splits 2/3 kept, 1/3 collapsed
    flows = plan.flow_map()
    assert flows[(TOP, TOP)] == F(2, 5)
    assert flows[(TOP, LOW)] == F(1, 5)


def test_identity_plan_induces_own_distribution(leading):
    plan = identity_plan(leading, "A", "H")
    assert induced_distribution(plan) == leading.dist("A", "H")


def test_plan_sending_all_mass_to_empty(leading):
    from evimech.deception import TransportPlan

    plan = TransportPlan(
        "A", "H", "H", ((TOP, EMPTY, F(3, 5)), (LOW, EMPTY, F(2, 5)))
    )
    assert induced_distribution(plan) == Distribution({EMPTY: F(1)})


def test_no_perfect_deception_m_to_h(leading):
    result = perfect_deception(leading, "A", "M", "H")
    assert result.plan is None
    assert result.flow_value < 1
    assert result.witness is not None and result.witness.verify()


def test_self_pair_has_identity(leading):
    plan = find_perfect_deception(leading, "A", "M", "M")
    assert plan is not None
    assert induced_distribution(plan) == leading.dist("A", "M")


def test_perturbed_directions(perturbed):
    # H -> M still deceivable (extra article simply withheld), M -> H is not
    assert find_perfect_deception(perturbed, "A", "H", "M") is not None
    result = perfect_deception(perturbed, "A", "M", "H")
    assert result.plan is None
    assert result.flow_value < 1


def test_pure_perfect_on_four_state_example():
    scn = fixtures.pure_deception_example()
    big = frozenset({"lmhu", "mhu", "hu"})
    mid = frozenset({"lmhu", "mhu"})
    low = frozenset({"lmhu"})
    plan = find_pure_perfect_deception(scn, "A", "H", "U")
    assert plan is not None
    assert plan.assignment_map() == {mid: low, big: big}
    assert induced_distribution(plan.as_transport(scn)) == scn.dist("A", "U")


def test_no_pure_perfect_in_leading(leading):
    assert find_pure_perfect_deception(leading, "A", "H", "M") is None
    # but the mixed one exists
    assert find_perfect_deception(leading, "A", "H", "M") is not None


def test_pure_self_identity(leading):
    plan = find_pure_perfect_deception(leading, "A", "L", "L")
    assert plan is not None
    assert plan.assignment_map() == {LOW: LOW}


def test_hand_bet_certifies(leading):
    hand = Bet("A", "M", "H", ((LOW, F(1)), (TOP, F(-1))), margin=F(1, 5))
    report = certify_bet(leading, hand)
    assert (report.value_at_lie, report.worst_case_at_truth, report.passed) == (F(-1, 5), F(1, 5), True)
    # against unrestricted withholding the hand bet is beatable; the robust
    # value comes from the sourcewise formula
    assert report.robust_worst_case == F(-2, 5)
    assert report.robust_worst_case == sourcewise_worst_case(leading, hand)


def test_zero_and_negated_bets_fail(leading):
    zero = Bet("A", "M", "H", (), margin=F(0))
    report = certify_bet(leading, zero)
    assert (report.value_at_lie, report.worst_case_at_truth, report.passed) == (F(0), F(0), False)
    negated = Bet("A", "M", "H", ((LOW, F(-1)), (TOP, F(1))), margin=F(0))
    report = certify_bet(leading, negated)
    assert (report.value_at_lie, report.worst_case_at_truth, report.passed) == (F(1, 5), F(-1, 5), False)


def test_synthesized_bet_on_known_pair(leading):
    bet = synthesize_bet(leading, "A", "M", "H")
    assert bet.margin == F(1, 5)
    report = certify_bet(leading, bet)
    assert report.passed
    assert report.value_at_lie <= -bet.margin
    assert report.worst_case_at_truth >= bet.margin
    # synthesized bets clear the stronger full-polytope bar
    assert report.robust_worst_case >= bet.margin


def test_bet_synthesis_refuses_deceivable_pair(leading):
    with pytest.raises(InfeasibleSeparation):
        synthesize_bet(leading, "A", "H", "M")


def test_bet_scaling_invariance(leading):
    bet = synthesize_bet(leading, "A", "M", "H")
    for factor in (F(1, 3), F(2), F(7, 5)):
        assert certify_bet(leading, bet.scaled(factor)).passed


def test_degenerate_absent_collection_bet():
    scn = fixtures.micro_example()
    bet = synthesize_bet(scn, "A", "s2", "s1")
    report = certify_bet(scn, bet)
    assert report.passed and bet.margin > 0


def test_certify_bet_blowup_cap(leading):
    hand = Bet("A", "M", "H", ((LOW, F(1)), (TOP, F(-1))), margin=F(1, 5))
    with pytest.raises(CombinatorialBlowup):
        certify_bet(leading, hand, plan_cap=0)


def test_gamma_delta_construction(leading):
    # pure plan at H claiming M truth-tellingly relabelled: identity assignment
    plan = PurePlan("A", "H", "M", ((TOP, TOP), (LOW, LOW)))
    bet = synthesize_gamma_delta(leading, plan)
    assert bet.gamma < 0 < bet.delta
    induced = induced_distribution(plan.as_transport(leading))
    target = leading.dist("A", "M")
    assert bet.short_collection == LOW and bet.long_collection == TOP
    assert bet.gamma * induced.prob(bet.short_collection) + bet.delta * induced.prob(bet.long_collection) > 0
    assert bet.gamma * target.prob(bet.short_collection) + bet.delta * target.prob(bet.long_collection) < 0


def test_gamma_delta_rejects_perfect_plan():
    scn = fixtures.pure_deception_example()
    plan = find_pure_perfect_deception(scn, "A", "H", "U")
    with pytest.raises(NoImbalance):
        synthesize_gamma_delta(scn, plan)


def test_duality_on_fixture_pairs(leading, perturbed):
    for scn in (leading, perturbed, fixtures.pure_deception_example(), fixtures.micro_example()):
        for agent in scn.agents:
            for s in scn.states:
                for s_prime in scn.states:
                    if s == s_prime:
                        continue
                    plan = find_perfect_deception(scn, agent, s, s_prime)
                    if plan is None:
                        bet = synthesize_bet(scn, agent, s, s_prime)
                        assert bet.margin > 0
                        assert certify_bet(scn, bet).passed
                    else:
                        with pytest.raises(InfeasibleSeparation):
                            synthesize_bet(scn, agent, s, s_prime)
