from fractions import Fraction

import pytest

from evimech import fixtures
from evimech.mechanism import (
    Challenge,
    DegenerateGap,
    Message,
    NpdViolation,
    NppdViolation,
    ZOverflow,
    assemble_bne_mechanism,
    build_bne_mechanism,
    build_pure_mechanism,
    consistency,
    mechanism_report,
    outcome,
    pure_profile_count,
    transfers,
)

F = Fraction
RICH = frozenset({"h", "mh", "lmh"})
TOP = frozenset({"mh", "lmh"})
LOW = frozenset({"lmh"})
EMPTY = frozenset()


@pytest.fixture(scope="module")
def perturbed_mech():
    return build_bne_mechanism(fixtures.perturbed_example())


@pytest.fixture(scope="module")
def leading_mech():
    # leading example fails NPD; the assembled mechanism is used for transfer
    # arithmetic only (the public builder refuses it, see below)
    return assemble_bne_mechanism(fixtures.leading_example())


@pytest.fixture(scope="module")
def leading_pure_mech():
    return build_pure_mechanism(fixtures.leading_example())


def claims_message(mech, agent, claimed_state, evidence, state_claim=None, challenge=None):
    scn = mech.scenario
    right = scn.right_neighbor(agent)
    return Message(
        scn.dist(agent, claimed_state),
        scn.dist(right, claimed_state),
        frozenset(evidence),
        state_claim=state_claim,
        challenge=challenge,
    )


def truthful_transcript(mech, state):
    scn = mech.scenario
    out = {}
    for agent in scn.agents:
        endowment = max(scn.support(agent, state), key=len)
        out[agent] = mech.truthful_message(agent, state, endowment)
    return out


def test_builder_refuses_leading():
    with pytest.raises(NpdViolation) as exc:
        build_bne_mechanism(fixtures.leading_example())
    failures = exc.value.verdict.failures
    assert [(f.source_state, f.target_state) for f in failures] == [("H", "M")]


def test_pure_builder_refuses_pure_deception_fixture():
    with pytest.raises(NppdViolation):
        build_pure_mechanism(fixtures.pure_deception_example())


def test_pure_builder_z_cap():
    with pytest.raises(ZOverflow):
        build_pure_mechanism(fixtures.leading_example(), z_cap=10)


def test_bet_tables(perturbed_mech, leading_mech):
    assert set(perturbed_mech.bets) == {("M", "H"), ("L", "H"), ("L", "M")}
    assert all(agent == "A" for agent in perturbed_mech.bet_agents.values())
    assert set(leading_mech.bets) == {("M", "H"), ("L", "H"), ("L", "M")}
    assert leading_mech.bets[("M", "H")].margin == F(1, 5)


def test_scaling_values(perturbed_mech, leading_mech):
    assert leading_mech.scaling.gap_min == F(2, 25)
    assert leading_mech.scaling.tau_low == 13
    assert leading_mech.scaling.rho_min == F(2, 5)
    assert leading_mech.scaling.tau_high == 58

    assert perturbed_mech.scaling.gap_min == F(3, 50)
    assert perturbed_mech.scaling.tau_low == 17
    assert perturbed_mech.scaling.rho_min == F(1, 10)
    assert perturbed_mech.scaling.tau2_max == F(1343, 50)
    assert perturbed_mech.scaling.tau_high == 279

    for mech in (perturbed_mech, leading_mech):
        slacks = mech.scaling.slacks()
        assert slacks["score_gap"] > 0
        assert slacks["refutation"] >= 0
        assert slacks["eps_dominance"] > 0
        assert slacks["one_dollar"] > 0


def test_single_state_scaling_defaults():
    scn = fixtures.make_scenario(
        agents=("A", "B"),
        states=("s",),
        articles=(),
        dists={("A", "s"): {EMPTY: F(1)}, ("B", "s"): {EMPTY: F(1)}},
        scf={"s": "o"},
        outcomes=("o",),
    )
    mech = build_bne_mechanism(scn)
    assert (mech.scaling.eps, mech.scaling.tau_low, mech.scaling.tau_high) == (F(1, 100), 2, 1)


def test_degenerate_gap_raises():
    scn = fixtures.make_scenario(
        agents=("A", "B"),
        states=("s1", "s2"),
        articles=(),
        dists={(a, s): {EMPTY: F(1)} for a in ("A", "B") for s in ("s1", "s2")},
        scf={"s1": "o1", "s2": "o2"},
        outcomes=("o1", "o2"),
    )
    with pytest.raises(DegenerateGap):
        assemble_bne_mechanism(scn)


def test_consistency(leading_mech):
    truthful = truthful_transcript(leading_mech, "M")
    assert consistency(leading_mech, truthful) == "M"
    broken = dict(truthful)
    scn = leading_mech.scenario
    broken["A"] = Message(truthful["A"].p_own, scn.dist("B", "M"), truthful["A"].evidence, "M")
    # B's distribution is constant so the perturbed neighbour report changes nothing;
    # perturb A's self-claim instead
    broken["A"] = Message(scn.dist("A", "H"), truthful["A"].p_right, truthful["A"].evidence, "M")
    assert consistency(leading_mech, broken) is None
    # claims decide consistency, not the true state
    all_h = {a: claims_message(leading_mech, a, "H", t.evidence, state_claim="H") for a, t in truthful.items()}
    assert consistency(leading_mech, all_h) == "H"
    assert outcome(leading_mech, all_h) == "grant_a"


def test_truthful_transfers_all_zero(perturbed_mech, leading_mech, leading_pure_mech):
    for mech in (perturbed_mech, leading_mech, leading_pure_mech):
        for state in mech.scenario.states:
            table = transfers(mech, truthful_transcript(mech, state))
            for agent, items in table.items():
                assert items["total"] == 0
                assert all(items[k] == 0 for k in ("evidence_incentive", "scoring", "crosscheck", "refutation_fine", "bet"))


def test_bet_transfer_expectation_is_minus_eps_fifth(leading_mech):
    # consensus on H with B claiming M activates the (M, H) bet on A's evidence
    scn = leading_mech.scenario
    eps = leading_mech.scaling.eps
    bet = leading_mech.bets[("M", "H")]
    expectation = F(0)
    for coll, prob in scn.dist("A", "H").items():
        transcript = {
            "A": claims_message(leading_mech, "A", "H", coll, state_claim="H"),
            "B": claims_message(leading_mech, "B", "H", EMPTY, state_claim="M"),
        }
        table = transfers(leading_mech, transcript)
        assert table["B"]["bet"] == eps * bet.value(coll)
        expectation += prob * table["B"]["bet"]
    assert expectation == -eps / 5


def test_inconsistent_transcript_evidence_incentive(leading_mech):
    scn = leading_mech.scenario
    transcript = {
        "A": claims_message(leading_mech, "A", "H", TOP, state_claim="H"),
        "B": claims_message(leading_mech, "B", "M", EMPTY, state_claim="M"),
    }
    # B's claims about A differ from A's self-claims: no consistent state
    assert consistency(leading_mech, transcript) is None
    table = transfers(leading_mech, transcript)
    assert table["A"]["evidence_incentive"] == leading_mech.scaling.eps * 2
    assert table["B"]["evidence_incentive"] == 0  # empty collection


def test_own_bet_gives_no_evidence_windfall(leading_mech):
    transcript = {
        "A": claims_message(leading_mech, "A", "H", TOP, state_claim="H"),
        "B": claims_message(leading_mech, "B", "H", EMPTY, state_claim="M"),
    }
    table = transfers(leading_mech, transcript)
    # B's own bet is active: A collects the evidence incentive, B does not
    assert table["A"]["evidence_incentive"] == leading_mech.scaling.eps * 2
    assert table["B"]["evidence_incentive"] == 0
    assert table["B"]["bet"] != 0


def test_self_bet_is_void(leading_mech):
    transcript = {
        "A": claims_message(leading_mech, "A", "H", LOW, state_claim="M"),
        "B": claims_message(leading_mech, "B", "H", EMPTY, state_claim="H"),
    }
    table = transfers(leading_mech, transcript)
    assert table["A"]["bet"] == 0
    assert all(items["evidence_incentive"] == 0 for items in table.values())


def test_crosscheck_fine(leading_mech):
    scn = leading_mech.scenario
    transcript = {
        "A": Message(scn.dist("A", "M"), scn.dist("B", "H"), TOP, "H"),
        "B": Message(scn.dist("B", "H"), scn.dist("A", "H"), EMPTY, "H"),
    }
    table = transfers(leading_mech, transcript)
    assert table["A"]["crosscheck"] == -leading_mech.scaling.tau_low
    assert table["B"]["crosscheck"] == 0


def test_refutation_fine_on_perturbed(perturbed_mech):
    # consensus on M while A presents the witness collection that refutes M
    transcript = {
        "A": claims_message(perturbed_mech, "A", "M", RICH, state_claim="M"),
        "B": claims_message(perturbed_mech, "B", "M", EMPTY, state_claim="M"),
    }
    table = transfers(perturbed_mech, transcript)
    assert table["B"]["refutation_fine"] == -perturbed_mech.scaling.tau_high
    assert table["A"]["refutation_fine"] == 0
    # the refuter's own evidence reward is on
    assert table["A"]["evidence_incentive"] == perturbed_mech.scaling.eps * 3


def test_scoring_propriety(perturbed_mech):
    scn = perturbed_mech.scenario
    tau_low = perturbed_mech.scaling.tau_low
    for state in scn.states:
        for agent in scn.agents:
            subject = scn.right_neighbor(agent)
            truth = scn.dist(subject, state)

            def expected_score(report):
                total = F(0)
                for coll, prob in truth.items():
                    total += prob * (2 * report.prob(coll) - sum((p * p for _, p in report.items()), F(0)))
                return tau_low * total

            scores = {report: expected_score(report) for report in scn.alphabet(subject)}
            best = max(scores.values())
            winners = [r for r, v in scores.items() if v == best]
            assert winners == [truth]


def test_pure_challenge_payment(leading_pure_mech):
    scn = leading_pure_mech.scenario
    # assignment rows follow canonical support order (smaller collections first)
    identity = Challenge(
        target_state="H",
        source_state="M",
        assignments=(
            ("A", ((LOW, LOW), (TOP, TOP))),
            ("B", ((EMPTY, EMPTY),)),
        ),
    )
    assert identity in leading_pure_mech.challenges
    two_point = leading_pure_mech.challenges[identity]
    eps = leading_pure_mech.scaling.eps
    # consensus on H, B challenges with the identity plan at M
    expectation = F(0)
    for coll, prob in scn.dist("A", "M").items():
        transcript = {
            "A": claims_message(leading_pure_mech, "A", "H", coll),
            "B": claims_message(leading_pure_mech, "B", "H", EMPTY, challenge=identity),
        }
        table = transfers(leading_pure_mech, transcript)
        assert table["B"]["bet"] == eps * two_point.value(coll)
        expectation += prob * table["B"]["bet"]
    # profitable when the deception is real (played at true state M)
    assert expectation > 0
    # and loss-making against truthful play at H
    against_truth = sum(
        (prob * two_point.value(coll) for coll, prob in scn.dist("A", "H").items()), F(0)
    )
    assert against_truth < 0


def test_pure_profile_count_leading():
    assert pure_profile_count(fixtures.leading_example()) == 839808


def test_mechanism_report_shape(perturbed_mech, leading_pure_mech):
    report = mechanism_report(perturbed_mech)
    assert report["variant"] == "bne"
    assert report["challenger_table"] == {"L->H": "A", "L->M": "A", "M->H": "A"}
    assert set(report["scaling"]["slack"]) >= {"score_gap", "eps_dominance", "one_dollar"}
    pure_report = mechanism_report(leading_pure_mech)
    assert pure_report["identifier_count"] == 839808
    assert pure_report["valid_challenges"] == len(leading_pure_mech.challenges)
