"""Implementing mechanisms: message spaces, outcome rule, the five transfer
components, scaling parameters, and the pure-strategy identifier variant."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .conditions import Verdict, check_npd, check_nppd, check_stochastic_measurability
from .deception import (
    Bet,
    PurePlan,
    TwoPointBet,
    find_perfect_deception,
    induced_distribution,
    synthesize_bet,
    synthesize_gamma_delta,
)
from .scenario import Distribution, Scenario, collection_key, refutes

TRANSFER_KEYS = ("evidence_incentive", "scoring", "crosscheck", "refutation_fine", "bet")


class NpdViolation(ValueError):
    def __init__(self, verdict: Verdict):
        super().__init__("scenario admits a perfect deception across an outcome boundary")
        self.verdict = verdict


class NppdViolation(ValueError):
    def __init__(self, verdict: Verdict):
        super().__init__("scenario admits a pure-perfect deception across an outcome boundary")
        self.verdict = verdict


class ZOverflow(RuntimeError):
    pass


class DegenerateGap(ValueError):
    """Identical distribution profiles with distinct outcomes (SM failure)."""


@dataclass(frozen=True)
class Message:
    p_own: Distribution
    p_right: Distribution
    evidence: frozenset
    state_claim: str | None = None
    challenge: "Challenge | None" = None


@dataclass(frozen=True)
class Challenge:
    """Pure-variant whistle: names the consensus it contests, the claimed true
    state, and the pure deception profile allegedly being played there."""

    target_state: str
    source_state: str
    assignments: tuple  # ((agent, ((src, dst), ...)), ...) in agent order

    def assignment_for(self, agent):
        for name, rows in self.assignments:
            if name == agent:
                return dict(rows)
        return None


def challenge_key(challenge: "Challenge") -> tuple:
    """Total-order sort key (frozensets themselves only partially order)."""
    return (
        challenge.target_state,
        challenge.source_state,
        tuple(
            (agent, tuple((collection_key(src), collection_key(dst)) for src, dst in rows))
            for agent, rows in challenge.assignments
        ),
    )


@dataclass(frozen=True)
class ScalingParams:
    eps: Fraction
    tau_low: Fraction
    tau_high: Fraction
    tau2_max: Fraction
    gap_min: Fraction | None
    rho_min: Fraction | None
    collection_max: int
    bet_max: Fraction
    span: Fraction

    def slacks(self) -> dict:
        out = {}
        if self.gap_min is not None:
            out["score_gap"] = self.tau_low * self.gap_min - 1
        if self.rho_min is not None:
            out["refutation"] = self.tau_high * self.rho_min - (1 + self.tau2_max)
        out["eps_dominance"] = (self.tau_low - 1) - self.eps * (self.collection_max + self.bet_max)
        out["one_dollar"] = 1 - self.span - self.eps * (self.collection_max + 2 * self.bet_max)
        return out


@dataclass
class Mechanism:
    variant: str  # "bne" | "pure"
    scenario: Scenario
    scaling: ScalingParams
    bets: dict  # (truth_state, lie_state) -> Bet, for the bne variant
    bet_agents: dict  # (truth_state, lie_state) -> agent
    challenges: dict  # Challenge -> TwoPointBet (with challenger agent resolved)
    challenge_agents: dict  # Challenge -> agent whose evidence is bet on
    z_count: int
    arbitrary_outcome: str

    def with_scaling(self, **overrides) -> "Mechanism":
        return replace(self, scaling=replace(self.scaling, **overrides))

    def truthful_message(self, agent, state, evidence=None) -> Message:
        scn = self.scenario
        right = scn.right_neighbor(agent)
        if evidence is None:
            raise ValueError("pass the type's endowment explicitly")
        if self.variant == "bne":
            return Message(scn.dist(agent, state), scn.dist(right, state), frozenset(evidence), state_claim=state)
        return Message(scn.dist(agent, state), scn.dist(right, state), frozenset(evidence), challenge=None)


# -- outcome rule -------------------------------------------------------------


def consistency(mech: Mechanism, transcript: dict) -> str | None:
    """Canonically-least state every distributional claim matches, if any."""
    scn = mech.scenario
    for state in scn.states:
        ok = True
        for agent in scn.agents:
            msg = transcript[agent]
            right = scn.right_neighbor(agent)
            if msg.p_own != scn.dist(agent, state) or msg.p_right != scn.dist(right, state):
                ok = False
                break
        if ok:
            return state
    return None


def right_claim_state(mech: Mechanism, transcript: dict) -> str | None:
    """State matched by the right-neighbor claims alone (drives the refutation fine)."""
    scn = mech.scenario
    for state in scn.states:
        if all(
            transcript[agent].p_right == scn.dist(scn.right_neighbor(agent), state)
            for agent in scn.agents
        ):
            return state
    return None


def outcome(mech: Mechanism, transcript: dict) -> str:
    state = consistency(mech, transcript)
    if state is None:
        return mech.arbitrary_outcome
    return mech.scenario.scf[state]


# -- transfers ----------------------------------------------------------------


def _quadratic_score(report: Distribution, evidence) -> Fraction:
    self_dot = sum((p * p for _, p in report.items()), Fraction(0))
    return 2 * report.prob(evidence) - self_dot


def _active_bet_payment(mech: Mechanism, transcript: dict, agent, consensus):
    """(active, payment) for the agent's whistle slot given the consensus.

    A bet whose subject is the bettor herself is void (she could steer its
    value through her own presentation), and never feeds the evidence trigger.
    """
    msg = transcript[agent]
    if consensus is None:
        return False, Fraction(0)
    if mech.variant == "bne":
        claim = msg.state_claim
        if claim is None or claim == consensus:
            return False, Fraction(0)
        bet = mech.bets.get((claim, consensus))
        if bet is None:
            return False, Fraction(0)
        target = mech.bet_agents[(claim, consensus)]
        if target == agent:
            return False, Fraction(0)
        return True, mech.scaling.eps * bet.value(transcript[target].evidence)
    challenge = msg.challenge
    if challenge is None or challenge.target_state != consensus:
        return False, Fraction(0)
    if challenge.source_state == consensus:
        return False, Fraction(0)
    two_point = mech.challenges.get(challenge)
    if two_point is None:
        return False, Fraction(0)
    target = mech.challenge_agents[challenge]
    if target == agent:
        return False, Fraction(0)
    return True, mech.scaling.eps * two_point.value(transcript[target].evidence)


def transfers(mech: Mechanism, transcript: dict) -> dict:
    """Itemized exact transfers per agent for one message profile."""
    scn = mech.scenario
    scaling = mech.scaling
    consensus = consistency(mech, transcript)

    bet_state = {}
    for agent in scn.agents:
        bet_state[agent] = _active_bet_payment(mech, transcript, agent, consensus)

    rc_state = right_claim_state(mech, transcript)
    refuters = []
    if rc_state is not None:
        refuters = [
            agent
            for agent in scn.agents
            if refutes(scn, transcript[agent].evidence, rc_state, agent)
        ]

    result = {}
    for agent in scn.agents:
        msg = transcript[agent]
        right = scn.right_neighbor(agent)
        left = scn.left_neighbor(agent)
        items = dict.fromkeys(TRANSFER_KEYS, Fraction(0))

        own_refutes_consensus = consensus is not None and refutes(scn, msg.evidence, consensus, agent)
        others_bet = any(bet_state[a][0] for a in scn.agents if a != agent)
        if consensus is None or others_bet or own_refutes_consensus:
            items["evidence_incentive"] = scaling.eps * len(msg.evidence)

        neighbor_evidence = transcript[right].evidence
        items["scoring"] = scaling.tau_low * (
            _quadratic_score(msg.p_right, neighbor_evidence)
            - _quadratic_score(transcript[right].p_own, neighbor_evidence)
        )

        if msg.p_own != transcript[left].p_right:
            items["crosscheck"] = -scaling.tau_low

        if rc_state is not None and any(r != agent for r in refuters):
            items["refutation_fine"] = -scaling.tau_high

        active, payment = bet_state[agent]
        if active:
            items["bet"] = payment

        items["total"] = sum((items[k] for k in TRANSFER_KEYS), Fraction(0))
        result[agent] = items
    return result


# -- scaling ------------------------------------------------------------------


def compute_scaling(scenario: Scenario, bet_values) -> ScalingParams:
    """Canonical parameters satisfying the score-gap and refutation inequalities.

    bet_values: iterable of absolute bet entries that the whistle slot can pay.
    """
    sm = check_stochastic_measurability(scenario)
    if not sm.passed:
        raise DegenerateGap("identical distribution profiles with distinct outcomes")

    gap_min = None
    for agent in scenario.agents:
        alphabet = scenario.alphabet(agent)
        if len(alphabet) < 2:
            continue
        for state in scenario.states:
            here = scenario.dist(agent, state)
            for other in alphabet:
                if other == here:
                    continue
                gap = here.squared_distance(other)
                if gap_min is None or gap < gap_min:
                    gap_min = gap

    collection_max = scenario.max_collection_size()
    bet_max = Fraction(0)
    for value in bet_values:
        bet_max = max(bet_max, abs(Fraction(value)))
    span = scenario.utility_span()

    if gap_min is None:
        return ScalingParams(
            eps=Fraction(1, 100),
            tau_low=Fraction(2),
            tau_high=Fraction(1),
            tau2_max=Fraction(0),
            gap_min=None,
            rho_min=None,
            collection_max=collection_max,
            bet_max=bet_max,
            span=span,
        )

    tau_low = Fraction(max(2, math.floor(1 / gap_min) + 1))

    tau2_max = Fraction(0)
    for agent in scenario.agents:
        right = scenario.right_neighbor(agent)
        alphabet = scenario.alphabet(right)
        for evidence in scenario.presentable(right):
            for p in alphabet:
                for q in alphabet:
                    swing = tau_low * (
                        _quadratic_score(p, evidence) - _quadratic_score(q, evidence)
                    )
                    tau2_max = max(tau2_max, swing)

    rho_min = None
    for agent in scenario.agents:
        for state in scenario.states:
            for target in scenario.states:
                if target == state:
                    continue
                for coll, prob in scenario.dist(agent, state).items():
                    if refutes(scenario, coll, target, agent):
                        if rho_min is None or prob < rho_min:
                            rho_min = prob

    tau_high = Fraction(1) if rho_min is None else Fraction(math.ceil((1 + tau2_max) / rho_min))

    denom = collection_max + bet_max
    candidates = []
    if denom > 0:
        candidates.append((tau_low - 1) / (2 * denom))
    if span < 1 and collection_max + 2 * bet_max > 0:
        candidates.append((1 - span) / (2 * (collection_max + 2 * bet_max)))
    eps = min(candidates) if candidates else Fraction(1, 100)

    return ScalingParams(
        eps=eps,
        tau_low=tau_low,
        tau_high=tau_high,
        tau2_max=tau2_max,
        gap_min=gap_min,
        rho_min=rho_min,
        collection_max=collection_max,
        bet_max=bet_max,
        span=span,
    )


# -- builders -----------------------------------------------------------------


def _synthesize_bet_table(scenario: Scenario):
    bets = {}
    agents_for = {}
    for truth in scenario.states:
        for lie in scenario.states:
            if truth == lie:
                continue
            chosen = None
            for agent in scenario.agents:
                if find_perfect_deception(scenario, agent, truth, lie) is None:
                    chosen = agent
                    break
            if chosen is None:
                continue
            bets[(truth, lie)] = synthesize_bet(scenario, chosen, truth, lie)
            agents_for[(truth, lie)] = chosen
    return bets, agents_for


def build_bne_mechanism(scenario: Scenario) -> Mechanism:
    verdict = check_npd(scenario)
    if not verdict.passed:
        raise NpdViolation(verdict)
    return assemble_bne_mechanism(scenario)


def assemble_bne_mechanism(scenario: Scenario) -> Mechanism:
    """Mechanism assembly without the NPD gate (negative controls, audits)."""
    bets, agents_for = _synthesize_bet_table(scenario)
    values = [w for bet in bets.values() for _, w in bet.weights]
    scaling = compute_scaling(scenario, values)
    return Mechanism(
        variant="bne",
        scenario=scenario,
        scaling=scaling,
        bets=bets,
        bet_agents=agents_for,
        challenges={},
        challenge_agents={},
        z_count=0,
        arbitrary_outcome=scenario.outcomes[0],
    )


def _assignments_for(scenario: Scenario, agent, state):
    """All pure single-state assignments: support collection -> a subset."""
    sources = scenario.support(agent, state)
    per_source = []
    for src in sources:
        per_source.append(
            [
                (src, frozenset(sub))
                for r in range(len(src) + 1)
                for sub in itertools.combinations(sorted(src), r)
            ]
        )
    return [tuple(choice) for choice in itertools.product(*per_source)]


def pure_profile_count(scenario: Scenario) -> int:
    """Number of pure deception profiles over positive-probability types."""
    count = 1
    for agent in scenario.agents:
        for state in scenario.states:
            for src in scenario.support(agent, state):
                count *= len(scenario.states) * (2 ** len(src))
    return count


def enumerate_challenges(scenario: Scenario):
    """Canonical valid challenges with their two-point bets and target agents."""
    challenges = {}
    agents_for = {}
    for source_state in scenario.states:
        profiles = [
            _assignments_for(scenario, agent, source_state) for agent in scenario.agents
        ]
        for combo in itertools.product(*profiles):
            for target_state in scenario.states:
                if target_state == source_state:
                    continue
                chosen = None
                for agent, rows in zip(scenario.agents, combo):
                    plan = PurePlan(agent, source_state, target_state, rows)
                    induced = induced_distribution(plan.as_transport(scenario))
                    if induced != scenario.dist(agent, target_state):
                        chosen = (agent, plan)
                        break
                if chosen is None:
                    continue
                challenge = Challenge(
                    target_state=target_state,
                    source_state=source_state,
                    assignments=tuple(zip(scenario.agents, combo)),
                )
                challenges[challenge] = synthesize_gamma_delta(scenario, chosen[1])
                agents_for[challenge] = chosen[0]
    return challenges, agents_for


def build_pure_mechanism(scenario: Scenario, z_cap: int = 10**6) -> Mechanism:
    verdict = check_nppd(scenario)
    if not verdict.passed:
        raise NppdViolation(verdict)
    return assemble_pure_mechanism(scenario, z_cap=z_cap)


def assemble_pure_mechanism(scenario: Scenario, z_cap: int = 10**6) -> Mechanism:
    z = pure_profile_count(scenario)
    if z > z_cap:
        raise ZOverflow(f"{z} pure deception profiles exceed cap {z_cap}")
    challenges, agents_for = enumerate_challenges(scenario)
    values = []
    for bet in challenges.values():
        values.extend((bet.gamma, bet.delta))
    scaling = compute_scaling(scenario, values)
    return Mechanism(
        variant="pure",
        scenario=scenario,
        scaling=scaling,
        bets={},
        bet_agents={},
        challenges=challenges,
        challenge_agents=agents_for,
        z_count=z,
        arbitrary_outcome=scenario.outcomes[0],
    )


# -- reporting ----------------------------------------------------------------


def mechanism_report(mech: Mechanism) -> dict:
    from .rationals import format_rational
    from .scenario import format_collection

    scn = mech.scenario
    sizes = {}
    for agent in scn.agents:
        right = scn.right_neighbor(agent)
        claims = len(scn.states) if mech.variant == "bne" else mech.z_count + 1
        sizes[agent] = {
            "own_alphabet": len(scn.alphabet(agent)),
            "right_alphabet": len(scn.alphabet(right)),
            "evidence_universe": len(scn.presentable(agent)),
            "claim_slot": claims,
        }
    scaling = {
        "eps": format_rational(mech.scaling.eps),
        "tau_low": format_rational(mech.scaling.tau_low),
        "tau_high": format_rational(mech.scaling.tau_high),
        "tau2_max": format_rational(mech.scaling.tau2_max),
        "slack": {k: format_rational(v) for k, v in mech.scaling.slacks().items()},
    }
    bets = []
    for (truth, lie), bet in sorted(mech.bets.items()):
        bets.append(
            {
                "truth_state": truth,
                "lie_state": lie,
                "agent": mech.bet_agents[(truth, lie)],
                "margin": format_rational(bet.margin),
                "weights": {
                    format_collection(coll): format_rational(w) for coll, w in bet.weights
                },
            }
        )
    report = {
        "variant": mech.variant,
        "message_space": sizes,
        "scaling": scaling,
        "arbitrary_outcome": mech.arbitrary_outcome,
    }
    if mech.variant == "bne":
        report["bets"] = bets
        report["challenger_table"] = {
            f"{truth}->{lie}": agent for (truth, lie), agent in sorted(mech.bet_agents.items())
        }
    else:
        report["identifier_count"] = mech.z_count
        report["valid_challenges"] = len(mech.challenges)
    return report
