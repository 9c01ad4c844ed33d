"""Deceptions as mass transports, separating bets, and their certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import simplex
from .scenario import Distribution, Scenario, collection_key, format_collection
from .transport import HallWitness, solve_transport


class InfeasibleSeparation(ValueError):
    """Bet synthesis was asked for a pair that admits a perfect deception."""


class CombinatorialBlowup(RuntimeError):
    pass


class NoImbalance(ValueError):
    """Two-point bet construction needs an imperfect pure plan."""


@dataclass(frozen=True)
class TransportPlan:
    """Mass routing from source collections at `source_state` onto claimed
    (target_state, sub-collection) types; flows positive, each target within
    its source."""

    agent: str
    source_state: str
    target_state: str
    flows: tuple  # ((source, target, Fraction), ...) canonical order

    def flow_map(self):
        return {(src, dst): f for src, dst, f in self.flows}

    def check(self, scenario: Scenario) -> list:
        problems = []
        dist = scenario.dist(self.agent, self.source_state)
        out_mass = {}
        for src, dst, f in self.flows:
            if f < 0:
                problems.append(f"negative flow on {format_collection(src)}->{format_collection(dst)}")
            if f > 0 and not dst <= src:
                problems.append(f"target {format_collection(dst)} not within source {format_collection(src)}")
            out_mass[src] = out_mass.get(src, Fraction(0)) + f
        for src in dist.support():
            if out_mass.get(src, Fraction(0)) != dist.prob(src):
                problems.append(f"out-mass of {format_collection(src)} differs from its probability")
        for src in out_mass:
            if dist.prob(src) == 0:
                problems.append(f"flow out of zero-probability source {format_collection(src)}")
        return problems


@dataclass(frozen=True)
class PurePlan:
    agent: str
    source_state: str
    target_state: str
    assignment: tuple  # ((source, target), ...) canonical order

    def assignment_map(self):
        return dict(self.assignment)

    def as_transport(self, scenario: Scenario) -> TransportPlan:
        dist = scenario.dist(self.agent, self.source_state)
        flows = tuple(
            (src, dst, dist.prob(src)) for src, dst in self.assignment
        )
        return TransportPlan(self.agent, self.source_state, self.target_state, flows)


def identity_plan(scenario: Scenario, agent, state) -> TransportPlan:
    flows = tuple((c, c, p) for c, p in scenario.dist(agent, state).items())
    return TransportPlan(agent, state, state, flows)


def induced_distribution(plan: TransportPlan) -> Distribution:
    masses = {}
    for _, dst, f in plan.flows:
        masses[dst] = masses.get(dst, Fraction(0)) + f
    return Distribution(masses)


@dataclass
class PerfectDeceptionResult:
    plan: TransportPlan | None
    flow_value: Fraction
    witness: HallWitness | None

    @property
    def exists(self) -> bool:
        return self.plan is not None


def perfect_deception(scenario: Scenario, agent, source_state, target_state) -> PerfectDeceptionResult:
    """Decide whether the agent can exactly mimic her `target_state` distribution
    while truly at `source_state` (rational max-flow on the subset network)."""
    if source_state == target_state:
        return PerfectDeceptionResult(identity_plan(scenario, agent, source_state), Fraction(1), None)
    supplies = dict(scenario.dist(agent, source_state).items())
    demands = dict(scenario.dist(agent, target_state).items())
    result = solve_transport(supplies, demands)
    if not result.feasible:
        return PerfectDeceptionResult(None, result.flow_value, result.witness)
    flows = tuple(
        (src, dst, f)
        for (src, dst), f in sorted(result.arc_flows.items(), key=lambda kv: (collection_key(kv[0][0]), collection_key(kv[0][1])))
    )
    return PerfectDeceptionResult(
        TransportPlan(agent, source_state, target_state, flows), result.flow_value, None
    )


def find_perfect_deception(scenario: Scenario, agent, source_state, target_state) -> TransportPlan | None:
    return perfect_deception(scenario, agent, source_state, target_state).plan


def find_pure_perfect_deception(scenario: Scenario, agent, source_state, target_state) -> PurePlan | None:
    """Degenerate perfect deception via backtracking with exact residual demands."""
    if source_state == target_state:
        assignment = tuple((c, c) for c in scenario.support(agent, source_state))
        return PurePlan(agent, source_state, target_state, assignment)
    source_dist = scenario.dist(agent, source_state)
    target_dist = scenario.dist(agent, target_state)
    # Heaviest sources first; deterministic tie-break by canonical collection order.
    sources = sorted(source_dist.support(), key=lambda c: (-source_dist.prob(c), collection_key(c)))
    residual = {c: target_dist.prob(c) for c in target_dist.support()}

    assignment = {}

    def targets_for(src):
        mass = source_dist.prob(src)
        options = [t for t in residual if t <= src and residual[t] >= mass]
        options.sort(key=lambda t: (-residual[t], collection_key(t)))
        return options

    def backtrack(idx):
        if idx == len(sources):
            return all(r == 0 for r in residual.values())
        src = sources[idx]
        mass = source_dist.prob(src)
        for tgt in targets_for(src):
            residual[tgt] -= mass
            assignment[src] = tgt
            if backtrack(idx + 1):
                return True
            residual[tgt] += mass
            del assignment[src]
        return False

    if not backtrack(0):
        return None
    pairs = tuple((src, assignment[src]) for src in sorted(assignment, key=collection_key))
    return PurePlan(agent, source_state, target_state, pairs)


# -- separating bets ---------------------------------------------------------


@dataclass(frozen=True)
class Bet:
    """Weights over one agent's collections, losing against truthful play at
    the lie and winning against every deception at the truth (margin > 0)."""

    agent: str
    truth_state: str
    lie_state: str
    weights: tuple  # ((collection, Fraction), ...) nonzero entries
    margin: Fraction

    def weight_map(self):
        return dict(self.weights)

    def value(self, collection) -> Fraction:
        return self.weight_map().get(frozenset(collection), Fraction(0))

    def scaled(self, factor: Fraction) -> "Bet":
        factor = Fraction(factor)
        return Bet(
            self.agent,
            self.truth_state,
            self.lie_state,
            tuple((c, w * factor) for c, w in self.weights),
            self.margin * factor,
        )


def _bet_domain(scenario: Scenario, agent, truth_state, lie_state):
    domain = set()
    for coll in scenario.support(agent, truth_state):
        for r in range(len(coll) + 1):
            for sub in itertools.combinations(sorted(coll), r):
                domain.add(frozenset(sub))
    domain.update(scenario.support(agent, lie_state))
    return sorted(domain, key=collection_key)


def synthesize_bet(scenario: Scenario, agent, truth_state, lie_state) -> Bet:
    """Largest-margin separating bet with sup-norm at most 1, solved as one LP.

    Sourcewise minima encode the deception polytope exactly: a deceiving agent
    best-responds source by source, each picking its cheapest legal target.
    Weights off the lie state's support carry no mass in the lie-value and only
    cap the sourcewise minima, so they are pinned to +1 without loss; the LP
    ranges over the lie-support weights alone.
    """
    domain = _bet_domain(scenario, agent, truth_state, lie_state)
    sources = scenario.support(agent, truth_state)
    truth_dist = scenario.dist(agent, truth_state)
    lie_dist = scenario.dist(agent, lie_state)
    lie_support = lie_dist.support()
    col_index = {c: i for i, c in enumerate(lie_support)}
    n_w = len(lie_support)
    n_z = len(sources)
    n = n_w + n_z + 1  # lie-support weights, per-source minima, margin
    margin_col = n - 1

    constraints = []
    # Value under truthful play at the lie state stays below -margin.
    row = [Fraction(0)] * n
    for coll, prob in lie_dist.items():
        row[col_index[coll]] += prob
    row[margin_col] = Fraction(1)
    constraints.append((row, simplex.LE, Fraction(0)))
    # z_K lower-bounds every weight the source K could present; off-support
    # presentations are worth the pinned +1.
    for k_idx, src in enumerate(sources):
        row = [Fraction(0)] * n
        row[n_w + k_idx] = Fraction(1)
        constraints.append((row, simplex.LE, Fraction(1)))
        for coll in lie_support:
            if coll <= src:
                row = [Fraction(0)] * n
                row[n_w + k_idx] = Fraction(1)
                row[col_index[coll]] -= Fraction(1)
                constraints.append((row, simplex.LE, Fraction(0)))
    # Worst-case value at the truth state stays above +margin.
    row = [Fraction(0)] * n
    for k_idx, src in enumerate(sources):
        row[n_w + k_idx] = truth_dist.prob(src)
    row[margin_col] = Fraction(-1)
    constraints.append((row, simplex.GE, Fraction(0)))

    objective = [Fraction(0)] * n
    objective[margin_col] = Fraction(1)
    bounds = [(Fraction(-1), Fraction(1))] * n_w + [(None, None)] * n_z + [(None, None)]

    result = simplex.maximize(objective, constraints, bounds)
    if result.status != "optimal":
        raise InfeasibleSeparation(f"bet LP ended {result.status}")
    margin = result.values[margin_col]
    if margin <= 0:
        raise InfeasibleSeparation(
            f"no separating bet for {agent}: perfect deception {truth_state}->{lie_state} exists"
        )
    weight_map = {coll: result.values[col_index[coll]] for coll in lie_support}
    for coll in domain:
        if coll not in weight_map:
            weight_map[coll] = Fraction(1)
    weights = tuple(
        (coll, weight_map[coll]) for coll in domain if weight_map[coll] != 0
    )
    return Bet(agent, truth_state, lie_state, weights, margin)


@dataclass
class CertReport:
    value_at_lie: Fraction
    worst_case_at_truth: Fraction
    passed: bool
    plan_count: int
    robust_worst_case: Fraction


def certify_bet(scenario: Scenario, bet: Bet, plan_cap: int = 10**6) -> CertReport:
    """Independent oracle for a bet.

    `value_at_lie` is the exact expectation against truthful play at the lie
    state. `worst_case_at_truth` enumerates pure mimicry plans at the truth
    state: each source presents a maximal sub-collection that occurs at the
    lie state (withholding below that is dominated by the evidence incentive;
    a source with no such sub-collection presents itself). `robust_worst_case`
    is the min over the full withholding polytope (every subset); synthesized
    bets clear that stronger bar by construction.
    """
    weights = bet.weight_map()
    value_at_lie = scenario.dist(bet.agent, bet.lie_state).dot(weights)

    sources = scenario.support(bet.agent, bet.truth_state)
    truth_dist = scenario.dist(bet.agent, bet.truth_state)
    lie_support = scenario.support(bet.agent, bet.lie_state)
    option_lists = []
    count = 1
    for src in sources:
        fitting = [c for c in lie_support if c <= src]
        options = [c for c in fitting if not any(c < other for other in fitting)]
        if not options:
            options = [src]
        option_lists.append(options)
        count *= len(options)
        if count > plan_cap:
            raise CombinatorialBlowup(f"{count} pure plans exceed cap {plan_cap}")
    worst = None
    for choice in itertools.product(*option_lists):
        value = sum(
            (truth_dist.prob(src) * weights.get(dst, Fraction(0)) for src, dst in zip(sources, choice)),
            Fraction(0),
        )
        if worst is None or value < worst:
            worst = value
    robust = sourcewise_worst_case(scenario, bet)
    passed = value_at_lie < 0 and worst is not None and worst > 0
    return CertReport(value_at_lie, worst, passed, count, robust)


def sourcewise_worst_case(scenario: Scenario, bet: Bet) -> Fraction:
    """Fallback for certify_bet's enumeration: per-source cheapest targets."""
    weights = bet.weight_map()
    total = Fraction(0)
    dist = scenario.dist(bet.agent, bet.truth_state)
    for src, prob in dist.items():
        best = min(
            weights.get(frozenset(sub), Fraction(0))
            for r in range(len(src) + 1)
            for sub in itertools.combinations(sorted(src), r)
        )
        total += prob * best
    return total


@dataclass(frozen=True)
class TwoPointBet:
    agent: str
    short_collection: frozenset  # induced mass below target; carries gamma < 0
    long_collection: frozenset  # induced mass above target; carries delta > 0
    gamma: Fraction
    delta: Fraction

    def value(self, presented) -> Fraction:
        presented = frozenset(presented)
        if presented == self.short_collection:
            return self.gamma
        if presented == self.long_collection:
            return self.delta
        return Fraction(0)


def synthesize_gamma_delta(scenario: Scenario, pure_plan: PurePlan) -> TwoPointBet:
    """Two-point bet against an imperfect pure plan: wins under the plan,
    loses against truthful play at the claimed state."""
    induced = induced_distribution(pure_plan.as_transport(scenario))
    target = scenario.dist(pure_plan.agent, pure_plan.target_state)
    if induced == target:
        raise NoImbalance("pure plan exactly matches the target distribution")
    domain = sorted(set(induced.support()) | set(target.support()), key=collection_key)
    short = next(c for c in domain if induced.prob(c) < target.prob(c))
    long = next(c for c in domain if induced.prob(c) > target.prob(c))
    a, b = induced.prob(short), induced.prob(long)
    a_t, b_t = target.prob(short), target.prob(long)
    # gamma = -r, delta = 1 works for any ratio r in (b_t/a_t, b/a); a_t > 0 always.
    low = b_t / a_t
    high = b / a if a > 0 else low + 2
    ratio = (low + high) / 2
    gamma = -ratio
    delta = Fraction(1)
    scale = gamma.denominator
    gamma, delta = gamma * scale, delta * scale
    assert gamma * a + delta * b > 0
    assert gamma * a_t + delta * b_t < 0
    return TwoPointBet(pure_plan.agent, short, long, gamma, delta)
