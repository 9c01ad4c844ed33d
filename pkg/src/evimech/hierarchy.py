"""General type spaces: belief hierarchies, higher-order measurability,
evidence incentive compatibility, and the independent embedding of flat scenarios."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .rationals import format_rational, parse_rational
from .scenario import Scenario, collection_key


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TypeSpaceModel:
    agents: tuple
    types: dict  # agent -> tuple of type ids
    evidence: dict  # (agent, type) -> frozenset of article ids
    beliefs: dict  # (agent, type) -> {opponent profile tuple: Fraction}
    outcomes: tuple
    scf: dict  # full type profile tuple -> outcome
    utility_profiles: tuple  # each: agent -> {(outcome, full profile): Fraction}
    articles: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def opponents(self, agent):
        return tuple(a for a in self.agents if a != agent)

    def profiles(self):
        """All full type profiles, agent order."""
        key = "profiles"
        if key not in self._cache:
            self._cache[key] = [
                tuple(combo) for combo in itertools.product(*(self.types[a] for a in self.agents))
            ]
        return self._cache[key]

    def belief(self, agent, type_id):
        return self.beliefs[(agent, type_id)]

    def utility(self, profile_idx, agent, outcome, full_profile) -> Fraction:
        return self.utility_profiles[profile_idx][agent][(outcome, full_profile)]

    def utility_span(self, profile_idx, agent) -> Fraction:
        profile = self.utility_profiles[profile_idx]
        values = [profile[agent][(o, t)] for o in self.outcomes for t in self.profiles()]
        return max(values) - min(values)

    def feasible_reports(self, agent, type_id):
        """Evidence-feasible type claims: reported endowment within the true one."""
        own = self.evidence[(agent, type_id)]
        return [t for t in self.types[agent] if self.evidence[(agent, t)] <= own]

    def max_evidence_size(self) -> int:
        return max((len(e) for e in self.evidence.values()), default=0)


def validate_model(model: TypeSpaceModel) -> list:
    problems = []
    for agent in model.agents:
        for type_id in model.types[agent]:
            belief = model.belief(agent, type_id)
            total = sum(belief.values(), Fraction(0))
            if total != 1:
                problems.append(f"beliefs.{agent}.{type_id}: sum {format_rational(total)} != 1")
            for prob in belief.values():
                if prob <= 0:
                    problems.append(f"beliefs.{agent}.{type_id}: non-positive entry")
    for profile in model.profiles():
        if profile not in model.scf:
            problems.append(f"scf: missing outcome for {profile}")
    for idx, prof in enumerate(model.utility_profiles):
        for agent in model.agents:
            for outcome in model.outcomes:
                for t in model.profiles():
                    value = prof[agent].get((outcome, t))
                    if value is None:
                        problems.append(f"utility_profiles[{idx}].{agent}: missing ({outcome},{t})")
                    elif not (-1 < value < 1):
                        problems.append(f"utility_profiles[{idx}].{agent}: value outside (-1,1)")
    return problems


# -- embedding ----------------------------------------------------------------


def consensus_state(scenario: Scenario, full_profile) -> str:
    states = [t[0] for t in full_profile]
    first = states[0]
    if all(s == first for s in states):
        return first
    return states[0]


def embed_flat_scenario(scenario: Scenario) -> TypeSpaceModel:
    """Independent embedding: types are (state, support collection) pairs,
    beliefs concentrate on the own state with product evidence probabilities,
    and the choice function extends by consensus-else-first-report."""
    agents = scenario.agents
    types = {}
    evidence = {}
    for agent in agents:
        rows = []
        for state in scenario.states:
            for coll in scenario.support(agent, state):
                rows.append((state, coll))
                evidence[(agent, (state, coll))] = coll
        types[agent] = tuple(rows)

    beliefs = {}
    for agent in agents:
        others = tuple(a for a in agents if a != agent)
        for state, coll in types[agent]:
            entries = {}
            option_lists = [
                [((state, c), scenario.dist(other, state).prob(c)) for c in scenario.support(other, state)]
                for other in others
            ]
            for combo in itertools.product(*option_lists):
                prob = Fraction(1)
                profile = []
                for (type_id, p) in combo:
                    prob *= p
                    profile.append(type_id)
                if prob > 0:
                    entries[tuple(profile)] = prob
            beliefs[(agent, (state, coll))] = entries

    model_profiles = [
        tuple(combo) for combo in itertools.product(*(types[a] for a in agents))
    ]
    scf = {t: scenario.scf[consensus_state(scenario, t)] for t in model_profiles}
    utility_profiles = []
    for idx in range(len(scenario.utility_profiles)):
        per_agent = {}
        for agent in agents:
            per_agent[agent] = {
                (outcome, t): scenario.utility(idx, agent, outcome, consensus_state(scenario, t))
                for outcome in scenario.outcomes
                for t in model_profiles
            }
        utility_profiles.append(per_agent)
    return TypeSpaceModel(
        agents=agents,
        types=types,
        evidence=evidence,
        beliefs=beliefs,
        outcomes=scenario.outcomes,
        scf=scf,
        utility_profiles=tuple(utility_profiles),
        articles=scenario.articles,
    )


# -- belief hierarchies --------------------------------------------------------


@dataclass
class HierarchyTable:
    """Per-type signatures: level 0 is the endowment, level k >= 1 an interned
    push-forward over opponents' lower-level signature tuples."""

    model: TypeSpaceModel
    depth: int
    signatures: dict  # (agent, type) -> tuple of per-level keys

    def level(self, agent, type_id, k):
        return self.signatures[(agent, type_id)][k]

    def belief_prefix(self, agent, type_id, k):
        """Signature tuple at belief levels 1..k (endowment excluded)."""
        return self.signatures[(agent, type_id)][1 : k + 1]

    def level_distribution(self, agent, type_id, k) -> dict:
        """The level-k push-forward as an explicit point distribution."""
        model = self.model
        dist = {}
        for t_other, prob in model.belief(agent, type_id).items():
            point = self._point(agent, t_other, k - 1)
            dist[point] = dist.get(point, Fraction(0)) + prob
        return dist

    def _point(self, agent, opponent_profile, upto) -> tuple:
        others = self.model.opponents(agent)
        return tuple(
            self.signatures[(other, t)][: upto + 1]
            for other, t in zip(others, opponent_profile)
        )


def _level_zero_table(model: TypeSpaceModel) -> HierarchyTable:
    signatures = {}
    for agent in model.agents:
        for type_id in model.types[agent]:
            endowment = model.evidence[(agent, type_id)]
            signatures[(agent, type_id)] = (("ev", collection_key(endowment)),)
    return HierarchyTable(model, 0, signatures)


def extend_hierarchy(table: HierarchyTable, intern: dict) -> HierarchyTable:
    model = table.model
    k = table.depth + 1
    new = {}
    for agent in model.agents:
        for type_id in model.types[agent]:
            dist = table.level_distribution(agent, type_id, k)
            key = tuple(sorted(dist.items()))
            token = intern.setdefault((k, key), ("lvl", k, len(intern)))
            new[(agent, type_id)] = table.signatures[(agent, type_id)] + (token,)
    return HierarchyTable(model, k, new)


def build_hierarchy(model: TypeSpaceModel, depth: int) -> HierarchyTable:
    """Exact hierarchies up to `depth`, canonically interned level by level."""
    table = _level_zero_table(model)
    intern = {}
    for _ in range(depth):
        table = extend_hierarchy(table, intern)
    return table


def _partitions(model, table, k):
    out = {}
    for agent in model.agents:
        cells = {}
        for type_id in model.types[agent]:
            cells.setdefault(table.signatures[(agent, type_id)][: k + 1], []).append(type_id)
        out[agent] = sorted(tuple(sorted(map(str, cell))) for cell in cells.values())
    return out


def build_to_stabilization(model: TypeSpaceModel):
    """(table, k_stable): grown one level at a time until partitions stop refining."""
    bound = sum(len(model.types[a]) for a in model.agents) + 1
    table = _level_zero_table(model)
    intern = {}
    previous = _partitions(model, table, 0)
    for k in range(1, bound + 1):
        table = extend_hierarchy(table, intern)
        current = _partitions(model, table, k)
        if current == previous:
            # one more level: endowment-only splits surface in beliefs one step late
            table = extend_hierarchy(table, intern)
            return table, k - 1
        previous = current
    return table, bound


def stabilization_depth(model: TypeSpaceModel) -> int:
    """First level after which no agent's signature partition refines further."""
    return build_to_stabilization(model)[1]


# -- conditions ----------------------------------------------------------------


@dataclass
class HomVerdict:
    passed: bool
    stabilization: int
    k_bar: int | None  # max over f-distinct pairs of the minimal separating level
    failures: list  # inseparable f-distinct profile pairs
    table: HierarchyTable


def separating_level(verdict: HomVerdict, model: TypeSpaceModel, t, t_prime):
    """(agent, level) first separating a given profile pair, None if inseparable."""
    table = verdict.table
    for k in range(1, table.depth + 1):
        for agent, own, other in zip(model.agents, t, t_prime):
            if table.level(agent, own, k) != table.level(agent, other, k):
                return (agent, k)
    return None


def check_higher_order_measurability(model: TypeSpaceModel) -> HomVerdict:
    """Every f-distinct profile pair must be separated by some agent's belief
    hierarchy at a finite level (level 0, the endowment itself, does not count:
    separation must show up in beliefs for the scoring rules to elicit it).

    Endowment-only distinctions at the stabilized cumulative partition can
    surface in pure belief levels one step later, so the scan runs one level
    past stabilization; beyond that, push-forwards factor through the stable
    partition and nothing new appears. Profiles are grouped by their
    belief-signature vectors, so the check is linear in the profile count.
    """
    table, depth = build_to_stabilization(model)
    profiles = model.profiles()

    def classes_at(k):
        groups = {}
        for t in profiles:
            key = tuple(table.belief_prefix(agent, own, k) for agent, own in zip(model.agents, t))
            groups.setdefault(key, []).append(t)
        return groups

    top = classes_at(table.depth)
    failures = []
    for members in top.values():
        outcomes = {model.scf[t] for t in members}
        if len(outcomes) > 1:
            first = members[0]
            witness = next(t for t in members if model.scf[t] != model.scf[first])
            failures.append((first, witness))
    if failures:
        return HomVerdict(False, depth, None, failures, table)

    k_bar = table.depth
    for k in range(1, table.depth + 1):
        if all(len({model.scf[t] for t in members}) == 1 for members in classes_at(k).values()):
            k_bar = k
            break
    return HomVerdict(True, depth, k_bar, [], table)


@dataclass
class EicVerdict:
    passed: bool
    failures: list  # (profile_idx, agent, type, better report, gain)


def check_evidence_ic(model: TypeSpaceModel, profile_indices=None) -> EicVerdict:
    """Truth must be optimal among evidence-feasible reports in the direct game."""
    if profile_indices is None:
        profile_indices = range(len(model.utility_profiles))
    failures = []
    for idx in profile_indices:
        for agent in model.agents:
            others = model.opponents(agent)
            for type_id in model.types[agent]:
                belief = model.belief(agent, type_id)

                def value(report):
                    total = Fraction(0)
                    for t_other, prob in belief.items():
                        full = _full_profile(model, agent, report, others, t_other)
                        true_full = _full_profile(model, agent, type_id, others, t_other)
                        total += prob * model.utility(idx, agent, model.scf[full], true_full)
                    return total

                truth = value(type_id)
                for report in model.feasible_reports(agent, type_id):
                    gain = value(report) - truth
                    if gain > 0:
                        failures.append((idx, agent, type_id, report, gain))
    return EicVerdict(not failures, failures)


def _full_profile(model, agent, own_type, others, opponent_profile):
    by_agent = dict(zip(others, opponent_profile))
    by_agent[agent] = own_type
    return tuple(by_agent[a] for a in model.agents)


# -- JSON wire format -----------------------------------------------------------


def _type_to_str(type_id):
    if isinstance(type_id, tuple):
        state, coll = type_id
        return f"{state}|{{{','.join(sorted(coll))}}}"
    return str(type_id)


def parse_model(data) -> TypeSpaceModel:
    if not isinstance(data, dict):
        raise ModelFormatError("model document must be an object")
    try:
        agents = tuple(str(a) for a in data["agents"])
        types = {a: tuple(str(t) for t in data["types"][a]) for a in agents}
        articles = tuple(str(a) for a in data.get("articles", []))
        evidence = {}
        for agent in agents:
            for type_id in types[agent]:
                evidence[(agent, type_id)] = frozenset(
                    str(x) for x in data["evidence_map"][agent][type_id]
                )
        beliefs = {}
        for agent in agents:
            others = tuple(a for a in agents if a != agent)
            for type_id in types[agent]:
                rows = data["beliefs"][agent][type_id]
                entries = {}
                for row in rows:
                    profile = tuple(str(row["profile"][o]) for o in others)
                    entries[profile] = entries.get(profile, Fraction(0)) + parse_rational(row["prob"])
                beliefs[(agent, type_id)] = entries
        outcomes = tuple(str(o) for o in data["outcomes"])
        scf = {}
        for row in data["scf"]:
            profile = tuple(str(row["profile"][a]) for a in agents)
            scf[profile] = str(row["outcome"])
        utility_profiles = []
        for prof in data["utility_profiles"]:
            per_agent = {}
            for agent in agents:
                entries = {}
                for outcome, rows in prof[agent].items():
                    for row in rows:
                        profile = tuple(str(row["profile"][a]) for a in agents)
                        entries[(str(outcome), profile)] = parse_rational(row["value"])
                per_agent[agent] = entries
            utility_profiles.append(per_agent)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from exc
    return TypeSpaceModel(
        agents=agents,
        types=types,
        evidence=evidence,
        beliefs=beliefs,
        outcomes=outcomes,
        scf=scf,
        utility_profiles=tuple(utility_profiles),
        articles=articles,
    )


def model_to_json(model: TypeSpaceModel) -> dict:
    agents = list(model.agents)
    type_names = {
        (agent, t): _type_to_str(t) for agent in model.agents for t in model.types[agent]
    }
    doc = {
        "agents": agents,
        "types": {a: [type_names[(a, t)] for t in model.types[a]] for a in agents},
        "articles": list(model.articles),
        "evidence_map": {
            a: {type_names[(a, t)]: sorted(model.evidence[(a, t)]) for t in model.types[a]}
            for a in agents
        },
        "beliefs": {},
        "outcomes": list(model.outcomes),
        "scf": [],
        "utility_profiles": [],
    }
    for agent in agents:
        others = model.opponents(agent)
        doc["beliefs"][agent] = {}
        for type_id in model.types[agent]:
            rows = []
            for t_other, prob in sorted(
                model.belief(agent, type_id).items(), key=lambda kv: str(kv[0])
            ):
                rows.append(
                    {
                        "profile": {o: type_names[(o, t)] for o, t in zip(others, t_other)},
                        "prob": format_rational(prob),
                    }
                )
            doc["beliefs"][agent][type_names[(agent, type_id)]] = rows
    for profile in model.profiles():
        doc["scf"].append(
            {
                "profile": {a: type_names[(a, t)] for a, t in zip(agents, profile)},
                "outcome": model.scf[profile],
            }
        )
    for prof in model.utility_profiles:
        entry = {}
        for agent in agents:
            entry[agent] = {}
            for outcome in model.outcomes:
                rows = []
                for profile in model.profiles():
                    rows.append(
                        {
                            "profile": {a: type_names[(a, t)] for a, t in zip(agents, profile)},
                            "value": format_rational(prof[agent][(outcome, profile)]),
                        }
                    )
                entry[agent][outcome] = rows
        doc["utility_profiles"].append(entry)
    return doc
