"""Evidence environments: agents, states, stochastic evidence endowments, refutation.

A scenario holds per-agent, per-state distributions over evidence collections
(sets of article ids), a social choice function, and bounded utility profiles.
All probabilities and utilities are exact rationals; refutation and lie
classification are exact set/zero tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .rationals import RationalFormatError, format_rational, parse_rational

Collection = frozenset


def collection_key(collection: Collection) -> tuple:
    """Canonical sort key: smaller collections first, then lexicographic."""
    return (len(collection), tuple(sorted(collection)))


def format_collection(collection: Collection) -> str:
    return "{" + ",".join(sorted(collection)) + "}"


class ScenarioFormatError(ValueError):
    """Structurally unreadable scenario input (CLI exit 1)."""


class ScenarioError(ValueError):
    """Semantically invalid request against a scenario (unknown ids etc.)."""


class Distribution:
    """Finite distribution over evidence collections, exact and hashable."""

    __slots__ = ("_probs", "_key")

    def __init__(self, probs):
        cleaned = {}
        for coll, prob in probs.items():
            prob = Fraction(prob)
            if prob != 0:
                cleaned[frozenset(coll)] = cleaned.get(frozenset(coll), Fraction(0)) + prob
        self._probs = cleaned
        self._key = tuple(sorted((collection_key(c), p) for c, p in cleaned.items()))

    def prob(self, collection) -> Fraction:
        return self._probs.get(frozenset(collection), Fraction(0))

    def support(self) -> list:
        return sorted(self._probs, key=collection_key)

    def items(self):
        return [(c, self._probs[c]) for c in self.support()]

    def total(self) -> Fraction:
        return sum(self._probs.values(), Fraction(0))

    def is_degenerate(self) -> bool:
        return len(self._probs) == 1

    def __eq__(self, other):
        return isinstance(other, Distribution) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        body = ", ".join(f"{format_collection(c)}: {p}" for c, p in self.items())
        return "Distribution({" + body + "})"

    def squared_distance(self, other: "Distribution") -> Fraction:
        """Exact squared euclidean distance over the union of supports."""
        domain = set(self._probs) | set(other._probs)
        return sum(((self.prob(c) - other.prob(c)) ** 2 for c in domain), Fraction(0))

    def dot(self, weights) -> Fraction:
        """Expectation of a collection-indexed weight map (0 off-support of weights)."""
        total = Fraction(0)
        for coll, prob in self._probs.items():
            total += prob * weights.get(coll, Fraction(0))
        return total


@dataclass(frozen=True)
class Scenario:
    agents: tuple
    states: tuple
    articles: tuple
    dists: dict  # (agent, state) -> Distribution
    scf: dict  # state -> outcome id
    outcomes: tuple
    utility_profiles: tuple  # each: agent -> {(outcome, state): Fraction}
    article_names: dict | None = None  # optional declared nomenclature
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    # -- basic accessors -------------------------------------------------

    def dist(self, agent, state) -> Distribution:
        try:
            return self.dists[(agent, state)]
        except KeyError:
            raise ScenarioError(f"no distribution for agent {agent!r} at state {state!r}")

    def support(self, agent, state) -> list:
        return self.dist(agent, state).support()

    def right_neighbor(self, agent) -> str:
        idx = self.agents.index(agent)
        return self.agents[(idx + 1) % len(self.agents)]

    def left_neighbor(self, agent) -> str:
        idx = self.agents.index(agent)
        return self.agents[(idx - 1) % len(self.agents)]

    def presentable(self, agent) -> list:
        """All collections the agent may ever present: subsets of support collections."""
        key = ("presentable", agent)
        if key not in self._cache:
            seen = set()
            for state in self.states:
                for coll in self.support(agent, state):
                    for r in range(len(coll) + 1):
                        for sub in itertools.combinations(sorted(coll), r):
                            seen.add(frozenset(sub))
            self._cache[key] = sorted(seen, key=collection_key)
        return self._cache[key]

    def alphabet(self, agent) -> tuple:
        """Distinct evidence distributions of the agent, in first-state order."""
        key = ("alphabet", agent)
        if key not in self._cache:
            out = []
            for state in self.states:
                d = self.dist(agent, state)
                if d not in out:
                    out.append(d)
            self._cache[key] = tuple(out)
        return self._cache[key]

    def utility(self, profile_idx, agent, outcome, state) -> Fraction:
        return self.utility_profiles[profile_idx][agent][(outcome, state)]

    def utility_span(self, profile_idx=None) -> Fraction:
        """Max over agents/states of the outcome-utility spread."""
        indices = range(len(self.utility_profiles)) if profile_idx is None else [profile_idx]
        span = Fraction(0)
        for idx in indices:
            profile = self.utility_profiles[idx]
            for agent in self.agents:
                for state in self.states:
                    values = [profile[agent][(outcome, state)] for outcome in self.outcomes]
                    span = max(span, max(values) - min(values))
        return span

    def max_collection_size(self) -> int:
        best = 0
        for agent in self.agents:
            for state in self.states:
                for coll in self.support(agent, state):
                    best = max(best, len(coll))
        return best

    def constant_profile_index(self) -> int | None:
        for idx, profile in enumerate(self.utility_profiles):
            values = {v for per_agent in profile.values() for v in per_agent.values()}
            if len(values) <= 1:
                return idx
        return None


# -- refutation and lie classification -----------------------------------


def refutes(scenario: Scenario, collection, state, agent) -> bool:
    """True iff no support collection of `agent` at `state` contains `collection`."""
    collection = frozenset(collection)
    unknown = collection - set(scenario.articles)
    if unknown:
        raise ScenarioError(f"unknown article ids {sorted(unknown)}")
    if state not in scenario.states:
        raise ScenarioError(f"unknown state {state!r}")
    if agent not in scenario.agents:
        raise ScenarioError(f"unknown agent {agent!r}")
    return not any(collection <= sup for sup in scenario.support(agent, state))


def refutes_by_names(names, collection, state) -> bool:
    """Nomenclature refutation: some held article is named without `state`."""
    return any(state not in names.get(article, frozenset()) for article in collection)


@dataclass(frozen=True)
class LieClass:
    true_state: str
    target_state: str
    verdict: str  # "self_identical" | "refutable" | "nonrefutable"
    refuters: tuple = ()
    witnesses: dict | None = None  # agent -> [(collection, prob)]

    def witness_mass(self, agent) -> Fraction:
        if not self.witnesses or agent not in self.witnesses:
            return Fraction(0)
        return sum((p for _, p in self.witnesses[agent]), Fraction(0))


def classify_lie(scenario: Scenario, true_state, target_state) -> LieClass:
    """Classify the lie `target_state` told at `true_state` by refutability."""
    for st in (true_state, target_state):
        if st not in scenario.states:
            raise ScenarioError(f"unknown state {st!r}")
    if true_state == target_state:
        return LieClass(true_state, target_state, "self_identical")
    witnesses = {}
    for agent in scenario.agents:
        found = [
            (coll, prob)
            for coll, prob in scenario.dist(agent, true_state).items()
            if refutes(scenario, coll, target_state, agent)
        ]
        if found:
            witnesses[agent] = found
    if witnesses:
        return LieClass(
            true_state,
            target_state,
            "refutable",
            refuters=tuple(a for a in scenario.agents if a in witnesses),
            witnesses=witnesses,
        )
    return LieClass(true_state, target_state, "nonrefutable")


def refutable_lies(scenario: Scenario, agent, state) -> list:
    """States the agent can refute with positive probability at `state`."""
    out = []
    for target in scenario.states:
        if target == state:
            continue
        cls = classify_lie(scenario, state, target)
        if cls.verdict == "refutable" and agent in cls.refuters:
            out.append(target)
    return out


def article_nomenclature(scenario: Scenario) -> dict:
    """Derived names: article -> set of states where any agent may hold it."""
    names = {article: set() for article in scenario.articles}
    for (agent, state), dist in scenario.dists.items():
        for coll in dist.support():
            for article in coll:
                names[article].add(state)
    return {article: frozenset(states) for article, states in names.items()}


def agent_nomenclature(scenario: Scenario, agent) -> dict:
    """Derived per-agent names: states where this agent may hold the article."""
    names = {article: set() for article in scenario.articles}
    for state in scenario.states:
        for coll in scenario.support(agent, state):
            for article in coll:
                names[article].add(state)
    return {article: frozenset(states) for article, states in names.items()}


# -- validation ------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Structural and evidential checks; empty violation list means valid."""
    violations = []

    def flag(path, message):
        violations.append({"path": path, "message": message})

    for name, seq in (
        ("agents", scenario.agents),
        ("states", scenario.states),
        ("articles", scenario.articles),
        ("outcomes", scenario.outcomes),
    ):
        if len(set(seq)) != len(seq):
            flag(name, "duplicate ids")
    if len(scenario.agents) < 2:
        flag("agents", "need at least two agents")
    if len(scenario.states) < 1:
        flag("states", "need at least one state")

    for agent in scenario.agents:
        for state in scenario.states:
            path = f"distributions.{agent}.{state}"
            if (agent, state) not in scenario.dists:
                flag(path, "missing distribution")
                continue
            dist = scenario.dists[(agent, state)]
            if dist.total() != 1:
                flag(path, f"probabilities sum to {format_rational(dist.total())}, not 1")
            for coll, prob in dist.items():
                if prob <= 0:
                    flag(path, f"non-positive probability on {format_collection(coll)}")
                extra = coll - set(scenario.articles)
                if extra:
                    flag(path, f"unknown article ids {sorted(extra)}")

    for state in scenario.states:
        if state not in scenario.scf:
            flag(f"scf.{state}", "missing outcome assignment")
        elif scenario.scf[state] not in scenario.outcomes:
            flag(f"scf.{state}", f"unknown outcome {scenario.scf[state]!r}")

    for idx, profile in enumerate(scenario.utility_profiles):
        for agent in scenario.agents:
            per_agent = profile.get(agent)
            if per_agent is None:
                flag(f"utility_profiles[{idx}].{agent}", "missing agent")
                continue
            for outcome in scenario.outcomes:
                for state in scenario.states:
                    value = per_agent.get((outcome, state))
                    path = f"utility_profiles[{idx}].{agent}.{outcome}.{state}"
                    if value is None:
                        flag(path, "missing utility")
                    elif not (-1 < value < 1):
                        flag(path, f"utility {format_rational(value)} outside (-1,1)")

    if violations:
        # id-level problems make the evidential checks unreliable; stop here.
        return ValidationReport(violations)

    # (se1)/(se2) against the superset-based refutation are consequences of the
    # definition; they are re-checked explicitly all the same.
    for agent in scenario.agents:
        for state in scenario.states:
            for coll in scenario.support(agent, state):
                if refutes(scenario, coll, state, agent):
                    flag(
                        f"distributions.{agent}.{state}",
                        f"(se1) violated: support collection {format_collection(coll)} refutes its own state",
                    )
        for state in scenario.states:
            for coll in scenario.presentable(agent):
                if not refutes(scenario, coll, state, agent):
                    if not any(coll <= sup for sup in scenario.support(agent, state)):
                        flag(
                            f"distributions.{agent}.{state}",
                            f"(se2) violated for {format_collection(coll)}",
                        )

    # Declared nomenclature, when present, makes "proof is true" substantive.
    if scenario.article_names is not None:
        names = scenario.article_names
        for article in scenario.articles:
            if article not in names:
                flag(f"article_names.{article}", "missing declared name")
        derived = article_nomenclature(scenario)
        for agent in scenario.agents:
            for state in scenario.states:
                for coll in scenario.support(agent, state):
                    if refutes_by_names(names, coll, state):
                        flag(
                            f"distributions.{agent}.{state}",
                            f"(se1) violated under declared names: {format_collection(coll)} refutes {state}",
                        )
        for article, declared in names.items():
            for state in declared:
                if state not in scenario.states:
                    flag(f"article_names.{article}", f"unknown state {state!r}")
                elif state not in derived.get(article, frozenset()):
                    flag(
                        f"article_names.{article}",
                        f"(se2) violated: named for {state} but never available there",
                    )

    return ValidationReport(violations)


# -- deterministic-evidence equivalence ------------------------------------


class NonDegenerateInput(ValueError):
    pass


class NoMostInformativeArticle(ValueError):
    pass


@dataclass
class EquivalenceReport:
    se1: bool
    se2: bool
    e1: bool
    e2: bool
    relation_agreement: bool

    @property
    def stochastic_pair(self) -> bool:
        return self.se1 and self.se2

    @property
    def deterministic_pair(self) -> bool:
        return self.e1 and self.e2

    @property
    def equivalent(self) -> bool:
        return self.stochastic_pair == self.deterministic_pair


def check_deterministic_equivalence(scenario: Scenario, nomenclature=None) -> EquivalenceReport:
    """Evaluate (se1)/(se2) and their nomenclature analogues on a degenerate scenario.

    With derived per-agent names both condition pairs hold by construction and
    the substantive content is `relation_agreement`: superset-based refutation
    coincides with name-based refutation on every presentable collection.
    A supplied (declared) nomenclature makes (e1)/(e2) substantive.
    """
    for agent in scenario.agents:
        for state in scenario.states:
            if not scenario.dist(agent, state).is_degenerate():
                raise NonDegenerateInput(f"distribution for {agent} at {state} has >1 support collection")

    se1 = all(
        not refutes(scenario, coll, state, agent)
        for agent in scenario.agents
        for state in scenario.states
        for coll in scenario.support(agent, state)
    )
    se2 = True
    for agent in scenario.agents:
        for state in scenario.states:
            for coll in scenario.presentable(agent):
                if not refutes(scenario, coll, state, agent):
                    if not any(coll <= sup for sup in scenario.support(agent, state)):
                        se2 = False

    per_agent_names = {agent: agent_nomenclature(scenario, agent) for agent in scenario.agents}

    def names_for(agent):
        return nomenclature if nomenclature is not None else per_agent_names[agent]

    e1 = True
    e2 = True
    for agent in scenario.agents:
        names = names_for(agent)
        endowment = {state: scenario.support(agent, state)[0] for state in scenario.states}
        for state in scenario.states:
            for article in endowment[state]:
                named = names.get(article, frozenset())
                if state not in named:
                    e1 = False
                for other in named:
                    if other in scenario.states and article not in endowment[other]:
                        e2 = False

    relation_agreement = True
    for agent in scenario.agents:
        names = per_agent_names[agent]
        for coll in scenario.presentable(agent):
            for state in scenario.states:
                if refutes(scenario, coll, state, agent) != refutes_by_names(names, coll, state):
                    relation_agreement = False

    return EquivalenceReport(se1, se2, e1, e2, relation_agreement)


def most_informative_projection(scenario: Scenario) -> Scenario:
    """Replace every support collection by its single most informative article.

    The most informative article of a collection is the one whose derived
    per-agent name is contained in every other member's name. Raises when a
    collection has no such article. The empty collection projects to itself.
    """
    new_dists = {}
    for agent in scenario.agents:
        names = agent_nomenclature(scenario, agent)
        for state in scenario.states:
            merged = {}
            for coll, prob in scenario.dist(agent, state).items():
                if not coll:
                    target = frozenset()
                else:
                    best = None
                    for article in sorted(coll):
                        if all(names[article] <= names[other] for other in coll):
                            best = article
                            break
                    if best is None:
                        raise NoMostInformativeArticle(
                            f"{format_collection(coll)} has no name-minimal article"
                        )
                    target = frozenset({best})
                merged[target] = merged.get(target, Fraction(0)) + prob
            new_dists[(agent, state)] = Distribution(merged)
    return Scenario(
        agents=scenario.agents,
        states=scenario.states,
        articles=scenario.articles,
        dists=new_dists,
        scf=dict(scenario.scf),
        outcomes=scenario.outcomes,
        utility_profiles=scenario.utility_profiles,
        article_names=None,
    )


# -- JSON wire format --------------------------------------------------------


def parse_scenario(data) -> Scenario:
    """Parse the JSON scenario document (structural errors raise ScenarioFormatError)."""
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario document must be an object")
    try:
        agents = tuple(str(a) for a in data["agents"])
        states = tuple(str(s) for s in data["states"])
        articles = tuple(str(a) for a in data["articles"])
        outcomes = tuple(str(o) for o in data["outcomes"])
        dists = {}
        for agent, per_state in data["distributions"].items():
            for state, rows in per_state.items():
                probs = {}
                for row in rows:
                    coll = frozenset(str(x) for x in row["collection"])
                    probs[coll] = probs.get(coll, Fraction(0)) + parse_rational(row["prob"])
                dists[(str(agent), str(state))] = Distribution(probs)
        scf = {str(s): str(o) for s, o in data["scf"].items()}
        profiles = []
        for profile in data["utility_profiles"]:
            parsed = {}
            for agent, per_outcome in profile.items():
                parsed[str(agent)] = {
                    (str(outcome), str(state)): parse_rational(value)
                    for outcome, per_state in per_outcome.items()
                    for state, value in per_state.items()
                }
            profiles.append(parsed)
        names = None
        if "article_names" in data:
            names = {
                str(article): frozenset(str(s) for s in state_list)
                for article, state_list in data["article_names"].items()
            }
    except ScenarioFormatError:
        raise
    except RationalFormatError as exc:
        raise ScenarioFormatError(str(exc)) from exc
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioFormatError(f"malformed scenario document: {exc!r}") from exc
    return Scenario(
        agents=agents,
        states=states,
        articles=articles,
        dists=dists,
        scf=scf,
        outcomes=outcomes,
        utility_profiles=tuple(profiles),
        article_names=names,
    )


def scenario_to_json(scenario: Scenario) -> dict:
    dists = {}
    for agent in scenario.agents:
        dists[agent] = {}
        for state in scenario.states:
            dists[agent][state] = [
                {"collection": sorted(coll), "prob": format_rational(prob)}
                for coll, prob in scenario.dist(agent, state).items()
            ]
    profiles = []
    for profile in scenario.utility_profiles:
        doc = {}
        for agent in scenario.agents:
            doc[agent] = {
                outcome: {
                    state: format_rational(profile[agent][(outcome, state)])
                    for state in scenario.states
                }
                for outcome in scenario.outcomes
            }
        profiles.append(doc)
    out = {
        "agents": list(scenario.agents),
        "states": list(scenario.states),
        "articles": list(scenario.articles),
        "distributions": dists,
        "scf": {state: scenario.scf[state] for state in scenario.states},
        "outcomes": list(scenario.outcomes),
        "utility_profiles": profiles,
    }
    if scenario.article_names is not None:
        out["article_names"] = {a: sorted(ns) for a, ns in scenario.article_names.items()}
    return out
