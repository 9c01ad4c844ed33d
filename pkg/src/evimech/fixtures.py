"""Golden scenarios used across tests, docs and the CLI examples."""

from __future__ import annotations

from fractions import Fraction

from .scenario import Distribution, Scenario

F = Fraction


def _profile(scenario_agents, outcomes, states, values):
    """values: agent -> outcome -> Fraction (state-independent shorthand)."""
    return {
        agent: {(outcome, state): values[agent].get(outcome, F(0)) for outcome in outcomes for state in states}
        for agent in scenario_agents
    }


def make_scenario(agents, states, articles, dists, scf, outcomes, utility_values=None, article_names=None):
    """Build a scenario from plain tuples; utility_values is a list of agent->outcome maps.

    A constant (all-zero) profile is always prepended.
    """
    agents = tuple(agents)
    states = tuple(states)
    articles = tuple(articles)
    outcomes = tuple(outcomes)
    parsed = {
        (agent, state): dist if isinstance(dist, Distribution) else Distribution(dist)
        for (agent, state), dist in dists.items()
    }
    profiles = [_profile(agents, outcomes, states, {a: {} for a in agents})]
    for values in utility_values or []:
        profiles.append(_profile(agents, outcomes, states, values))
    names = None
    if article_names is not None:
        names = {a: frozenset(ns) for a, ns in article_names.items()}
    return Scenario(
        agents=agents,
        states=states,
        articles=articles,
        dists=parsed,
        scf=dict(scf),
        outcomes=outcomes,
        utility_profiles=tuple(profiles),
        article_names=names,
    )


def leading_example() -> Scenario:
    """Research-grant example: startup A (quality L/M/H), incumbent B without evidence."""
    c_top = frozenset({"mh", "lmh"})
    c_low = frozenset({"lmh"})
    empty = frozenset()
    return make_scenario(
        agents=("A", "B"),
        states=("L", "M", "H"),
        articles=("lmh", "mh"),
        dists={
            ("A", "H"): {c_top: F(3, 5), c_low: F(2, 5)},
            ("A", "M"): {c_top: F(2, 5), c_low: F(3, 5)},
            ("A", "L"): {c_low: F(1)},
            ("B", "H"): {empty: F(1)},
            ("B", "M"): {empty: F(1)},
            ("B", "L"): {empty: F(1)},
        },
        scf={"L": "grant_b", "M": "grant_b", "H": "grant_a"},
        outcomes=("grant_a", "grant_b"),
        utility_values=[
            {"A": {"grant_a": F(1, 4), "grant_b": F(-1, 4)}, "B": {"grant_a": F(-1, 4), "grant_b": F(1, 4)}}
        ],
        article_names={"lmh": ("L", "M", "H"), "mh": ("M", "H")},
    )


def perturbed_example() -> Scenario:
    """Leading example with the extra article available at H with probability 1/10.

    The extra article rides on the richest collection, so a perfect deception
    from H to M still exists while M becomes refutable at H with mass 1/10.
    """
    c_rich = frozenset({"h", "mh", "lmh"})
    c_top = frozenset({"mh", "lmh"})
    c_low = frozenset({"lmh"})
    empty = frozenset()
    return make_scenario(
        agents=("A", "B"),
        states=("L", "M", "H"),
        articles=("lmh", "mh", "h"),
        dists={
            ("A", "H"): {c_rich: F(1, 10), c_top: F(1, 2), c_low: F(2, 5)},
            ("A", "M"): {c_top: F(2, 5), c_low: F(3, 5)},
            ("A", "L"): {c_low: F(1)},
            ("B", "H"): {empty: F(1)},
            ("B", "M"): {empty: F(1)},
            ("B", "L"): {empty: F(1)},
        },
        scf={"L": "grant_b", "M": "grant_b", "H": "grant_a"},
        outcomes=("grant_a", "grant_b"),
        utility_values=[
            {"A": {"grant_a": F(1, 4), "grant_b": F(-1, 4)}, "B": {"grant_a": F(-1, 4), "grant_b": F(1, 4)}}
        ],
        article_names={"lmh": ("L", "M", "H"), "mh": ("M", "H"), "h": ("H",)},
    )


def pure_deception_example() -> Scenario:
    """Four-state structure where H admits a pure-perfect deception toward U."""
    big = frozenset({"lmhu", "mhu", "hu"})
    mid = frozenset({"lmhu", "mhu"})
    low = frozenset({"lmhu"})
    return make_scenario(
        agents=("A", "B"),
        states=("U", "H", "M", "L"),
        articles=("lmhu", "mhu", "hu"),
        dists={
            ("A", "U"): {low: F(1, 10), big: F(9, 10)},
            ("A", "H"): {mid: F(1, 10), big: F(9, 10)},
            ("A", "M"): {mid: F(1, 2), low: F(1, 2)},
            ("A", "L"): {low: F(1)},
            ("B", "U"): {low: F(1)},
            ("B", "H"): {low: F(1)},
            ("B", "M"): {low: F(1)},
            ("B", "L"): {low: F(1)},
        },
        scf={"U": "o_u", "H": "o_h", "M": "o_m", "L": "o_l"},
        outcomes=("o_u", "o_h", "o_m", "o_l"),
        utility_values=[
            {
                "A": {"o_u": F(0), "o_h": F(1, 4), "o_m": F(0), "o_l": F(-1, 4)},
                "B": {"o_u": F(1, 4), "o_h": F(0), "o_m": F(-1, 4), "o_l": F(0)},
            }
        ],
        article_names={"lmhu": ("L", "M", "H", "U"), "mhu": ("M", "H", "U"), "hu": ("H", "U")},
    )


def projection_example() -> Scenario:
    """Structure whose most-informative-article projection merges states M and H."""
    with_u = frozenset({"lmhu", "mh"})
    without_u = frozenset({"lmh", "mh"})
    low = frozenset({"lmhu"})
    l_pair = frozenset({"lmh", "lmhu"})
    return make_scenario(
        agents=("A", "B"),
        states=("U", "H", "M", "L"),
        articles=("lmhu", "mh", "lmh"),
        dists={
            ("A", "U"): {low: F(1)},
            ("A", "H"): {with_u: F(3, 10), without_u: F(7, 10)},
            ("A", "M"): {with_u: F(1, 2), without_u: F(1, 2)},
            ("A", "L"): {l_pair: F(1)},
            ("B", "U"): {low: F(1)},
            ("B", "H"): {low: F(1)},
            ("B", "M"): {low: F(1)},
            ("B", "L"): {low: F(1)},
        },
        scf={"U": "o_u", "H": "o_h", "M": "o_m", "L": "o_l"},
        outcomes=("o_u", "o_h", "o_m", "o_l"),
        article_names={"lmhu": ("L", "M", "H", "U"), "mh": ("M", "H"), "lmh": ("L", "M", "H")},
    )


def micro_example() -> Scenario:
    """Two states, one article; the smallest structure with a nontrivial mechanism."""
    w = frozenset({"w"})
    empty = frozenset()
    return make_scenario(
        agents=("A", "B"),
        states=("s1", "s2"),
        articles=("w",),
        dists={
            ("A", "s1"): {w: F(1)},
            ("A", "s2"): {empty: F(1)},
            ("B", "s1"): {empty: F(1)},
            ("B", "s2"): {empty: F(1)},
        },
        scf={"s1": "o1", "s2": "o2"},
        outcomes=("o1", "o2"),
        utility_values=[{"A": {"o1": F(1, 4), "o2": F(0)}, "B": {"o1": F(0), "o2": F(1, 4)}}],
        article_names={"w": ("s1",)},
    )


def appended_article_example() -> Scenario:
    """Deception exists toward s2 but s2 is refutable at s1 (extra article at s1)."""
    return make_scenario(
        agents=("A", "B"),
        states=("s1", "s2"),
        articles=("x", "ea"),
        dists={
            ("A", "s1"): {frozenset({"x", "ea"}): F(1)},
            ("A", "s2"): {frozenset({"x"}): F(1)},
            ("B", "s1"): {frozenset(): F(1)},
            ("B", "s2"): {frozenset(): F(1)},
        },
        scf={"s1": "o1", "s2": "o2"},
        outcomes=("o1", "o2"),
    )


ALL_FIXTURES = {
    "leading": leading_example,
    "perturbed": perturbed_example,
    "pure_deception": pure_deception_example,
    "projection": projection_example,
    "micro": micro_example,
    "appended_article": appended_article_example,
}
