"""Interim correlated rationalizability for explicit finite Bayesian games."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import simplex


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class FiniteBayesianGame:
    """Explicit game: per-type beliefs over opponent type profiles, per-type
    action menus, and a payoff function u(agent, type_profile, action_profile)."""

    agents: tuple
    types: dict  # agent -> tuple of type ids
    beliefs: dict  # (agent, type) -> {opponent profile tuple: Fraction}
    actions: dict  # (agent, type) -> tuple of actions
    payoff: object  # callable(agent, full type profile, full action profile) -> Fraction

    def opponents(self, agent):
        return tuple(a for a in self.agents if a != agent)


@dataclass
class IcrTable:
    rounds: list  # round -> {(agent, type): tuple of surviving actions}

    @property
    def fixed_point(self) -> dict:
        return self.rounds[-1]

    def survivors(self, agent, type_id):
        return self.fixed_point[(agent, type_id)]


def _full_profile(game, agent, own, others, opponent_profile):
    by_agent = dict(zip(others, opponent_profile))
    by_agent[agent] = own
    return tuple(by_agent[a] for a in game.agents)


def _supported_pairs(game, agent, type_id, survivors):
    """Opponent (type profile, action profile) pairs a conjecture may weight."""
    others = game.opponents(agent)
    pairs = []
    for t_other, prob in game.beliefs[(agent, type_id)].items():
        if prob == 0:
            continue
        menus = [survivors[(o, t)] for o, t in zip(others, t_other)]
        for action_combo in itertools.product(*menus):
            pairs.append((t_other, action_combo))
    return pairs


def _is_rationalizable(game, agent, type_id, action, survivors):
    """Exact LP feasibility for a best-response-supporting conjecture."""
    others = game.opponents(agent)
    belief = game.beliefs[(agent, type_id)]
    pairs = _supported_pairs(game, agent, type_id, survivors)
    if not pairs:
        return False
    index = {pair: i for i, pair in enumerate(pairs)}
    n = len(pairs)

    constraints = []
    # marginal over opponent types matches the belief
    for t_other, prob in belief.items():
        row = [Fraction(0)] * n
        hit = False
        for pair in pairs:
            if pair[0] == t_other:
                row[index[pair]] = Fraction(1)
                hit = True
        if not hit:
            return False
        constraints.append((row, simplex.EQ, prob))

    # action must weakly beat every alternative under the conjecture
    def value_row(chosen):
        row = []
        for t_other, a_other in pairs:
            full_types = _full_profile(game, agent, type_id, others, t_other)
            full_actions = _full_profile(game, agent, chosen, others, a_other)
            row.append(game.payoff(agent, full_types, full_actions))
        return row

    base = value_row(action)
    for alt in game.actions[(agent, type_id)]:
        if alt == action:
            continue
        alt_row = value_row(alt)
        diff = [b - a for b, a in zip(base, alt_row)]
        constraints.append((diff, simplex.GE, Fraction(0)))

    bounds = [(Fraction(0), None)] * n
    return simplex.feasible(constraints, bounds)


def icr_eliminate(game: FiniteBayesianGame, lp_cap: int = 200000) -> IcrTable:
    """Iterate the elimination operator to its fixed point (exact LPs)."""
    survivors = {
        (agent, t): tuple(game.actions[(agent, t)])
        for agent in game.agents
        for t in game.types[agent]
    }
    rounds = [dict(survivors)]
    spent = 0
    while True:
        new = {}
        changed = False
        for agent in game.agents:
            for t in game.types[agent]:
                keep = []
                for action in survivors[(agent, t)]:
                    spent += 1
                    if spent > lp_cap:
                        raise BudgetExceeded(f"ICR membership tests exceed cap {lp_cap}")
                    if _is_rationalizable(game, agent, t, action, survivors):
                        keep.append(action)
                if len(keep) != len(survivors[(agent, t)]):
                    changed = True
                new[(agent, t)] = tuple(keep)
        rounds.append(new)
        survivors = new
        if not changed:
            return IcrTable(rounds)
