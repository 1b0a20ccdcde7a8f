import numpy as np
import pytest

from app.errors import DimensionError, DomainError, EnumerationCapError
from app.services.mechanism import BudgetPlan, TaxingRule, apply_taxation, efficient_rule
from app.services.normal_form import (
    FiniteGame,
    find_inefficiency_witness,
    payoff_table,
    prisoners_dilemma,
    pure_nash,
    random_game,
    social_optima,
)


def test_fixture_matches_builtin(pd_game):
    np.testing.assert_array_equal(pd_game.payoffs, prisoners_dilemma().payoffs)
    assert pd_game.strategy_labels == (("C", "D"), ("C", "D"))


def test_prisoners_dilemma_equilibria(pd_game):
    ne = pure_nash(pd_game)
    assert ne.profiles == [(1, 1)]
    assert ne.payoffs == [(1.0, 1.0)]

    se = social_optima(pd_game)
    assert se.profiles == [(0, 0)]
    assert se.welfare == [4.0]


def test_taxation_moves_equilibrium_to_cooperation(pd_game):
    for exemptions in ((0.0, 0.0), (0.0, 1.0)):
        taxed = apply_taxation(pd_game, efficient_rule(2, exemptions=exemptions), BudgetPlan())
        assert pure_nash(taxed).profiles == [(0, 0)]


def test_payoff_table(pd_game):
    taxed = apply_taxation(pd_game, efficient_rule(2), BudgetPlan())
    assert payoff_table(taxed) == [[(2.0, 2.0), (1.5, 1.5)], [(1.5, 1.5), (1.0, 1.0)]]
    with pytest.raises(DimensionError):
        payoff_table(random_game(np.random.default_rng(0), (2, 2, 2)))


def test_profile_set_to_dict_has_labels(pd_game):
    data = pure_nash(pd_game).to_dict(pd_game)
    assert data["count"] == 1
    assert data["profiles"][0]["labels"] == ["D", "D"]


def test_ties_are_all_equilibria():
    game = FiniteGame(payoffs=np.ones((2, 3, 2)))
    assert len(pure_nash(game)) == 6
    assert pure_nash(game).profiles[0] == (0, 0)


def test_social_optima_in_taxed_equilibria(rng):
    for _ in range(500):
        n_players = int(rng.integers(2, 4))
        counts = tuple(int(c) for c in rng.integers(1, 5, n_players))
        game = random_game(rng, counts)
        taxed = apply_taxation(game, efficient_rule(n_players), BudgetPlan())
        equilibria = pure_nash(taxed)
        assert len(equilibria) > 0
        assert social_optima(game).as_set() <= equilibria.as_set()


@pytest.mark.parametrize("rate", [0.0, 0.25, 0.75, 1.0])
def test_other_flat_rates_admit_inefficient_games(rate):
    game = find_inefficiency_witness(rate, np.random.default_rng(7))
    assert game is not None

    taxed = apply_taxation(game, TaxingRule.flat(2, rate), BudgetPlan())
    equilibria = pure_nash(taxed)
    assert len(equilibria) > 0
    assert equilibria.as_set().isdisjoint(social_optima(game).as_set())


def test_efficient_rate_has_no_witness():
    assert find_inefficiency_witness(0.5, np.random.default_rng(3), max_tries=300) is None


def test_enumeration_cap():
    game = FiniteGame(payoffs=np.zeros((4, 4, 4, 3)))
    with pytest.raises(EnumerationCapError):
        pure_nash(game, cap=10)


def test_invalid_tensors():
    with pytest.raises(DimensionError):
        FiniteGame(payoffs=np.zeros((2, 2, 3)))
    with pytest.raises(DomainError):
        FiniteGame(payoffs=np.zeros((2, 1)))
    with pytest.raises(DimensionError):
        FiniteGame(payoffs=np.zeros((2, 2, 2)), strategy_labels=(("a",), ("b", "c")))


def test_flat_taxation_keeps_social_optima(rng):
    for _ in range(300):
        n_players = int(rng.integers(2, 4))
        game = random_game(rng, tuple(int(c) for c in rng.integers(1, 5, n_players)))
        rate = float(rng.uniform(0.0, 1.0))
        plan = BudgetPlan(beta=float(rng.choice([0.5, 1.0, 2.0])))
        rule = TaxingRule.flat(n_players, rate, rng.uniform(-1, 1, n_players))
        taxed = apply_taxation(game, rule, plan)
        assert social_optima(taxed).as_set() == social_optima(game).as_set()


def test_efficient_rate_aligns_best_responses_with_welfare(rng):
    for _ in range(300):
        n_players = int(rng.integers(2, 4))
        game = random_game(rng, tuple(int(c) for c in rng.integers(2, 5, n_players)))
        plan = BudgetPlan(beta=float(rng.choice([0.5, 1.0, 2.0])))
        rule = efficient_rule(n_players, plan, rng.uniform(-1, 1, n_players))
        taxed = apply_taxation(game, rule, plan)
        welfare = game.welfare_tensor()
        for i in range(n_players):
            np.testing.assert_array_equal(
                np.argmax(taxed.payoffs[..., i], axis=i),
                np.argmax(welfare, axis=i),
            )
