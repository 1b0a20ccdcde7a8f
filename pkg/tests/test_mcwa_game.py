import math

import numpy as np
import pytest

from app.errors import DimensionError, ScenarioError
from app.providers.generator import generate_mcwa
from app.services.mcwa_game import (
    ChannelSpec,
    MCWAScenario,
    MCWAUser,
    PowerAllocation,
    capacities,
    capacity_gradient,
    interference,
    iterative_water_filling,
    kkt_residual,
    project_budget,
    social_optimum,
    social_welfare,
    taxed_equilibrium,
    water_fill,
    welfare_gradient,
)
from app.services.mechanism import BudgetPlan, efficient_rule


def _scenario(rng, n_users, n_channels, cross=0.3):
    channels = tuple(
        ChannelSpec(k + 1, float(rng.uniform(0.5, 2)), float(rng.uniform(0.05, 1))) for k in range(n_channels)
    )
    users = tuple(
        MCWAUser(i + 1, float(rng.uniform(0.5, 3)), frozenset(ch.id for ch in channels)) for i in range(n_users)
    )
    gains = rng.uniform(0, cross, (n_users, n_users, n_channels))
    for i in range(n_users):
        gains[i, i] = rng.uniform(0.5, 2, n_channels)
    return MCWAScenario(users=users, channels=channels, gains=gains, log_base=float(rng.choice([2.0, math.e, 10.0])))


def test_two_link_example(mcwa_example):
    iwf = iterative_water_filling(mcwa_example)
    assert iwf.converged
    assert iwf.rounds == 1
    np.testing.assert_allclose(iwf.allocation.power, [[2.0], [2.0]])
    ne_welfare = social_welfare(mcwa_example, iwf.allocation)
    assert ne_welfare == pytest.approx(2 * math.log10(1 + 2 / 2.2))
    assert ne_welfare == pytest.approx(0.562, abs=1e-3)

    optimum = social_optimum(mcwa_example)
    assert optimum.exact
    assert optimum.welfare == pytest.approx(1.041, abs=1e-3)
    assert sorted(optimum.allocation.power.ravel().tolist()) == pytest.approx([0.0, 2.0])

    taxed = taxed_equilibrium(mcwa_example)
    assert taxed.taxed_payoffs == pytest.approx([0.52, 0.52], abs=0.01)
    assert taxed.taxed_payoffs.sum() == pytest.approx(taxed.welfare)


def test_water_filling_kkt(rng):
    for _ in range(1000):
        scenario = _scenario(rng, 1, int(rng.integers(1, 7)))
        result = water_fill(scenario, 0, scenario.noise)
        alloc = PowerAllocation(result.power[None, :])
        assert kkt_residual(scenario, alloc, 0) < 1e-6
        assert abs(result.power.sum() - scenario.users[0].power_budget) < 1e-8
        assert np.all(result.power >= 0)


def test_water_filling_without_channels():
    scenario = MCWAScenario(
        users=(MCWAUser(1, 1.0, frozenset()), MCWAUser(2, 1.0, frozenset({1}))),
        channels=(ChannelSpec(1, 1.0, 0.1),),
        gains=np.ones((2, 2, 1)),
    )
    result = water_fill(scenario, 0, scenario.noise)
    assert result.selection == ()
    assert result.lam == math.inf
    assert capacities(scenario, np.array([[0.0], [1.0]]))[0] == 0.0


def test_gradients_match_finite_differences(rng):
    h = 1e-6
    for _ in range(30):
        scenario = _scenario(rng, 3, 2)
        power = rng.uniform(0.2, 0.5, (3, 2))
        analytic = welfare_gradient(scenario, power)
        for i in range(3):
            own = capacity_gradient(scenario, power, i)
            for k in range(2):
                step = np.zeros_like(power)
                step[i, k] = h
                dw = (social_welfare(scenario, power + step) - social_welfare(scenario, power - step)) / (2 * h)
                du = (capacities(scenario, power + step)[i] - capacities(scenario, power - step)[i]) / (2 * h)
                assert analytic[i, k] == pytest.approx(dw, rel=1e-4, abs=1e-8)
                assert own[k] == pytest.approx(du, rel=1e-4, abs=1e-8)


def test_iwf_reaches_water_filling_fixed_point():
    scenario = generate_mcwa(5, n_users=3, n_channels=3, cross_scale=0.1)
    result = iterative_water_filling(scenario)
    assert result.converged
    for i in range(scenario.n_users):
        assert kkt_residual(scenario, result.allocation, i) < 1e-6
        assert result.allocation.spend(i) == pytest.approx(scenario.users[i].power_budget)

    damped = iterative_water_filling(scenario, damping=0.5)
    assert damped.converged
    np.testing.assert_allclose(damped.allocation.power, result.allocation.power, atol=1e-6)


def test_project_budget():
    x = np.array([0.5, -1.0, 0.2])
    np.testing.assert_allclose(project_budget(x, 1.0), [0.5, 0.0, 0.2])
    projected = project_budget(np.array([3.0, 1.0, -2.0]), 2.0)
    np.testing.assert_allclose(projected, [2.0, 0.0, 0.0])
    projected = project_budget(np.array([1.5, 1.0, 0.1]), 2.0)
    assert projected.sum() == pytest.approx(2.0)
    np.testing.assert_allclose(projected, [1.25, 0.75, 0.0])


def test_social_optimum_matches_grid(rng):
    for _ in range(50):
        scenario = _scenario(rng, 2, 1, cross=1.5)
        optimum = social_optimum(scenario, restarts=8)

        p1 = np.linspace(0, scenario.users[0].power_budget, 200)[:, None]
        p2 = np.linspace(0, scenario.users[1].power_budget, 200)[None, :]
        g = scenario.gains[:, :, 0]
        sigma, bandwidth = scenario.noise[0], scenario.bandwidth[0]
        grid = bandwidth * (
            np.log1p(g[0, 0] * p1 / (sigma + g[0, 1] * p2))
            + np.log1p(g[1, 1] * p2 / (sigma + g[1, 0] * p1))
        ) / math.log(scenario.log_base)
        gap = max(np.abs(np.diff(grid, axis=0)).max(), np.abs(np.diff(grid, axis=1)).max())

        assert optimum.welfare >= grid.max() - gap
        assert optimum.welfare <= grid.max() + gap


def test_taxed_equilibrium_with_exemptions(mcwa_example):
    plan = BudgetPlan()
    rule = efficient_rule(2, plan, exemptions=(0.0, 0.2))
    taxed = taxed_equilibrium(mcwa_example, rule, plan)
    assert taxed.taxed_payoffs[1] - taxed.taxed_payoffs[0] == pytest.approx(0.2)
    assert taxed.breakdown.platform_net == pytest.approx(0.0, abs=1e-12)


def test_scenario_validation():
    channels = (ChannelSpec(1, 1.0, 0.1),)
    users = (MCWAUser(1, 1.0, frozenset({1})), MCWAUser(2, 1.0, frozenset({1})))
    with pytest.raises(ScenarioError):
        MCWAScenario(users=users, channels=channels, gains=np.ones((2, 2, 2)))
    with pytest.raises(ScenarioError):
        MCWAScenario(users=users, channels=channels, gains=-np.ones((2, 2, 1)))
    with pytest.raises(ScenarioError):
        MCWAScenario(users=(MCWAUser(1, 1.0, frozenset({3})), users[1]), channels=channels, gains=np.ones((2, 2, 1)))
    with pytest.raises(ScenarioError):
        ChannelSpec(1, 0.0, 0.1)
    scenario = MCWAScenario(users=users, channels=channels, gains=np.ones((2, 2, 1)))
    with pytest.raises(DimensionError):
        capacities(scenario, np.zeros((3, 1)))


def test_water_filling_many_channels_with_interference(rng):
    for _ in range(500):
        scenario = _scenario(rng, 3, int(rng.integers(1, 7)), cross=1.0)
        power = rng.uniform(0, 2, (3, scenario.n_channels))
        i = int(rng.integers(3))
        result = water_fill(scenario, i, interference(scenario, power, i))
        assert result.power.sum() == pytest.approx(scenario.users[i].power_budget, abs=1e-8)
        assert np.all(result.power >= 0)


@pytest.mark.parametrize("seed", range(20))
def test_generated_scenarios_solve(seed):
    scenario = generate_mcwa(seed, n_users=3, n_channels=4)
    iwf = iterative_water_filling(scenario)
    optimum = social_optimum(scenario, restarts=4, seed=seed)
    assert np.isfinite(optimum.welfare)
    assert optimum.welfare >= social_welfare(scenario, iwf.allocation) - 1e-9


def test_interference_monotone_in_other_power(rng):
    for _ in range(200):
        scenario = _scenario(rng, 3, 3)
        power = rng.uniform(0, 1, (3, 3))
        i, j, k = 0, int(rng.integers(1, 3)), int(rng.integers(3))
        raised = power.copy()
        raised[j, k] += 0.5
        assert interference(scenario, raised, i)[k] > interference(scenario, power, i)[k]
        assert capacities(scenario, raised)[i] <= capacities(scenario, power)[i] + 1e-12


def test_no_cross_gain_makes_iwf_optimal(rng):
    for _ in range(20):
        scenario = _scenario(rng, 3, int(rng.integers(1, 4)), cross=0.0)
        iwf = iterative_water_filling(scenario)
        assert iwf.converged
        assert iwf.rounds == 1
        optimum = social_optimum(scenario, restarts=4)
        assert optimum.welfare == pytest.approx(social_welfare(scenario, iwf.allocation), rel=1e-8, abs=1e-8)


def test_converged_iwf_spends_every_budget(rng):
    for _ in range(20):
        scenario = _scenario(rng, 3, 3, cross=0.05)
        iwf = iterative_water_filling(scenario)
        if not iwf.converged:
            continue
        for i in range(scenario.n_users):
            assert iwf.allocation.spend(i) == pytest.approx(scenario.users[i].power_budget, abs=1e-8)
