import itertools
import math

import numpy as np
import pytest

from app.errors import FeasibilityError, ScenarioError, SelectionError, UnknownTaskError
from app.services.mcs_game import (
    MCSScenario,
    MCSUser,
    Task,
    TaskCost,
    coverage_counts,
    exec_cost,
    is_feasible,
    is_separable,
    potential,
    profile_feasible,
    reward_share,
    schedule_earliest,
    social_welfare,
    taxed_user_payoff,
    travel_cost,
    user_payoff,
    user_payoffs,
)
from app.services.mcs_solver import MCSSolver


def test_single_task_example_payoffs(mcs_example):
    both = ((1,), (1,))
    np.testing.assert_allclose(user_payoffs(mcs_example, both), [0.2, 0.1])
    assert social_welfare(mcs_example, both) == pytest.approx(0.3)
    assert potential(mcs_example, both) == pytest.approx(5.3)

    one = ((1,), ())
    assert social_welfare(mcs_example, one) == pytest.approx(5.2)
    assert potential(mcs_example, one) == pytest.approx(5.2)
    assert social_welfare(mcs_example, ((), ())) == 0.0


def test_taxed_payoff_equals_even_welfare_split(mcs_example):
    for i in range(2):
        assert taxed_user_payoff(mcs_example, ((1,), ()), i) == pytest.approx(2.6)


def test_separability(mcs_example, mcs_route):
    assert is_separable(mcs_example)
    assert not is_separable(mcs_route)


def test_route_schedule(mcs_route):
    schedule = schedule_earliest(mcs_route, 0, (1, 2, 3, 4))
    assert schedule.feasible
    assert schedule.execution_times[0] == pytest.approx(math.hypot(200, 100) / 1.2)
    assert schedule.execution_times[1:] == (1800.0, 3600.0, 14400.0)
    assert is_feasible(mcs_route, 0, (1, 2, 3, 4))

    # 과제 4 창은 14400에 열리므로 그 뒤의 과제 1은 마감(7200)을 넘긴다
    assert not schedule_earliest(mcs_route, 0, (4, 1)).feasible
    assert not profile_feasible(mcs_route, ((4, 1), (), ()))


def test_route_payoff_components(mcs_route):
    profile = ((1, 2, 3, 4), (3, 5, 6), (7, 8, 9))
    assert profile_feasible(mcs_route, profile)
    counts = coverage_counts(mcs_route, profile)
    assert counts[3] == 2 and counts[1] == 1

    for i, sel in enumerate(profile):
        expected = reward_share(mcs_route, profile, i) - exec_cost(mcs_route, i, sel) - travel_cost(mcs_route, i, sel)
        assert user_payoff(mcs_route, profile, i) == pytest.approx(expected)

    shares = sum(reward_share(mcs_route, profile, i) for i in range(3))
    covered = sum(mcs_route.task(k).reward for k, m in counts.items() if m > 0)
    assert shares == pytest.approx(covered)


def test_budget_limits_feasibility():
    scenario = MCSScenario(
        tasks=(Task(1, 2.0, (0, 0)), Task(2, 2.0, (0, 0))),
        users=(
            MCSUser(1, (0, 0), resource_budget=1.0, available={1: TaskCost(0, 0.6), 2: TaskCost(0, 0.6)}),
            MCSUser(2, (0, 0), available={1: TaskCost(0, 0.1)}),
        ),
    )
    assert is_feasible(scenario, 0, (1,))
    assert not is_feasible(scenario, 0, (1, 2))
    with pytest.raises(FeasibilityError):
        user_payoffs(scenario, ((1, 2), ()))


def test_selection_errors(mcs_route):
    with pytest.raises(SelectionError):
        user_payoffs(mcs_route, ((1, 1), (), ()))
    with pytest.raises(SelectionError):
        user_payoffs(mcs_route, ((9,), (), ()))
    with pytest.raises(UnknownTaskError):
        user_payoffs(mcs_route, ((42,), (), ()))
    with pytest.raises(KeyError):
        mcs_route.task(42)


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        MCSScenario(tasks=(Task(1, 1.0, (0, 0)), Task(1, 1.0, (1, 1))), users=())
    with pytest.raises(ScenarioError):
        MCSScenario(tasks=(Task(1, 1.0, (0, 0)),), users=(MCSUser(1, (0, 0), available={2: TaskCost()}),))
    with pytest.raises(ScenarioError):
        Task(1, 1.0, (0, 0), window_open=5.0, window_close=1.0)


def test_potential_tracks_unilateral_deviations(random_mcs_factory, rng):
    checked = 0
    while checked < 10_000:
        scenario = random_mcs_factory(rng, n_users=3, n_tasks=4)
        solver = MCSSolver(scenario)
        options = [solver.feasible_selections(i) for i in range(scenario.n_users)]
        for _ in range(50):
            profile = [options[i][rng.integers(len(options[i]))] for i in range(scenario.n_users)]
            i = int(rng.integers(scenario.n_users))
            deviated = list(profile)
            deviated[i] = options[i][rng.integers(len(options[i]))]

            du = user_payoff(scenario, deviated, i) - user_payoff(scenario, profile, i)
            dphi = potential(scenario, deviated) - potential(scenario, profile)
            assert du == pytest.approx(dphi, abs=1e-9)
            checked += 1


def test_route_reward_totals(mcs_route):
    profile = ((1, 2, 3, 4), (3, 5, 6), (7, 8, 9))
    shares = [reward_share(mcs_route, profile, i) for i in range(3)]
    assert shares == pytest.approx([4.6, 5.8, 4.8])


def test_potential_bounds_welfare(random_mcs_factory, rng):
    for _ in range(200):
        scenario = random_mcs_factory(rng, n_users=3, n_tasks=4)
        solver = MCSSolver(scenario)
        options = [solver.feasible_selections(i) for i in range(scenario.n_users)]
        for _ in range(10):
            profile = [options[i][rng.integers(len(options[i]))] for i in range(scenario.n_users)]
            assert potential(scenario, profile) >= social_welfare(scenario, profile) - 1e-12


def _line_scenario(rng):
    """정수 좌표(직선 위), 속도 1, 정수 시간 창과 실행 시간"""
    tasks = []
    for k in range(1, 4):
        open_at = int(rng.integers(0, 10))
        tasks.append(Task(
            id=k,
            reward=1.0,
            location=(float(rng.integers(0, 6)), 0.0),
            window_open=float(open_at),
            window_close=float(open_at + rng.integers(0, 8)),
        ))
    user = MCSUser(
        id=1,
        initial_location=(float(rng.integers(0, 6)), 0.0),
        available={k: TaskCost(exec_time=float(rng.integers(0, 4))) for k in range(1, 4)},
    )
    other = MCSUser(id=2, initial_location=(0.0, 0.0))
    return MCSScenario(tasks=tuple(tasks), users=(user, other))


def _grid_schedules(scenario, sel, horizon):
    """정수 시각 격자 위의 모든 실행 가능 일정"""
    user = scenario.users[0]
    found = []

    def extend(times, location, ready):
        if len(times) == len(sel):
            found.append(tuple(times))
            return
        task = scenario.task(sel[len(times)])
        arrive = ready + abs(task.location[0] - location[0]) / user.speed
        for t in range(horizon + 1):
            if t >= arrive and task.window_open <= t <= task.window_close:
                extend(times + [float(t)], task.location, t + user.available[task.id].exec_time)

    extend([], user.initial_location, 0.0)
    return found


def test_earliest_schedule_against_time_grid(rng):
    for _ in range(60):
        scenario = _line_scenario(rng)
        for size in (1, 2, 3):
            for sel in itertools.permutations((1, 2, 3), size):
                schedule = schedule_earliest(scenario, 0, sel)
                grid = _grid_schedules(scenario, sel, horizon=20)
                assert schedule.feasible == bool(grid)
                assert is_feasible(scenario, 0, sel) == bool(grid)
                for times in grid:
                    assert all(e <= t for e, t in zip(schedule.execution_times, times))
                if grid:
                    assert schedule.execution_times in grid


def test_feasibility_survives_prefix_truncation(random_mcs_factory, rng):
    for _ in range(100):
        scenario = random_mcs_factory(rng, n_users=2, n_tasks=4)
        for i in range(scenario.n_users):
            tasks = list(scenario.users[i].available)
            for _ in range(10):
                size = int(rng.integers(1, len(tasks) + 1)) if tasks else 0
                sel = tuple(int(k) for k in rng.permutation(tasks)[:size])
                if is_feasible(scenario, i, sel):
                    assert all(is_feasible(scenario, i, sel[:m]) for m in range(len(sel)))
