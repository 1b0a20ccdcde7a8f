"""공통 픽스처"""

import math

import numpy as np
import pytest

from app.config import MCS_EXAMPLE_PATH, MCS_ROUTE_EXAMPLE_PATH, MCWA_EXAMPLE_PATH, PD_FIXTURE_PATH
from app.providers.scenario import load_scenario
from app.services.mcs_game import MCSScenario, MCSUser, Task, TaskCost


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pd_game():
    return load_scenario(PD_FIXTURE_PATH).body


@pytest.fixture
def mcs_example():
    return load_scenario(MCS_EXAMPLE_PATH).body


@pytest.fixture
def mcs_route():
    return load_scenario(MCS_ROUTE_EXAMPLE_PATH).body


@pytest.fixture
def mcwa_example():
    return load_scenario(MCWA_EXAMPLE_PATH).body


def random_mcs(rng: np.random.Generator, n_users: int, n_tasks: int, windows: bool = True) -> MCSScenario:
    """시간 창, 이동 비용, 예산이 모두 걸린 작은 무작위 과제 선택 게임"""
    tasks = []
    for k in range(1, n_tasks + 1):
        open_at = float(rng.uniform(0, 50)) if windows else 0.0
        tasks.append(Task(
            id=k,
            reward=float(rng.uniform(0.5, 3.0)),
            location=tuple(rng.uniform(0, 20, 2)),
            window_open=open_at,
            window_close=open_at + float(rng.uniform(10, 60)) if windows else math.inf,
        ))
    users = []
    for i in range(1, n_users + 1):
        available = {
            k: TaskCost(exec_time=float(rng.uniform(1, 5)), exec_cost=float(rng.uniform(0, 1.5)))
            for k in range(1, n_tasks + 1)
            if rng.random() < 0.8
        }
        users.append(MCSUser(
            id=i,
            initial_location=tuple(rng.uniform(0, 20, 2)),
            travel_cost_rate=float(rng.uniform(0, 0.05)),
            speed=float(rng.uniform(0.5, 2.0)),
            resource_budget=float(rng.uniform(0.5, 3.0)),
            available=available,
        ))
    return MCSScenario(tasks=tuple(tasks), users=tuple(users))


@pytest.fixture
def random_mcs_factory():
    return random_mcs
