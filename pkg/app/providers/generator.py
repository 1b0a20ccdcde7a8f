"""
무작위 시나리오 생성 Provider
- 과제 선택 게임 (시뮬레이션 설정: 열린 시간창, 이동 비용 0, 비용 U[0,1])
- 채널 선택 게임 (약한 간섭)
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..config import SIM_REWARD_LEVELS, SIM_SEED, SIM_TASKS, SIM_TRIALS, SIM_USER_COUNTS
from ..errors import DomainError
from ..services.mcs_game import MCSScenario, MCSUser, Task, TaskCost
from ..services.mcwa_game import ChannelSpec, MCWAScenario, MCWAUser

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence]

AREA_SIZE = 1000.0  # 과제/사용자 위치 범위 (m)


@dataclass
class SimConfig:
    """과제 선택 시뮬레이션 설정"""
    n_tasks: int = SIM_TASKS
    user_counts: tuple[int, ...] = SIM_USER_COUNTS
    reward_levels: tuple[float, ...] = SIM_REWARD_LEVELS
    cost_range: tuple[float, float] = (0.0, 1.0)
    trials_per_cell: int = SIM_TRIALS
    seed: int = SIM_SEED

    def __post_init__(self):
        self.user_counts = tuple(int(n) for n in self.user_counts)
        self.reward_levels = tuple(float(v) for v in self.reward_levels)
        if self.n_tasks < 1:
            raise DomainError("n_tasks는 1 이상이어야 함")
        if not self.user_counts or min(self.user_counts) < 2:
            raise DomainError("user_counts는 2 이상이어야 함")
        if not self.reward_levels or min(self.reward_levels) < 0:
            raise DomainError("reward_levels는 0 이상이어야 함")
        if self.trials_per_cell < 1:
            raise DomainError("trials_per_cell은 1 이상이어야 함")
        low, high = self.cost_range
        if not 0 <= low <= high:
            raise DomainError(f"잘못된 비용 범위: {self.cost_range}")


def trial_seed(seed: int, reward_level: float, n_users: int, trial: int) -> np.random.SeedSequence:
    """(seed, 보상 수준, 사용자 수, 시행 번호)에서 독립 시드 유도"""
    level_code = int(round(reward_level * 1_000_000))
    return np.random.SeedSequence([seed, level_code, n_users, trial])


class ScenarioGenerator(ABC):
    """시나리오 생성기 베이스 클래스"""

    kind: str = "base"

    @abstractmethod
    def generate(self, seed: SeedLike, n_users: int):
        """seed에 대해 결정적인 시나리오 생성"""
        pass


@dataclass
class MCSGenerator(ScenarioGenerator):
    """분리형 과제 선택 게임 생성기"""
    config: SimConfig = field(default_factory=SimConfig)
    reward_level: float = 1.0

    kind = "mcs"

    def generate(self, seed: SeedLike, n_users: int) -> MCSScenario:
        if n_users < 2:
            raise DomainError(f"사용자 수는 2 이상이어야 함: {n_users}")
        rng = np.random.default_rng(seed)
        n_tasks = self.config.n_tasks
        low, high = self.config.cost_range

        task_locations = rng.uniform(0.0, AREA_SIZE, size=(n_tasks, 2))
        user_locations = rng.uniform(0.0, AREA_SIZE, size=(n_users, 2))
        costs = rng.uniform(low, high, size=(n_users, n_tasks))

        tasks = tuple(
            Task(id=k + 1, reward=self.reward_level, location=tuple(task_locations[k]))
            for k in range(n_tasks)
        )
        users = tuple(
            MCSUser(
                id=i + 1,
                initial_location=tuple(user_locations[i]),
                travel_cost_rate=0.0,
                resource_budget=math.inf,
                available={k + 1: TaskCost(exec_time=0.0, exec_cost=float(costs[i, k])) for k in range(n_tasks)},
            )
            for i in range(n_users)
        )
        return MCSScenario(tasks=tasks, users=users)


@dataclass
class MCWAGenerator(ScenarioGenerator):
    """약한 간섭 채널 선택 게임 생성기 (교차 이득 ≤ cross_scale × 직접 이득)"""
    n_channels: int = 2
    cross_scale: float = 0.1
    log_base: float = 2.0

    kind = "mcwa"

    def generate(self, seed: SeedLike, n_users: int) -> MCWAScenario:
        if n_users < 2:
            raise DomainError(f"사용자 수는 2 이상이어야 함: {n_users}")
        if self.n_channels < 1:
            raise DomainError("채널 수는 1 이상이어야 함")
        if self.cross_scale < 0:
            raise DomainError("cross_scale은 0 이상이어야 함")
        rng = np.random.default_rng(seed)
        n, k = n_users, self.n_channels

        direct = rng.uniform(0.5, 1.5, size=(n, k))
        # 수신자 j 기준으로 교차 이득을 직접 이득에 비례하게 제한한다
        gains = rng.uniform(0.0, self.cross_scale, size=(n, n, k)) * direct[:, None, :]
        idx = np.arange(n)
        gains[idx, idx, :] = direct

        channels = tuple(
            ChannelSpec(id=c + 1, bandwidth=float(b), noise=float(s))
            for c, (b, s) in enumerate(zip(rng.uniform(0.5, 2.0, k), rng.uniform(0.05, 0.5, k)))
        )
        users = tuple(
            MCWAUser(id=i + 1, power_budget=float(p), available=frozenset(ch.id for ch in channels))
            for i, p in enumerate(rng.uniform(0.5, 2.0, n))
        )
        return MCWAScenario(users=users, channels=channels, gains=gains, log_base=self.log_base)


def generate_mcs(
    sim_config: SimConfig,
    reward_level: float,
    n_users: int,
    seed: SeedLike
) -> MCSScenario:
    """
    시뮬레이션용 과제 선택 게임 생성

    Args:
        sim_config: 시뮬레이션 설정
        reward_level: 모든 과제의 보상 V
        n_users: 사용자 수
        seed: 시행 시드 (trial_seed 결과 또는 정수)

    Returns:
        모든 과제가 모든 사용자에게 열려 있고 예산 제약이 없는 시나리오
    """
    scenario = MCSGenerator(config=sim_config, reward_level=reward_level).generate(seed, n_users)
    logger.debug("[SIM] 과제 선택 시나리오 생성 V=%.2f N=%d", reward_level, n_users)
    return scenario


def generate_mcwa(
    seed: SeedLike,
    n_users: int = 2,
    n_channels: int = 2,
    cross_scale: float = 0.1,
    log_base: float = 2.0
) -> MCWAScenario:
    """약한 간섭 채널 선택 게임 생성"""
    generator = MCWAGenerator(n_channels=n_channels, cross_scale=cross_scale, log_base=log_base)
    return generator.generate(seed, n_users)
