"""
과제 선택 게임 (위치·시간 의존 모바일 크라우드센싱)
- 과제/사용자 데이터 모델
- 최조기 실행 일정과 실행 가능성
- 보수, 포텐셜, 사회 후생
- 과세 후 보수
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionError, FeasibilityError, ScenarioError, SelectionError, UnknownTaskError
from .mechanism import BudgetPlan, TaxBreakdown, TaxingRule, efficient_rule, taxed_payoffs

Point = tuple[float, float]
OrderedSelection = tuple[int, ...]
MCSProfile = tuple[OrderedSelection, ...]


@dataclass(frozen=True)
class Task:
    """센싱 과제"""
    id: int
    reward: float  # V_k
    location: Point  # L_k (m)
    window_open: float = 0.0  # T_k† (s)
    window_close: float = math.inf  # T_k‡ (s)

    def __post_init__(self):
        object.__setattr__(self, "location", (float(self.location[0]), float(self.location[1])))
        if self.reward < 0:
            raise ScenarioError(f"tasks[{self.id}].reward", ">= 0")
        if self.window_open > self.window_close:
            raise ScenarioError(f"tasks[{self.id}].window_open", "<= window_close")

    @property
    def is_unbounded(self) -> bool:
        return self.window_close == math.inf and self.window_open <= 0.0


@dataclass(frozen=True)
class TaskCost:
    """사용자 i의 과제 k 실행 시간 T_{i,k}와 비용 C_{i,k}"""
    exec_time: float = 0.0
    exec_cost: float = 0.0

    def __post_init__(self):
        if self.exec_time < 0 or self.exec_cost < 0:
            raise ScenarioError("available", "exec_time, exec_cost >= 0")


@dataclass(frozen=True)
class MCSUser:
    """모바일 사용자"""
    id: int
    initial_location: Point  # L_i
    travel_cost_rate: float = 0.0  # C̃_i (비용/m)
    speed: float = 1.0  # R_i (m/s)
    resource_budget: float = math.inf  # C_i
    available: dict[int, TaskCost] = field(default_factory=dict)  # S_i

    def __post_init__(self):
        object.__setattr__(
            self, "initial_location",
            (float(self.initial_location[0]), float(self.initial_location[1]))
        )
        if self.speed <= 0:
            raise ScenarioError(f"users[{self.id}].speed", "> 0")
        if self.travel_cost_rate < 0:
            raise ScenarioError(f"users[{self.id}].travel_cost_rate", ">= 0")
        if self.resource_budget < 0:
            raise ScenarioError(f"users[{self.id}].resource_budget", ">= 0")


@dataclass(frozen=True)
class MCSScenario:
    """과제 선택 게임 인스턴스"""
    tasks: tuple[Task, ...]
    users: tuple[MCSUser, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "users", tuple(self.users))
        index = {}
        for task in self.tasks:
            if task.id in index:
                raise ScenarioError("tasks.id", "unique", f"중복 ID {task.id}")
            index[task.id] = task
        object.__setattr__(self, "_index", index)

        for user in self.users:
            unknown = [k for k in user.available if k not in index]
            if unknown:
                raise ScenarioError(
                    f"users[{user.id}].available", "known task id", f"알 수 없는 과제 {unknown}"
                )

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def task_ids(self) -> list[int]:
        return [task.id for task in self.tasks]

    def task(self, task_id: int) -> Task:
        try:
            return self._index[task_id]
        except KeyError:
            raise UnknownTaskError(f"알 수 없는 과제 ID: {task_id}") from None

    def empty_profile(self) -> MCSProfile:
        return tuple(() for _ in self.users)


@dataclass
class Schedule:
    """순서 선택에 대한 실행 시각 벡터"""
    execution_times: tuple[float, ...]
    feasible: bool


def distance(a: Point, b: Point) -> float:
    """2차원 유클리드 거리"""
    return math.dist(a, b)


def validate_selection(scenario: MCSScenario, i: int, sel: Sequence[int]) -> OrderedSelection:
    """중복 없음, 모든 과제가 사용자 i에게 허용됨을 확인"""
    sel = tuple(int(k) for k in sel)
    user = scenario.users[i]
    for k in sel:
        scenario.task(k)
        if k not in user.available:
            raise SelectionError(f"과제 {k}는 사용자 {user.id}에게 허용되지 않음")
    if len(set(sel)) != len(sel):
        raise SelectionError(f"중복된 과제가 있음: {sel}")
    return sel


def validate_profile(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> MCSProfile:
    if len(profile) != scenario.n_users:
        raise DimensionError(
            f"프로필 길이 {len(profile)}와 사용자 수 {scenario.n_users}가 다름"
        )
    return tuple(validate_selection(scenario, i, sel) for i, sel in enumerate(profile))


def schedule_earliest(scenario: MCSScenario, i: int, sel: Sequence[int]) -> Schedule:
    """
    최조기 실행 일정

    첫 과제는 이동 후 창이 열리자마자, 이후 과제는 직전 과제 실행과 이동이 끝난
    뒤 창이 열리자마자 실행한다. 모든 실행 시각이 창 마감 이전이면 실행 가능.
    """
    user = scenario.users[i]
    sel = validate_selection(scenario, i, sel)

    times = []
    feasible = True
    location = user.initial_location
    ready = 0.0
    for k in sel:
        task = scenario.task(k)
        start = max(ready + distance(location, task.location) / user.speed, task.window_open)
        if start > task.window_close:
            feasible = False
        times.append(start)
        ready = start + user.available[k].exec_time
        location = task.location

    return Schedule(execution_times=tuple(times), feasible=feasible)


def exec_cost(scenario: MCSScenario, i: int, sel: Sequence[int]) -> float:
    user = scenario.users[i]
    return float(sum(user.available[k].exec_cost for k in sel))


def travel_cost(scenario: MCSScenario, i: int, sel: Sequence[int]) -> float:
    """이동 거리 × 단위 이동 비용 (빈 선택은 0)"""
    user = scenario.users[i]
    if not sel or user.travel_cost_rate == 0:
        return 0.0
    total = 0.0
    location = user.initial_location
    for k in sel:
        target = scenario.task(k).location
        total += distance(location, target)
        location = target
    return total * user.travel_cost_rate


def is_feasible(scenario: MCSScenario, i: int, sel: Sequence[int]) -> bool:
    """시간 창 조건과 자원 예산 조건을 모두 만족하는지"""
    if not schedule_earliest(scenario, i, sel).feasible:
        return False
    return exec_cost(scenario, i, sel) <= scenario.users[i].resource_budget


def profile_feasible(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> bool:
    profile = validate_profile(scenario, profile)
    return all(is_feasible(scenario, i, sel) for i, sel in enumerate(profile))


def is_separable(scenario: MCSScenario) -> bool:
    """
    이동 비용 0, 예산 무제한, 모든 창이 무한이면 순서가 무의미하고
    게임이 과제별로 분리된다.
    """
    return (
        all(t.is_unbounded for t in scenario.tasks)
        and all(u.travel_cost_rate == 0 and u.resource_budget == math.inf for u in scenario.users)
    )


def coverage_counts(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> dict[int, int]:
    """과제별 실행 사용자 수 M_k"""
    counts = {k: 0 for k in scenario.task_ids}
    for sel in profile:
        for k in sel:
            if k not in counts:
                raise UnknownTaskError(f"알 수 없는 과제 ID: {k}")
            counts[k] += 1
    return counts


def _require_feasible(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> MCSProfile:
    profile = validate_profile(scenario, profile)
    for i, sel in enumerate(profile):
        if not is_feasible(scenario, i, sel):
            raise FeasibilityError(f"사용자 {scenario.users[i].id}의 선택 {sel}은 실행 불가능")
    return profile


def reward_share(
    scenario: MCSScenario,
    profile: Sequence[Sequence[int]],
    i: int,
    counts: Optional[dict[int, int]] = None
) -> float:
    """공유 보상 Σ_{k∈s_i} V_k / M_k"""
    counts = counts or coverage_counts(scenario, profile)
    return float(sum(scenario.task(k).reward / counts[k] for k in profile[i]))


def user_payoff(scenario: MCSScenario, profile: Sequence[Sequence[int]], i: int) -> float:
    """사용자 보수 = 공유 보상 - 실행 비용 - 이동 비용"""
    profile = _require_feasible(scenario, profile)
    sel = profile[i]
    return (
        reward_share(scenario, profile, i)
        - exec_cost(scenario, i, sel)
        - travel_cost(scenario, i, sel)
    )


def user_payoffs(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> np.ndarray:
    profile = _require_feasible(scenario, profile)
    counts = coverage_counts(scenario, profile)
    return np.array([
        reward_share(scenario, profile, i, counts)
        - exec_cost(scenario, i, sel)
        - travel_cost(scenario, i, sel)
        for i, sel in enumerate(profile)
    ])


def _total_cost(scenario: MCSScenario, profile: MCSProfile) -> float:
    return sum(
        exec_cost(scenario, i, sel) + travel_cost(scenario, i, sel)
        for i, sel in enumerate(profile)
    )


def potential(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> float:
    """포텐셜 Φ = Σ_k Σ_{m=1}^{M_k} V_k/m - 총 비용"""
    profile = _require_feasible(scenario, profile)
    counts = coverage_counts(scenario, profile)
    rewards = sum(
        scenario.task(k).reward * sum(1.0 / m for m in range(1, count + 1))
        for k, count in counts.items()
    )
    return float(rewards - _total_cost(scenario, profile))


def social_welfare(scenario: MCSScenario, profile: Sequence[Sequence[int]]) -> float:
    """사회 후생 W = Σ_k V_k·1{M_k ≥ 1} - 총 비용"""
    profile = _require_feasible(scenario, profile)
    counts = coverage_counts(scenario, profile)
    rewards = sum(scenario.task(k).reward for k, count in counts.items() if count >= 1)
    return float(rewards - _total_cost(scenario, profile))


def taxed_breakdown(
    scenario: MCSScenario,
    profile: Sequence[Sequence[int]],
    rule: Optional[TaxingRule] = None,
    plan: BudgetPlan = BudgetPlan()
) -> TaxBreakdown:
    """사용자 보수 벡터에 과세 규칙 적용 (기본: 효율 단일 세율, 면세점 0)"""
    rule = rule or efficient_rule(scenario.n_users, plan)
    return taxed_payoffs(user_payoffs(scenario, profile), rule, plan)


def taxed_user_payoff(
    scenario: MCSScenario,
    profile: Sequence[Sequence[int]],
    i: int,
    rule: Optional[TaxingRule] = None,
    plan: BudgetPlan = BudgetPlan()
) -> float:
    """과세 후 보수. 기본 규칙(ρ=(N-1)/N, e=0, β=1)에서는 W/N과 같다."""
    return float(taxed_breakdown(scenario, profile, rule, plan).taxed_payoffs[i])
