"""
과제 선택 게임 솔버
- 정확한 최적 반응 (순서 과제 부분집합 분기한정)
- 최적 반응 동역학 (포텐셜 게임 수렴)
- 전수 탐색 / 과제별 분리 풀이
- 사회적 최적
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from ..config import BRUTE_FORCE_CAP, DEFAULT_TOLERANCE, MAX_BR_ROUNDS, MAX_SUBSET_SIZE
from ..errors import DomainError, EnumerationCapError, SolverSizeError
from .mcs_game import (
    MCSProfile,
    MCSScenario,
    OrderedSelection,
    distance,
    is_separable,
    potential,
    social_welfare,
    taxed_breakdown,
    user_payoffs,
    validate_profile,
)

logger = logging.getLogger(__name__)


class Objective(str, Enum):
    OWN_PAYOFF = "own_payoff"
    SOCIAL_WELFARE = "social_welfare"


class Method(str, Enum):
    BEST_RESPONSE_DYNAMICS = "best_response_dynamics"
    EXHAUSTIVE = "exhaustive"
    SEPARABLE = "separable"


@dataclass
class SolverConfig:
    """솔버 설정"""
    max_subset_size: int = MAX_SUBSET_SIZE  # 분기한정 후보 과제 상한
    max_br_rounds: int = MAX_BR_ROUNDS
    tolerance: float = DEFAULT_TOLERANCE
    brute_force_cap: int = BRUTE_FORCE_CAP  # 전수 탐색 최대 결합 프로필 수
    order_search: bool = True  # False면 과제 ID 오름차순만 탐색 (순서 무관 시나리오)
    method: str = "auto"  # auto, best_response_dynamics, exhaustive
    tie_break: str = "lexicographic"

    def __post_init__(self):
        if min(self.max_subset_size, self.max_br_rounds, self.brute_force_cap) <= 0:
            raise DomainError("솔버 상한은 모두 양수여야 함")
        if self.tolerance <= 0:
            raise DomainError("tolerance는 양수여야 함")
        if self.method not in ("auto", Method.BEST_RESPONSE_DYNAMICS.value, Method.EXHAUSTIVE.value):
            raise DomainError(f"알 수 없는 풀이 방법: {self.method}")


@dataclass
class EquilibriumReport:
    """균형/최적 풀이 결과"""
    profile: MCSProfile
    payoffs: list[float]
    welfare: float
    potential: float
    converged: bool
    rounds: int
    method: Method
    potential_trace: list[float] = field(default_factory=list)
    n_optima: Optional[int] = None  # 전수 탐색에서 찾은 최대화 프로필 수
    taxed_payoffs: Optional[list[float]] = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "profile": [list(sel) for sel in self.profile],
            "payoffs": self.payoffs,
            "welfare": self.welfare,
            "potential": self.potential,
            "converged": self.converged,
            "rounds": self.rounds,
            "method": self.method.value,
            "potential_trace": self.potential_trace,
            "n_optima": self.n_optima,
            "taxed_payoffs": self.taxed_payoffs,
            "warnings": self.warnings,
        }

    def summary_csv(self) -> str:
        """한 줄 CSV 요약: welfare,potential,rounds"""
        return f"{self.welfare!r},{self.potential!r},{self.rounds}"


class MCSSolver:
    """과제 선택 게임 균형/최적 계산기"""

    def __init__(self, scenario: MCSScenario, config: Optional[SolverConfig] = None):
        """
        Args:
            scenario: 과제 선택 게임 인스턴스
            config: 솔버 설정 (기본값: 새로 생성)
        """
        self.scenario = scenario
        self.config = config or SolverConfig()
        self.separable = is_separable(scenario)

    # ------------------------------------------------------------------
    # 최적 반응
    # ------------------------------------------------------------------

    def _others_counts(self, profile: MCSProfile, i: int) -> dict[int, int]:
        counts = {k: 0 for k in self.scenario.task_ids}
        for j, sel in enumerate(profile):
            if j != i:
                for k in sel:
                    counts[k] += 1
        return counts

    def _gains(self, profile: MCSProfile, i: int, objective: Objective) -> dict[int, float]:
        """다른 사용자 선택이 고정일 때 과제별 보상 기여"""
        counts = self._others_counts(profile, i)
        gains = {}
        for k in self.scenario.users[i].available:
            reward = self.scenario.task(k).reward
            if objective == Objective.OWN_PAYOFF:
                gains[k] = reward / (counts[k] + 1)
            else:
                gains[k] = reward if counts[k] == 0 else 0.0
        return gains

    def _selection_value(self, i: int, sel: Sequence[int], gains: dict[int, float]) -> float:
        user = self.scenario.users[i]
        value = 0.0
        location = user.initial_location
        for k in sel:
            task = self.scenario.task(k)
            value += gains[k] - user.available[k].exec_cost
            value -= distance(location, task.location) * user.travel_cost_rate
            location = task.location
        return value

    def _search(self, i: int, gains: dict[int, float]) -> tuple[OrderedSelection, float]:
        """
        분기한정 최적 반응

        순이득(보상 기여 - 실행 비용)이 양수인 과제만 후보가 된다. 과제를 빼면
        이동 거리와 시각은 줄기만 하므로 나머지 선택의 실행 가능성은 유지된다.
        """
        cfg = self.config
        tol = cfg.tolerance
        user = self.scenario.users[i]
        net = {
            k: gains[k] - user.available[k].exec_cost
            for k in sorted(user.available)
            if gains[k] - user.available[k].exec_cost > tol
        }
        candidates = list(net)

        if self.separable:
            return tuple(candidates), float(sum(net.values()))

        if len(candidates) > cfg.max_subset_size:
            raise SolverSizeError(
                f"사용자 {user.id}의 후보 과제 {len(candidates)}개가 상한 {cfg.max_subset_size}을 넘음"
            )

        best_sel: OrderedSelection = ()
        best_value = 0.0

        def extend(seq, used, location, ready, spent, value):
            nonlocal best_sel, best_value
            for k in candidates:
                if k in used or (not cfg.order_search and seq and k <= seq[-1]):
                    continue
                info = user.available[k]
                if spent + info.exec_cost > user.resource_budget:
                    continue
                task = self.scenario.task(k)
                leg = distance(location, task.location)
                start = max(ready + leg / user.speed, task.window_open)
                if start > task.window_close:
                    continue

                child = seq + (k,)
                child_value = value + net[k] - leg * user.travel_cost_rate
                if child_value > best_value + tol:
                    best_sel, best_value = child, child_value

                child_used = used | {k}
                bound = child_value + sum(
                    net[j] for j in candidates
                    if j not in child_used and (cfg.order_search or j > k)
                )
                if bound > best_value + tol:
                    extend(
                        child, child_used, task.location,
                        start + info.exec_time, spent + info.exec_cost, child_value,
                    )

        extend((), frozenset(), user.initial_location, 0.0, 0.0, 0.0)
        return best_sel, best_value

    def best_response(
        self,
        profile: Sequence[Sequence[int]],
        i: int,
        objective: Objective = Objective.OWN_PAYOFF
    ) -> OrderedSelection:
        """
        사용자 i의 정확한 최적 반응

        Args:
            profile: 현재 프로필 (사용자 i의 선택은 무시)
            i: 사용자 인덱스
            objective: 자기 보수 또는 사회 후생

        Returns:
            목적 함수를 최대화하는 실행 가능한 순서 선택 (동률이면 사전식 최소)
        """
        profile = validate_profile(self.scenario, profile)
        selection, _ = self._search(i, self._gains(profile, i, Objective(objective)))
        return selection

    def verify_equilibrium(
        self,
        profile: Sequence[Sequence[int]],
        objective: Objective = Objective.OWN_PAYOFF
    ) -> bool:
        """어떤 사용자도 최적 반응으로 tolerance 넘게 개선할 수 없는지"""
        profile = validate_profile(self.scenario, profile)
        for i, sel in enumerate(profile):
            gains = self._gains(profile, i, objective)
            current = self._selection_value(i, sel, gains)
            _, best = self._search(i, gains)
            if best > current + self.config.tolerance:
                return False
        return True

    # ------------------------------------------------------------------
    # 동역학 / 전수 탐색 / 분리 풀이
    # ------------------------------------------------------------------

    def _dynamics(self, objective: Objective) -> tuple[MCSProfile, bool, int, list[float]]:
        """빈 프로필에서 시작하는 라운드 로빈 최적 반응 동역학"""
        profile = list(self.scenario.empty_profile())
        score = potential if objective == Objective.OWN_PAYOFF else social_welfare
        trace = [score(self.scenario, profile)]

        for round_index in range(self.config.max_br_rounds):
            changed = False
            for i in range(self.scenario.n_users):
                gains = self._gains(tuple(profile), i, objective)
                current = self._selection_value(i, profile[i], gains)
                selection, value = self._search(i, gains)
                if value > current + self.config.tolerance:
                    profile[i] = selection
                    changed = True
                    trace.append(score(self.scenario, profile))
                    logger.debug(
                        "[BRD] 라운드 %d 사용자 %d → %s (%.6g)",
                        round_index + 1, i, selection, trace[-1],
                    )
            if not changed:
                return tuple(profile), True, round_index, trace

        logger.warning("[BRD] %d 라운드 안에 수렴하지 않음", self.config.max_br_rounds)
        return tuple(profile), False, self.config.max_br_rounds, trace

    def feasible_selections(self, i: int) -> list[OrderedSelection]:
        """사용자 i의 모든 실행 가능한 순서 선택 (사전식 정렬, 빈 선택 포함)"""
        user = self.scenario.users[i]
        tasks = sorted(user.available)
        found: list[OrderedSelection] = [()]

        def extend(seq, location, ready, spent):
            for k in tasks:
                if k in seq or (not self.config.order_search and seq and k <= seq[-1]):
                    continue
                info = user.available[k]
                if spent + info.exec_cost > user.resource_budget:
                    continue
                task = self.scenario.task(k)
                start = max(ready + distance(location, task.location) / user.speed, task.window_open)
                if start > task.window_close:
                    continue
                child = seq + (k,)
                found.append(child)
                if len(found) > self.config.brute_force_cap:
                    raise EnumerationCapError(
                        f"사용자 {user.id}의 실행 가능한 선택 수가 상한 {self.config.brute_force_cap:,}을 넘음"
                    )
                extend(child, task.location, start + info.exec_time, spent + info.exec_cost)

        extend((), user.initial_location, 0.0, 0.0)
        return found

    def joint_profile_count(self) -> int:
        """전수 탐색 결합 프로필 수 (상한 초과 시 EnumerationCapError)"""
        total = 1
        for i in range(self.scenario.n_users):
            total *= len(self.feasible_selections(i))
            if total > self.config.brute_force_cap:
                raise EnumerationCapError(
                    f"결합 프로필 수가 상한 {self.config.brute_force_cap:,}을 넘음"
                )
        return total

    def _within_cap(self) -> bool:
        try:
            self.joint_profile_count()
        except EnumerationCapError:
            return False
        return True

    def _exhaustive(self, objective: Objective) -> tuple[MCSProfile, int]:
        """Φ 또는 W를 모든 결합 프로필에서 최대화 (사전식 최소 최대화 프로필, 최대화 수)"""
        self.joint_profile_count()
        tol = self.config.tolerance
        options = []
        for i in range(self.scenario.n_users):
            user = self.scenario.users[i]
            zero = {k: 0.0 for k in user.available}
            options.append([(sel, -self._selection_value(i, sel, zero)) for sel in self.feasible_selections(i)])

        rewards = {task.id: task.reward for task in self.scenario.tasks}
        harmonic = [0.0]
        for m in range(1, self.scenario.n_users + 1):
            harmonic.append(harmonic[-1] + 1.0 / m)

        best_profile, best_value, n_optima = None, -math.inf, 0
        for combo in itertools.product(*options):
            counts: dict[int, int] = {}
            cost = 0.0
            for sel, sel_cost in combo:
                cost += sel_cost
                for k in sel:
                    counts[k] = counts.get(k, 0) + 1
            if objective == Objective.OWN_PAYOFF:
                value = sum(rewards[k] * harmonic[m] for k, m in counts.items()) - cost
            else:
                value = sum(rewards[k] for k in counts) - cost

            if value > best_value + tol:
                best_profile = tuple(sel for sel, _ in combo)
                best_value, n_optima = value, 1
            elif abs(value - best_value) <= tol:
                n_optima += 1

        return best_profile, n_optima

    def _separable(self, objective: Objective) -> MCSProfile:
        """
        과제별 분리 풀이

        NE: 비용이 낮은 순서로 M명이 수행, M은 Σ_{m≤M}(V/m - c_(m))의 최대화 값 (Φ 최대화)
        SE: 최저 비용 사용자 한 명이 V > c_(1)일 때만 수행 (W 최대화)
        """
        tol = self.config.tolerance
        chosen: list[list[int]] = [[] for _ in self.scenario.users]
        for task in self.scenario.tasks:
            bidders = sorted(
                (user.available[task.id].exec_cost, i)
                for i, user in enumerate(self.scenario.users)
                if task.id in user.available
            )
            if objective == Objective.SOCIAL_WELFARE:
                bidders = bidders[:1]
            best_m, best_value, value = 0, 0.0, 0.0
            for m, (cost, _) in enumerate(bidders, start=1):
                share = task.reward / m if objective == Objective.OWN_PAYOFF else task.reward
                value += share - cost
                if value > best_value + tol:
                    best_m, best_value = m, value
            for _, i in bidders[:best_m]:
                chosen[i].append(task.id)
        return tuple(tuple(sorted(sel)) for sel in chosen)

    # ------------------------------------------------------------------
    # 공개 API
    # ------------------------------------------------------------------

    def _report(
        self,
        profile: MCSProfile,
        converged: bool,
        rounds: int,
        method: Method,
        trace: Optional[list[float]] = None,
        n_optima: Optional[int] = None,
        warnings: Optional[list[str]] = None,
        taxed: bool = False
    ) -> EquilibriumReport:
        report = EquilibriumReport(
            profile=profile,
            payoffs=[float(x) for x in user_payoffs(self.scenario, profile)],
            welfare=social_welfare(self.scenario, profile),
            potential=potential(self.scenario, profile),
            converged=converged,
            rounds=rounds,
            method=method,
            potential_trace=trace or [],
            n_optima=n_optima,
            warnings=warnings or [],
        )
        if taxed:
            report.taxed_payoffs = [float(x) for x in taxed_breakdown(self.scenario, profile).taxed_payoffs]
        return report

    def _solve(self, objective: Objective) -> EquilibriumReport:
        method = self.config.method
        warnings: list[str] = []
        taxed = objective == Objective.SOCIAL_WELFARE

        if method == "auto" and self.separable:
            profile = self._separable(objective)
            converged = self.verify_equilibrium(profile, objective)
            return self._report(profile, converged, 0, Method.SEPARABLE, taxed=taxed)

        # 사회 후생은 단일 사용자 개선만으로 전역 최적에 닿지 않을 수 있어 전수 탐색을 우선한다
        if method == Method.EXHAUSTIVE.value or (
            method == "auto" and objective == Objective.SOCIAL_WELFARE and self._within_cap()
        ):
            profile, n_optima = self._exhaustive(objective)
            return self._report(profile, True, 0, Method.EXHAUSTIVE, n_optima=n_optima, taxed=taxed)

        profile, converged, rounds, trace = self._dynamics(objective)
        if converged and not self.verify_equilibrium(profile, objective):
            converged = False
            warnings.append("최적 반응 검증 실패: tolerance 설정을 확인할 것")

        if not converged:
            if self._within_cap():
                warnings.append("최적 반응 동역학 미수렴: 전수 탐색으로 대체함")
                logger.warning("[BRD] 미수렴, 전수 탐색으로 대체")
                profile, n_optima = self._exhaustive(objective)
                return self._report(
                    profile, True, rounds, Method.EXHAUSTIVE,
                    trace=trace, n_optima=n_optima, warnings=warnings, taxed=taxed,
                )
            warnings.append("최적 반응 동역학 미수렴")
        elif objective == Objective.SOCIAL_WELFARE:
            warnings.append("전수 탐색 상한 초과: 국소 최적(단일 사용자 이탈 없음)만 보장")

        return self._report(
            profile, converged, rounds, Method.BEST_RESPONSE_DYNAMICS,
            trace=trace, warnings=warnings, taxed=taxed,
        )

    def nash_equilibrium(self) -> EquilibriumReport:
        """
        내쉬 균형

        빈 프로필에서 자기 보수 최적 반응 동역학을 돌린다. 개선 단계마다 Φ가
        엄격히 증가하므로 유한 라운드 안에 수렴한다.
        """
        return self._solve(Objective.OWN_PAYOFF)

    def social_optimum(self) -> EquilibriumReport:
        """
        사회적 최적

        과세 게임(ũ_i = W/N)의 최적 반응 동역학과 같은 갱신을 쓰며,
        상한 안이면 전수 탐색으로 전역 최적을 구한다.
        """
        return self._solve(Objective.SOCIAL_WELFARE)


def best_response(
    scenario: MCSScenario,
    profile: Sequence[Sequence[int]],
    i: int,
    objective: Objective = Objective.OWN_PAYOFF,
    config: Optional[SolverConfig] = None
) -> OrderedSelection:
    return MCSSolver(scenario, config).best_response(profile, i, objective)


def nash_equilibrium(scenario: MCSScenario, config: Optional[SolverConfig] = None) -> EquilibriumReport:
    return MCSSolver(scenario, config).nash_equilibrium()


def social_optimum(scenario: MCSScenario, config: Optional[SolverConfig] = None) -> EquilibriumReport:
    return MCSSolver(scenario, config).social_optimum()
