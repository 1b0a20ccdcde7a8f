"""
채널 선택 게임 (다중 채널 무선 접속)
- 샤논 용량 보수
- 워터필링 최적 반응
- 반복 워터필링 내쉬 균형
- 다중 시작 사영 경사 상승 사회적 최적
- 과세 균형 (후생 정렬)
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from ..config import (
    BINARY_SCAN_MAX_USERS,
    DEFAULT_LOG_BASE,
    IWF_MAX_ROUNDS,
    IWF_TOLERANCE,
    MULTISTART_RESTARTS,
    PGA_MAX_ITERS,
    PGA_TOLERANCE,
    POWER_THRESHOLD,
    SPEND_TOLERANCE,
)
from ..errors import DimensionError, ScenarioError
from .mechanism import BudgetPlan, TaxBreakdown, TaxingRule, efficient_rule, taxed_payoffs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelSpec:
    """채널: 대역폭 B_k, 잡음 전력 σ_k"""
    id: int
    bandwidth: float
    noise: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ScenarioError(f"channels[{self.id}].bandwidth", "> 0")
        if not self.noise > 0:
            raise ScenarioError(f"channels[{self.id}].noise", "> 0")


@dataclass(frozen=True)
class MCWAUser:
    """사용자: 전력 예산 P_i, 사용 가능 채널 S_i"""
    id: int
    power_budget: float
    available: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "available", frozenset(int(k) for k in self.available))
        if not self.power_budget > 0:
            raise ScenarioError(f"users[{self.id}].power_budget", "> 0")


@dataclass(frozen=True, eq=False)
class MCWAScenario:
    """
    채널 선택 게임 인스턴스

    gains[j, i, k]는 채널 k에서 송신자 i가 수신자 j(사용자 j의 링크)에 주는 이득이다.
    gains[i, i, k]가 직접 링크 이득.
    """
    users: tuple[MCWAUser, ...]
    channels: tuple[ChannelSpec, ...]
    gains: np.ndarray
    log_base: float = DEFAULT_LOG_BASE

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "channels", tuple(self.channels))
        gains = np.array(self.gains, dtype=float)
        object.__setattr__(self, "gains", gains)

        n, k = len(self.users), len(self.channels)
        if gains.shape != (n, n, k):
            raise ScenarioError("gains", f"shape ({n}, {n}, {k})", f"실제 {gains.shape}")
        if not np.all(np.isfinite(gains)) or np.any(gains < 0):
            raise ScenarioError("gains", ">= 0 and finite")
        if not self.log_base > 1:
            raise ScenarioError("log_base", "> 1")

        positions = {ch.id: idx for idx, ch in enumerate(self.channels)}
        if len(positions) != k:
            raise ScenarioError("channels.id", "unique")
        mask = np.zeros((n, k), dtype=bool)
        for i, user in enumerate(self.users):
            for ch in user.available:
                if ch not in positions:
                    raise ScenarioError(f"users[{user.id}].available", "known channel id")
                mask[i, positions[ch]] = True
            if np.any(gains[i, i, mask[i]] <= 0):
                raise ScenarioError(f"gains[{i}][{i}]", "> 0 on available channels")
        object.__setattr__(self, "_mask", mask)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def mask(self) -> np.ndarray:
        """사용 가능 채널 마스크 (N, K)"""
        return self._mask

    @property
    def bandwidth(self) -> np.ndarray:
        return np.array([ch.bandwidth for ch in self.channels])

    @property
    def noise(self) -> np.ndarray:
        return np.array([ch.noise for ch in self.channels])

    @property
    def budgets(self) -> np.ndarray:
        return np.array([user.power_budget for user in self.users])


@dataclass
class PowerAllocation:
    """사용자별 채널별 송신 전력 (N, K)"""
    power: np.ndarray

    def selection(self, i: int, threshold: float = POWER_THRESHOLD) -> tuple[int, ...]:
        """양의 전력을 쓰는 채널 인덱스"""
        return tuple(int(k) for k in np.flatnonzero(self.power[i] > threshold))

    def spend(self, i: int) -> float:
        return float(self.power[i].sum())

    def to_dict(self) -> dict:
        return {"power": self.power.tolist()}


@dataclass
class WaterFillResult:
    """워터필링 결과"""
    power: np.ndarray  # (K,)
    lam: float  # 예산 제약 라그랑주 승수 λ
    water_level: float  # 1/λ
    interference: np.ndarray  # I_i(k)
    selection: tuple[int, ...]


@dataclass
class IWFResult:
    """반복 워터필링 결과"""
    allocation: PowerAllocation
    converged: bool
    rounds: int
    amplitude: float  # 마지막 라운드의 최대 전력 변화


@dataclass
class SocialOptimumResult:
    """사회적 최적 탐색 결과 (exact=False면 찾은 것 중 최선)"""
    allocation: PowerAllocation
    welfare: float
    exact: bool
    starts: int
    warnings: list[str] = field(default_factory=list)


@dataclass
class TaxedEquilibrium:
    """과세 게임의 효율 균형"""
    allocation: PowerAllocation
    welfare: float
    capacities: np.ndarray
    taxed_payoffs: np.ndarray
    breakdown: TaxBreakdown
    exact: bool
    warnings: list[str] = field(default_factory=list)


def _power_array(scenario: MCWAScenario, alloc) -> np.ndarray:
    power = np.asarray(alloc.power if isinstance(alloc, PowerAllocation) else alloc, dtype=float)
    if power.shape != (scenario.n_users, scenario.n_channels):
        raise DimensionError(
            f"전력 배열 shape {power.shape}이 ({scenario.n_users}, {scenario.n_channels})와 다름"
        )
    return power


def _all_interference(scenario: MCWAScenario, power: np.ndarray) -> np.ndarray:
    """I[j, k] = σ_k + Σ_{i≠j} g[j, i, k]·p_i(k)"""
    total = np.einsum("jik,ik->jk", scenario.gains, power)
    direct = np.einsum("jjk->jk", scenario.gains) * power
    return scenario.noise[None, :] + total - direct


def interference(scenario: MCWAScenario, alloc, i: int) -> np.ndarray:
    """사용자 i가 채널별로 겪는 잡음 + 간섭 전력 I_i(k)"""
    return _all_interference(scenario, _power_array(scenario, alloc))[i]


def capacities(scenario: MCWAScenario, alloc) -> np.ndarray:
    """모든 사용자의 용량 Σ_k B_k·log(1 + g_ii p_i / I_i)"""
    power = _power_array(scenario, alloc)
    sinr = np.einsum("jjk->jk", scenario.gains) * power / _all_interference(scenario, power)
    rate = scenario.bandwidth[None, :] * np.log1p(sinr) / math.log(scenario.log_base)
    return np.where(scenario.mask, rate, 0.0).sum(axis=1)


def user_capacity(scenario: MCWAScenario, alloc, i: int) -> float:
    """사용자 i의 보수 (샤논 용량)"""
    return float(capacities(scenario, alloc)[i])


def social_welfare(scenario: MCWAScenario, alloc) -> float:
    return float(capacities(scenario, alloc).sum())


def capacity_gradient(scenario: MCWAScenario, alloc, i: int) -> np.ndarray:
    """자기 전력에 대한 용량 편미분 B_k·g_ii/(I + g_ii·p) / ln(base)"""
    power = _power_array(scenario, alloc)
    own = scenario.gains[i, i]
    noise_plus = interference(scenario, power, i)
    grad = scenario.bandwidth * own / (noise_plus + own * power[i]) / math.log(scenario.log_base)
    return np.where(scenario.mask[i], grad, 0.0)


def welfare_gradient(scenario: MCWAScenario, alloc) -> np.ndarray:
    """사회 후생의 전력 편미분: 자기 용량 증가분 + 다른 사용자 용량 감소분"""
    power = _power_array(scenario, alloc)
    gains = scenario.gains
    direct_gain = np.einsum("jjk->jk", gains)
    noise_plus = _all_interference(scenario, power)
    signal = direct_gain * power
    bandwidth = scenario.bandwidth[None, :]

    own = bandwidth * direct_gain / (noise_plus + signal)
    factor = bandwidth * signal / (noise_plus * (noise_plus + signal))
    cross = np.einsum("jk,jik->ik", factor, gains) - factor * direct_gain
    grad = (own - cross) / math.log(scenario.log_base)
    return np.where(scenario.mask, grad, 0.0)


def kkt_residual(scenario: MCWAScenario, alloc, i: int, threshold: float = POWER_THRESHOLD) -> float:
    """
    워터필링 KKT 상대 잔차

    활성 채널의 한계 용량 B_k·g_ii/(I + g_ii·p)는 모두 λ와 같고,
    비활성 채널은 λ 이하여야 한다.
    """
    power = _power_array(scenario, alloc)
    idx = np.flatnonzero(scenario.mask[i])
    if idx.size == 0:
        return 0.0
    own = scenario.gains[i, i, idx]
    marginal = scenario.bandwidth[idx] * own / (interference(scenario, power, i)[idx] + own * power[i, idx])
    active = power[i, idx] > threshold
    if not np.any(active):
        return math.inf
    lam = float(np.mean(marginal[active]))
    residual = np.abs(marginal[active] - lam).max()
    if np.any(~active):
        residual = max(residual, float(np.maximum(marginal[~active] - lam, 0.0).max()))
    return float(residual / lam)


def water_fill(scenario: MCWAScenario, i: int, noise_plus: Sequence[float]) -> WaterFillResult:
    """
    워터필링 최적 반응

    p(k) = [B_k/λ - I(k)/g_ii(k)]⁺, 전체 전력 합이 P_i가 되도록 수위 1/λ를 구한다.

    Args:
        scenario: 채널 선택 게임
        i: 사용자 인덱스
        noise_plus: 채널별 잡음 + 간섭 I(k) (> 0)

    Returns:
        전력 행, λ, 수위, 선택 채널
    """
    noise_plus = np.asarray(noise_plus, dtype=float)
    power = np.zeros(scenario.n_channels)
    idx = np.flatnonzero(scenario.mask[i])
    if idx.size == 0:
        return WaterFillResult(power, math.inf, 0.0, noise_plus, ())

    budget = scenario.users[i].power_budget
    bandwidth = scenario.bandwidth[idx]
    floor = noise_plus[idx] / scenario.gains[i, i, idx]

    def spend(level: float) -> float:
        return float(np.maximum(bandwidth * level - floor, 0.0).sum())

    # 채널 하나만으로도 예산을 다 쓰는 수위에서 시작해 반올림으로 부호가 안 바뀌면 넓힌다
    upper = float(((budget + floor) / bandwidth).max())
    while spend(upper) < budget:
        upper *= 2.0
    level = brentq(lambda x: spend(x) - budget, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    # 활성 집합이 정해지면 수위는 닫힌 형식으로 다시 계산한다
    active = bandwidth * level - floor > 0
    exact = (budget + floor[active].sum()) / bandwidth[active].sum()
    if abs(spend(exact) - budget) <= abs(spend(level) - budget):
        level = exact
    if abs(spend(level) - budget) > SPEND_TOLERANCE * max(1.0, budget):
        logger.warning("[WF] 사용자 %d 예산 잔차 %.3g", i, spend(level) - budget)

    power[idx] = np.maximum(bandwidth * level - floor, 0.0)
    selection = tuple(int(k) for k in np.flatnonzero(power > POWER_THRESHOLD))
    return WaterFillResult(power, 1.0 / level, level, noise_plus, selection)


def iterative_water_filling(
    scenario: MCWAScenario,
    max_rounds: int = IWF_MAX_ROUNDS,
    tolerance: float = IWF_TOLERANCE,
    damping: float = 0.0,
    initial: Optional[np.ndarray] = None
) -> IWFResult:
    """
    반복 워터필링 (가우스-자이델 순서)

    사용자 순서대로 현재 간섭에 대한 워터필링으로 갱신한다. 한 라운드의 최대 전력
    변화가 tolerance 미만이면 수렴. rounds는 고정점에 닿기까지 변화가 있었던 라운드 수.
    """
    power = np.zeros((scenario.n_users, scenario.n_channels)) if initial is None else np.array(initial, dtype=float)
    amplitude = math.inf

    for round_index in range(max_rounds):
        amplitude = 0.0
        for i in range(scenario.n_users):
            result = water_fill(scenario, i, interference(scenario, power, i))
            updated = (1.0 - damping) * result.power + damping * power[i]
            amplitude = max(amplitude, float(np.abs(updated - power[i]).max(initial=0.0)))
            power[i] = updated
        if amplitude < tolerance:
            logger.debug("[IWF] %d 라운드 후 수렴", round_index)
            return IWFResult(PowerAllocation(power), True, round_index, amplitude)

    logger.warning("[IWF] %d 라운드 미수렴 (진폭 %.3g)", max_rounds, amplitude)
    return IWFResult(PowerAllocation(power), False, max_rounds, amplitude)


def project_budget(x: np.ndarray, budget: float) -> np.ndarray:
    """{p ≥ 0, Σp ≤ P}로의 유클리드 사영"""
    clipped = np.maximum(x, 0.0)
    if clipped.sum() <= budget:
        return clipped
    u = np.sort(x)[::-1]
    cumulative = np.cumsum(u) - budget
    ranks = np.arange(1, x.size + 1)
    rho = np.flatnonzero(u - cumulative / ranks > 0)[-1]
    theta = cumulative[rho] / (rho + 1)
    return np.maximum(x - theta, 0.0)


def _project(scenario: MCWAScenario, power: np.ndarray) -> np.ndarray:
    projected = np.zeros_like(power)
    for i, user in enumerate(scenario.users):
        idx = np.flatnonzero(scenario.mask[i])
        if idx.size:
            projected[i, idx] = project_budget(power[i, idx], user.power_budget)
    return projected


def _gradient_ascent(
    scenario: MCWAScenario,
    start: np.ndarray,
    max_iters: int,
    tolerance: float
) -> np.ndarray:
    """아르미호 백트래킹 사영 경사 상승"""
    power = _project(scenario, start)
    value = social_welfare(scenario, power)
    step = float(scenario.budgets.max())

    for _ in range(max_iters):
        grad = welfare_gradient(scenario, power)
        scale = max(float(np.abs(grad).max()), 1e-12)
        while step > 1e-14:
            candidate = _project(scenario, power + step / scale * grad)
            gain = social_welfare(scenario, candidate)
            if gain >= value + 1e-4 * float((grad * (candidate - power)).sum()):
                break
            step /= 2.0
        else:
            break

        moved = float(np.abs(candidate - power).max())
        power, value = candidate, gain
        step = min(step * 2.0, float(scenario.budgets.max()))
        if moved < tolerance:
            break

    return power


def _binary_corners(scenario: MCWAScenario):
    """단일 채널에서 각 사용자가 0 또는 전체 예산을 쓰는 모든 조합"""
    budgets = scenario.budgets
    for pattern in itertools.product((0.0, 1.0), repeat=scenario.n_users):
        yield (np.array(pattern) * budgets)[:, None] * scenario.mask


def social_optimum(
    scenario: MCWAScenario,
    restarts: int = MULTISTART_RESTARTS,
    max_iters: int = PGA_MAX_ITERS,
    tolerance: float = PGA_TOLERANCE,
    seed: int = 0
) -> SocialOptimumResult:
    """
    사회적 최적 (비볼록, 다중 시작 휴리스틱)

    무작위 실행 가능 시작점, 반복 워터필링 점, 단일 사용자 전체 전력 코너에서
    사영 경사 상승을 돌려 가장 좋은 국소 최적을 고른다. 단일 채널에서는 0/전체
    전력 조합도 모두 평가하며, 2인 단일 채널이면 이 조합 탐색이 정확한 최적이다.
    """
    rng = np.random.default_rng(seed)
    n, k = scenario.n_users, scenario.n_channels
    budgets = scenario.budgets

    starts = [iterative_water_filling(scenario).allocation.power]
    for i in range(n):
        corner = np.zeros((n, k))
        corner[i] = water_fill(scenario, i, scenario.noise).power
        starts.append(corner)
    for _ in range(restarts):
        raw = rng.random((n, k)) * scenario.mask
        totals = raw.sum(axis=1, keepdims=True)
        fill = rng.random((n, 1))
        starts.append(np.where(totals > 0, raw / np.where(totals > 0, totals, 1.0), 0.0) * budgets[:, None] * fill)

    best_power = np.zeros((n, k))
    best_value = social_welfare(scenario, best_power)
    for start in starts:
        refined = _gradient_ascent(scenario, start, max_iters, tolerance)
        value = social_welfare(scenario, refined)
        if value > best_value:
            best_power, best_value = refined, value

    exact = False
    warnings = []
    if k == 1 and n <= BINARY_SCAN_MAX_USERS:
        for corner in _binary_corners(scenario):
            value = social_welfare(scenario, corner)
            if value > best_value:
                best_power, best_value = corner, value
        exact = n <= 2
    if not exact:
        warnings.append("비볼록 목적 함수: 다중 시작 탐색의 최선값이며 전역 최적은 보장하지 않음")

    logger.debug("[PGA] 시작점 %d개, 최선 후생 %.6g", len(starts), best_value)
    return SocialOptimumResult(
        allocation=PowerAllocation(best_power),
        welfare=float(best_value),
        exact=exact,
        starts=len(starts),
        warnings=warnings,
    )


def taxed_equilibrium(
    scenario: MCWAScenario,
    rule: Optional[TaxingRule] = None,
    plan: BudgetPlan = BudgetPlan(),
    restarts: int = MULTISTART_RESTARTS,
    seed: int = 0
) -> TaxedEquilibrium:
    """
    과세 게임의 효율 균형

    효율 단일 세율(기본 e=0, β=1)에서 과세 후 보수는 W/N이므로 사회적 최적 배분이
    과세 게임의 균형이 된다.
    """
    rule = rule or efficient_rule(scenario.n_users, plan)
    optimum = social_optimum(scenario, restarts=restarts, seed=seed)
    caps = capacities(scenario, optimum.allocation)
    breakdown = taxed_payoffs(caps, rule, plan)
    return TaxedEquilibrium(
        allocation=optimum.allocation,
        welfare=optimum.welfare,
        capacities=caps,
        taxed_payoffs=breakdown.taxed_payoffs,
        breakdown=breakdown,
        exact=optimum.exact,
        warnings=optimum.warnings,
    )
