"""
과세 메커니즘 서비스
- 소득세 (면세점, 세율)
- 세수 재분배 (예산 계수 β)
- 과세 후 보수 변환
- 효율적 단일 세율
- 공정성(면세점) 설계
"""

from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Union

import numpy as np

from ..config import DEFAULT_TOLERANCE
from ..errors import DimensionError, DomainError

PayoffVector = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class TaxingRule:
    """과세 규칙: 플레이어별 면세점 e_i, 세율 r_i"""
    exemptions: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        exemptions = tuple(float(x) for x in self.exemptions)
        rates = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "exemptions", exemptions)
        object.__setattr__(self, "rates", rates)

        if len(exemptions) != len(rates):
            raise DimensionError(
                f"면세점 {len(exemptions)}개와 세율 {len(rates)}개의 길이가 다름"
            )
        if len(rates) < 2:
            raise DomainError(f"플레이어 수는 2 이상이어야 함 (N={len(rates)})")
        if not all(np.isfinite(exemptions)) or not all(np.isfinite(rates)):
            raise DomainError("면세점과 세율은 모두 유한해야 함")
        if any(r < 0.0 or r > 1.0 for r in rates):
            raise DomainError(f"세율은 [0, 1] 범위여야 함: {rates}")

    @property
    def n_players(self) -> int:
        return len(self.rates)

    @property
    def is_flat(self) -> bool:
        return max(self.rates) - min(self.rates) <= DEFAULT_TOLERANCE

    @classmethod
    def flat(
        cls,
        n_players: int,
        rate: float,
        exemptions: Optional[Sequence[float]] = None
    ) -> "TaxingRule":
        """모든 플레이어에게 같은 세율을 적용하는 규칙"""
        if exemptions is None:
            exemptions = [0.0] * n_players
        return cls(exemptions=tuple(exemptions), rates=(rate,) * n_players)

    def to_dict(self) -> dict:
        return {"exemptions": list(self.exemptions), "rates": list(self.rates)}


@dataclass(frozen=True)
class BudgetPlan:
    """예산 계획: 재분배 세수 / 징수 세수 비율 β"""
    beta: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise DomainError(f"예산 계수 β는 양수여야 함 (β={self.beta})")

    @property
    def is_balanced(self) -> bool:
        """β = 1 (엄격한 예산 균형)"""
        return abs(self.beta - 1.0) <= DEFAULT_TOLERANCE


@dataclass
class TaxBreakdown:
    """과세 결과 내역"""
    taxes: np.ndarray  # 플레이어별 세금 (음수 = 보조금)
    redistributed_income: np.ndarray  # 다른 플레이어 세금에서 받는 재분배 수입
    taxed_payoffs: np.ndarray  # 과세 후 보수
    platform_net: float  # 플랫폼 순수입 (음수 = 보조금 지출)

    def to_dict(self) -> dict:
        return {
            "taxes": self.taxes.tolist(),
            "redistributed_income": self.redistributed_income.tolist(),
            "taxed_payoffs": self.taxed_payoffs.tolist(),
            "platform_net": float(self.platform_net),
        }


@dataclass(frozen=True)
class MechanismConstants:
    """단일 세율 폐형식에 쓰이는 상수들"""
    a: float  # β/(N-1)
    b: tuple[float, ...]  # e_i - a·Σ_{j≠i} e_j
    c: float  # β/(N-1+β)
    delta: float  # Σ e_i


class TaxableGame(Protocol):
    """보수 텐서를 변환할 수 있는 게임"""
    n_players: int

    def map_payoffs(self, transform: Callable[[np.ndarray], np.ndarray]): ...


def _as_vector(values: PayoffVector, name: str = "payoffs") -> np.ndarray:
    vec = np.asarray(values, dtype=float)
    if vec.ndim != 1:
        raise DimensionError(f"{name}는 1차원 벡터여야 함 (shape={vec.shape})")
    if not np.all(np.isfinite(vec)):
        raise DomainError(f"{name}에 유한하지 않은 값이 있음")
    return vec


def _check_players(n_players: int):
    if n_players < 2:
        raise DomainError(f"플레이어 수는 2 이상이어야 함 (N={n_players})")


def income_tax(payoffs: PayoffVector, rule: TaxingRule) -> np.ndarray:
    """
    소득세 t_i = (u_i - e_i)·r_i

    보수가 면세점보다 작으면 음수(보조금)가 된다.
    """
    u = _as_vector(payoffs)
    if u.size != rule.n_players:
        raise DimensionError(
            f"보수 벡터 길이 {u.size}와 과세 규칙 플레이어 수 {rule.n_players}가 다름"
        )
    return (u - np.asarray(rule.exemptions)) * np.asarray(rule.rates)


def redistribute(taxes: PayoffVector, plan: BudgetPlan) -> np.ndarray:
    """
    세수 재분배 δ_i = β/(N-1) · Σ_{j≠i} t_j
    """
    t = _as_vector(taxes, "taxes")
    _check_players(t.size)
    return plan.beta / (t.size - 1) * (t.sum() - t)


def taxed_payoffs(
    payoffs: PayoffVector,
    rule: TaxingRule,
    plan: BudgetPlan
) -> TaxBreakdown:
    """
    과세 후 보수 ũ_i = u_i - t_i + δ_i

    Args:
        payoffs: 원래 보수 벡터
        rule: 과세 규칙
        plan: 예산 계획

    Returns:
        세금, 재분배 수입, 과세 후 보수, 플랫폼 순수입
    """
    u = _as_vector(payoffs)
    taxes = income_tax(u, rule)
    income = redistribute(taxes, plan)
    return TaxBreakdown(
        taxes=taxes,
        redistributed_income=income,
        taxed_payoffs=u - taxes + income,
        platform_net=float((1.0 - plan.beta) * taxes.sum()),
    )


def taxed_payoff_array(
    payoffs: np.ndarray,
    rule: TaxingRule,
    plan: BudgetPlan
) -> np.ndarray:
    """마지막 축이 플레이어인 보수 배열 전체에 과세 변환을 적용"""
    u = np.asarray(payoffs, dtype=float)
    if u.shape[-1] != rule.n_players:
        raise DimensionError(
            f"보수 배열 플레이어 축 {u.shape[-1]}와 과세 규칙 {rule.n_players}가 다름"
        )
    taxes = (u - np.asarray(rule.exemptions)) * np.asarray(rule.rates)
    income = plan.beta / (rule.n_players - 1) * (taxes.sum(axis=-1, keepdims=True) - taxes)
    return u - taxes + income


def mechanism_constants(rule: TaxingRule, plan: BudgetPlan) -> MechanismConstants:
    """a, b_i, c, Δ 계산"""
    n = rule.n_players
    e = np.asarray(rule.exemptions)
    a = plan.beta / (n - 1)
    b = e - a * (e.sum() - e)
    return MechanismConstants(
        a=a,
        b=tuple(float(x) for x in b),
        c=plan.beta / (n - 1 + plan.beta),
        delta=float(e.sum()),
    )


def flat_rate_payoffs(
    payoffs: PayoffVector,
    rate: float,
    exemptions: Sequence[float],
    plan: BudgetPlan
) -> np.ndarray:
    """
    단일 세율 폐형식: (1-ρ)u_i + ρ·a·Σ_{j≠i} u_j + ρ·b_i

    taxed_payoffs와 독립적으로 계산되므로 교차 검증에 쓴다.
    """
    u = _as_vector(payoffs)
    rule = TaxingRule.flat(u.size, rate, exemptions)
    const = mechanism_constants(rule, plan)
    return (1.0 - rate) * u + rate * const.a * (u.sum() - u) + rate * np.asarray(const.b)


def efficient_flat_rate(n_players: int, plan: BudgetPlan = BudgetPlan()) -> float:
    """
    효율적 단일 세율 ρ = (N-1)/(N-1+β)

    면세점과 무관하게 과세 게임의 균형을 사회적 최적으로 만든다.
    """
    _check_players(n_players)
    return (n_players - 1) / (n_players - 1 + plan.beta)


def efficient_rule(
    n_players: int,
    plan: BudgetPlan = BudgetPlan(),
    exemptions: Optional[Sequence[float]] = None
) -> TaxingRule:
    """효율적 단일 세율과 주어진 면세점(기본 0)으로 과세 규칙 생성"""
    return TaxingRule.flat(n_players, efficient_flat_rate(n_players, plan), exemptions)


def is_efficient_rule(
    rule: TaxingRule,
    plan: BudgetPlan,
    tolerance: float = DEFAULT_TOLERANCE
) -> bool:
    target = efficient_flat_rate(rule.n_players, plan)
    return all(abs(r - target) <= tolerance for r in rule.rates)


def maxmin_exemptions(n_players: int, omega: float = 0.0) -> tuple[float, ...]:
    """
    최대-최소 공정성 면세점: 모두 ω로 동일

    효율적 세율과 함께 쓰면 균형에서 모든 플레이어가 W̄/N을 받는다 (β = 1).
    """
    _check_players(n_players)
    return (float(omega),) * n_players


def equilibrium_payoffs(
    max_welfare: float,
    rule: TaxingRule,
    plan: BudgetPlan
) -> np.ndarray:
    """효율 균형에서의 과세 후 보수 c·W̄ - c·Δ + e_i"""
    const = mechanism_constants(rule, plan)
    return const.c * max_welfare - const.c * const.delta + np.asarray(rule.exemptions)


def exemptions_for_shares(
    targets: PayoffVector,
    max_welfare: float,
    plan: BudgetPlan = BudgetPlan(),
    tolerance: float = 1e-9
) -> tuple[float, ...]:
    """
    원하는 균형 보수 분배를 만드는 면세점 역산

    Args:
        targets: 효율 균형에서 각 플레이어가 받을 보수
        max_welfare: 최대 사회 후생 W̄
        plan: 예산 계획

    Returns:
        면세점 벡터 (β = 1이면 Δ = 0으로 정규화)
    """
    t = _as_vector(targets, "targets")
    n = t.size
    _check_players(n)
    c = plan.beta / (n - 1 + plan.beta)
    slack = 1.0 - n * c

    if plan.is_balanced:
        if abs(t.sum() - max_welfare) > tolerance * max(1.0, abs(max_welfare)):
            raise DomainError(
                f"예산 균형(β=1)에서는 목표 보수 합 {t.sum()}이 W̄={max_welfare}와 같아야 함"
            )
        delta = 0.0
    else:
        delta = (t.sum() - n * c * max_welfare) / slack

    return tuple(float(x) for x in t - c * max_welfare + c * delta)


def proportional_exemptions(
    weights: PayoffVector,
    max_welfare: float,
    plan: BudgetPlan = BudgetPlan()
) -> tuple[float, ...]:
    """가중치 비율대로 W̄를 나누는 면세점 (가중치가 모두 같으면 최대-최소 공정성)"""
    w = _as_vector(weights, "weights")
    if np.any(w <= 0):
        raise DomainError("가중치는 모두 양수여야 함")
    return exemptions_for_shares(w / w.sum() * max_welfare, max_welfare, plan)


def apply_taxation(game, rule: TaxingRule, plan: BudgetPlan):
    """
    게임의 과세 버전 생성

    전략 집합은 그대로 두고 모든 프로필의 보수를 과세 후 보수로 바꾼다.

    Args:
        game: map_payoffs()를 가진 게임 또는 프로필 → 보수 벡터 함수
        rule: 과세 규칙
        plan: 예산 계획

    Returns:
        같은 형태의 과세 게임
    """
    if hasattr(game, "map_payoffs"):
        if game.n_players != rule.n_players:
            raise DimensionError(
                f"게임 플레이어 수 {game.n_players}와 과세 규칙 {rule.n_players}가 다름"
            )
        return game.map_payoffs(lambda u: taxed_payoff_array(u, rule, plan))

    if callable(game):
        def taxed_game(profile):
            return taxed_payoffs(game(profile), rule, plan).taxed_payoffs
        return taxed_game

    raise TypeError(f"과세할 수 없는 게임 타입: {type(game).__name__}")
