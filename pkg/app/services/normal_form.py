"""
정규형 유한 게임 서비스
- 순수 전략 내쉬 균형 전수 탐색
- 사회적 최적(SE) 전수 탐색
- 죄수의 딜레마 예제
- 비효율 반례 탐색 (단일 세율 필요성 확인용)
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from ..config import DEFAULT_TOLERANCE, ENUMERATION_CAP
from ..errors import DimensionError, DomainError, EnumerationCapError
from .mechanism import BudgetPlan, TaxingRule, apply_taxation

logger = logging.getLogger(__name__)

Profile = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class FiniteGame:
    """유한 정규형 게임: 보수 텐서의 shape은 (전략 수..., 플레이어 수)"""
    payoffs: np.ndarray
    strategy_labels: Optional[tuple[tuple[str, ...], ...]] = None

    def __post_init__(self):
        payoffs = np.array(self.payoffs, dtype=float)
        object.__setattr__(self, "payoffs", payoffs)

        if payoffs.ndim < 3:
            raise DomainError(f"플레이어 수는 2 이상이어야 함 (shape={payoffs.shape})")
        n_players = payoffs.ndim - 1
        if payoffs.shape[-1] != n_players:
            raise DimensionError(
                f"보수 텐서 마지막 축 {payoffs.shape[-1]}이 플레이어 수 {n_players}와 다름"
            )
        if any(count < 1 for count in payoffs.shape[:-1]):
            raise DomainError("각 플레이어의 전략 수는 1 이상이어야 함")
        if not np.all(np.isfinite(payoffs)):
            raise DomainError("보수 텐서에 유한하지 않은 값이 있음")

        if self.strategy_labels is not None:
            labels = tuple(tuple(str(x) for x in row) for row in self.strategy_labels)
            if tuple(len(row) for row in labels) != self.strategy_counts:
                raise DimensionError("전략 라벨 수가 전략 수와 다름")
            object.__setattr__(self, "strategy_labels", labels)

    @property
    def n_players(self) -> int:
        return self.payoffs.ndim - 1

    @property
    def strategy_counts(self) -> tuple[int, ...]:
        return tuple(self.payoffs.shape[:-1])

    @property
    def n_profiles(self) -> int:
        return int(np.prod(self.strategy_counts))

    def payoff_vector(self, profile: Sequence[int]) -> np.ndarray:
        return self.payoffs[tuple(profile)].copy()

    def payoff(self, profile: Sequence[int], player: int) -> float:
        return float(self.payoffs[tuple(profile)][player])

    def welfare(self, profile: Sequence[int]) -> float:
        """사회 후생 W(s) = Σ_i u_i(s)"""
        return float(self.payoffs[tuple(profile)].sum())

    def welfare_tensor(self) -> np.ndarray:
        return self.payoffs.sum(axis=-1)

    def profiles(self) -> Iterator[Profile]:
        """사전식 순서의 모든 프로필"""
        for index in np.ndindex(*self.strategy_counts):
            yield tuple(int(x) for x in index)

    def label(self, profile: Sequence[int]) -> tuple[str, ...]:
        if self.strategy_labels is None:
            return tuple(str(s) for s in profile)
        return tuple(self.strategy_labels[i][s] for i, s in enumerate(profile))

    def map_payoffs(self, transform: Callable[[np.ndarray], np.ndarray]) -> "FiniteGame":
        """전략 집합은 유지하고 보수 텐서만 변환한 새 게임"""
        return FiniteGame(payoffs=transform(self.payoffs), strategy_labels=self.strategy_labels)


@dataclass
class ProfileSet:
    """균형/최적 프로필 집합 (사전식 정렬)"""
    profiles: list[Profile] = field(default_factory=list)
    welfare: list[float] = field(default_factory=list)
    payoffs: list[tuple[float, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.profiles)

    def __contains__(self, profile) -> bool:
        return tuple(profile) in self.profiles

    def as_set(self) -> set[Profile]:
        return set(self.profiles)

    def to_dict(self, game: Optional[FiniteGame] = None) -> dict:
        entries = []
        for profile, w, u in zip(self.profiles, self.welfare, self.payoffs):
            entry = {"profile": list(profile), "payoffs": list(u), "welfare": w}
            if game is not None and game.strategy_labels is not None:
                entry["labels"] = list(game.label(profile))
            entries.append(entry)
        return {"count": len(self.profiles), "profiles": entries}


def _check_cap(game: FiniteGame, cap: int):
    if game.n_profiles > cap:
        raise EnumerationCapError(
            f"프로필 수 {game.n_profiles:,}가 전수 탐색 상한 {cap:,}을 넘음"
        )


def _collect(game: FiniteGame, mask: np.ndarray) -> ProfileSet:
    result = ProfileSet()
    welfare = game.welfare_tensor()
    # argwhere는 C 순서(사전식)로 반환한다
    for index in np.argwhere(mask):
        profile = tuple(int(x) for x in index)
        result.profiles.append(profile)
        result.welfare.append(float(welfare[profile]))
        result.payoffs.append(tuple(float(x) for x in game.payoffs[profile]))
    return result


def pure_nash(
    game: FiniteGame,
    tolerance: float = DEFAULT_TOLERANCE,
    cap: int = ENUMERATION_CAP
) -> ProfileSet:
    """
    순수 전략 내쉬 균형 전수 탐색

    어떤 플레이어도 일방적 이탈로 보수를 tolerance 넘게 올릴 수 없는 프로필.
    약한 부등식이므로 동률 최적 반응도 균형으로 인정한다.
    """
    _check_cap(game, cap)
    mask = np.ones(game.strategy_counts, dtype=bool)
    for player in range(game.n_players):
        own = game.payoffs[..., player]
        best = own.max(axis=player, keepdims=True)
        mask &= own >= best - tolerance
    return _collect(game, mask)


def social_optima(
    game: FiniteGame,
    tolerance: float = DEFAULT_TOLERANCE,
    cap: int = ENUMERATION_CAP
) -> ProfileSet:
    """사회 후생을 최대화하는 모든 프로필"""
    _check_cap(game, cap)
    welfare = game.welfare_tensor()
    return _collect(game, welfare >= welfare.max() - tolerance)


def prisoners_dilemma() -> FiniteGame:
    """죄수의 딜레마: (C,C)=(2,2), (C,D)=(0,3), (D,C)=(3,0), (D,D)=(1,1)"""
    payoffs = np.array([
        [[2.0, 2.0], [0.0, 3.0]],
        [[3.0, 0.0], [1.0, 1.0]],
    ])
    return FiniteGame(payoffs=payoffs, strategy_labels=(("C", "D"), ("C", "D")))


def payoff_table(game: FiniteGame) -> list[list[tuple[float, ...]]]:
    """2인 게임 보수표: rows[s1][s2] = (u_1, u_2)"""
    if game.n_players != 2:
        raise DimensionError(f"보수표는 2인 게임만 지원 (N={game.n_players})")
    rows, cols = game.strategy_counts
    return [
        [tuple(float(x) for x in game.payoffs[r, c]) for c in range(cols)]
        for r in range(rows)
    ]


def random_game(rng: np.random.Generator, strategy_counts: Sequence[int]) -> FiniteGame:
    """[0, 1) 균등 보수의 무작위 게임"""
    counts = tuple(int(c) for c in strategy_counts)
    return FiniteGame(payoffs=rng.random(counts + (len(counts),)))


def find_inefficiency_witness(
    rate: float,
    rng: np.random.Generator,
    plan: BudgetPlan = BudgetPlan(),
    max_tries: int = 20_000,
    strategy_counts: Sequence[int] = (2, 2),
    tolerance: float = DEFAULT_TOLERANCE
) -> Optional[FiniteGame]:
    """
    주어진 단일 세율로 과세해도 효율적이지 않은 게임 탐색

    과세 게임의 내쉬 균형이 존재하고 그중 어느 것도 원래 게임의 SE가 아닌
    무작위 게임을 찾는다.

    Returns:
        반례 게임 또는 None (max_tries 안에 못 찾은 경우)
    """
    rule = TaxingRule.flat(len(strategy_counts), rate)
    for attempt in range(max_tries):
        game = random_game(rng, strategy_counts)
        taxed = apply_taxation(game, rule, plan)
        equilibria = pure_nash(taxed, tolerance)
        if not equilibria.profiles:
            continue
        optima = social_optima(game, tolerance).as_set()
        if optima.isdisjoint(equilibria.profiles):
            logger.debug("[NF] ρ=%.3f 반례 발견 (시도 %d회)", rate, attempt + 1)
            return game

    logger.warning("[NF] ρ=%.3f 반례를 %d회 안에 찾지 못함", rate, max_tries)
    return None
