"""
시뮬레이션 서비스
- 과제 선택 게임 NE/SE 사회 후생 비교 실험
- CSV 출력 (결정적)
- 예제 재현 (죄수의 딜레마, 과제 선택 1과제 예제, 채널 선택 예제)
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from tqdm import tqdm

from ..config import MCS_EXAMPLE_PATH, MCWA_EXAMPLE_PATH, PD_FIXTURE_PATH, SIM_CSV_COLUMNS
from ..errors import TaxGameError
from ..providers.generator import SimConfig, generate_mcs, trial_seed
from ..providers.scenario import load_scenario
from .mcs_solver import MCSSolver, SolverConfig
from .mcwa_game import capacities, iterative_water_filling, social_welfare, taxed_equilibrium
from .mechanism import BudgetPlan, apply_taxation, efficient_flat_rate, efficient_rule, taxed_payoffs
from .normal_form import FiniteGame, payoff_table, prisoners_dilemma, pure_nash, social_optima

logger = logging.getLogger(__name__)


@dataclass
class SimTrial:
    """시행 1회 결과 (CSV 한 행)"""
    reward_level: float
    n_users: int
    trial: int
    ne_welfare: float
    se_welfare: float
    gain: float
    failed: bool = False

    def to_row(self) -> dict:
        return {
            "reward_level": repr(self.reward_level),
            "n_users": self.n_users,
            "trial": self.trial,
            "ne_welfare": repr(self.ne_welfare),
            "se_welfare": repr(self.se_welfare),
            "gain": "failed" if self.failed else repr(self.gain),
        }


@dataclass
class SimCell:
    """(보상 수준, 사용자 수) 셀 집계"""
    reward_level: float
    n_users: int
    trials: int
    failed: int
    mean_ne: float
    mean_se: float
    gain: float  # (평균 SE - 평균 NE) / 평균 NE
    ne_normalized: float = math.nan
    se_normalized: float = math.nan

    def to_dict(self) -> dict:
        return {
            "reward_level": self.reward_level,
            "n_users": self.n_users,
            "trials": self.trials,
            "failed": self.failed,
            "mean_ne": self.mean_ne,
            "mean_se": self.mean_se,
            "gain": self.gain,
            "ne_normalized": self.ne_normalized,
            "se_normalized": self.se_normalized,
        }


@dataclass
class SimResult:
    """시뮬레이션 전체 결과"""
    config: SimConfig
    cells: list[SimCell] = field(default_factory=list)
    rows: list[SimTrial] = field(default_factory=list)

    def cell(self, reward_level: float, n_users: int) -> SimCell:
        for c in self.cells:
            if c.n_users == n_users and math.isclose(c.reward_level, reward_level):
                return c
        raise KeyError((reward_level, n_users))

    def series(self, reward_level: float, attr: str = "mean_ne") -> list[float]:
        """보상 수준 하나에서 사용자 수 순서대로 본 셀 값"""
        return [getattr(self.cell(reward_level, n), attr) for n in self.config.user_counts]

    def mean_gain(self, n_users: int) -> float:
        """사용자 수 고정, 보상 수준 평균 이득 비율"""
        gains = [self.cell(v, n_users).gain for v in self.config.reward_levels]
        gains = [g for g in gains if math.isfinite(g)]
        return math.fsum(gains) / len(gains) if gains else math.nan


def welfare_gain(ne_welfare: float, se_welfare: float) -> float:
    """
    사회 후생 이득 비율 (SE - NE) / NE

    둘 다 0이면 0, NE만 0이면 NaN.
    """
    if ne_welfare == 0.0:
        return 0.0 if se_welfare == 0.0 else math.nan
    return (se_welfare - ne_welfare) / ne_welfare


def run_trial(sim_config: SimConfig, reward_level: float, n_users: int, trial: int) -> SimTrial:
    """시행 1회: 시나리오 생성 후 NE와 SE 사회 후생 계산"""
    scenario = generate_mcs(sim_config, reward_level, n_users, trial_seed(sim_config.seed, reward_level, n_users, trial))
    try:
        # 열린 시간창 + 이동 비용 0이면 순서가 보수에 영향이 없다
        solver = MCSSolver(scenario, SolverConfig(order_search=False))
        ne = solver.nash_equilibrium().welfare
        se = solver.social_optimum().welfare
    except TaxGameError as e:
        logger.warning("[SIM] V=%.2f N=%d trial=%d 실패: %s", reward_level, n_users, trial, e)
        return SimTrial(reward_level, n_users, trial, math.nan, math.nan, math.nan, failed=True)
    return SimTrial(reward_level, n_users, trial, ne, se, welfare_gain(ne, se))


def _aggregate(reward_level: float, n_users: int, trials: list[SimTrial]) -> SimCell:
    ok = [t for t in trials if not t.failed]
    if not ok:
        return SimCell(reward_level, n_users, len(trials), len(trials), math.nan, math.nan, math.nan)
    mean_ne = math.fsum(t.ne_welfare for t in ok) / len(ok)
    mean_se = math.fsum(t.se_welfare for t in ok) / len(ok)
    return SimCell(
        reward_level=reward_level,
        n_users=n_users,
        trials=len(trials),
        failed=len(trials) - len(ok),
        mean_ne=mean_ne,
        mean_se=mean_se,
        gain=welfare_gain(mean_ne, mean_se),
    )


def run_simulation(sim_config: Optional[SimConfig] = None, progress: bool = False) -> SimResult:
    """
    NE/SE 사회 후생 비교 실험

    Args:
        sim_config: 시뮬레이션 설정 (기본값: config 상수)
        progress: tqdm 진행 표시 여부

    Returns:
        셀 집계와 시행별 행을 담은 SimResult
    """
    sim_config = sim_config or SimConfig()
    result = SimResult(config=sim_config)
    cells = [(v, n) for v in sim_config.reward_levels for n in sim_config.user_counts]

    for reward_level, n_users in tqdm(cells, desc="simulation", disable=not progress):
        trials = [
            run_trial(sim_config, reward_level, n_users, trial)
            for trial in range(sim_config.trials_per_cell)
        ]
        result.rows.extend(trials)
        cell = _aggregate(reward_level, n_users, trials)
        result.cells.append(cell)
        logger.debug(
            "[SIM] V=%.2f N=%d NE=%.4f SE=%.4f gain=%.3f",
            reward_level, n_users, cell.mean_ne, cell.mean_se, cell.gain,
        )

    # 같은 보상 수준의 최대 SE 평균으로 정규화
    for reward_level in sim_config.reward_levels:
        group = [c for c in result.cells if c.reward_level == reward_level]
        peak = max((c.mean_se for c in group if math.isfinite(c.mean_se)), default=math.nan)
        for c in group:
            if peak and math.isfinite(peak):
                c.ne_normalized = c.mean_ne / peak
                c.se_normalized = c.mean_se / peak

    failed = sum(c.failed for c in result.cells)
    if failed:
        logger.warning("[SIM] 실패한 시행 %d건", failed)
    return result


def to_csv_string(result: SimResult) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=SIM_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(row.to_row() for row in result.rows)
    return buffer.getvalue()


def write_csv(result: SimResult, path: Union[str, Path]) -> Path:
    """시행별 행을 CSV로 저장 (같은 시드/설정이면 바이트 단위로 같다)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(to_csv_string(result))
    logger.info("[SIM] CSV 저장: %s (%d행)", path, len(result.rows))
    return path


# ----------------------------------------------------------------------
# 예제 재현
# ----------------------------------------------------------------------

def _labels(game: FiniteGame, profiles) -> list[list[str]]:
    return [list(game.label(p)) for p in profiles]


def reproduce_pd(game: Optional[FiniteGame] = None) -> dict:
    """
    죄수의 딜레마 과세 예제 재현

    원래 게임의 NE/SE, 효율 세율(ρ=0.5) 과세 게임 보수표, 면세점 (0,0)과 (0,1)
    두 경우의 과세 게임 균형을 계산한다.
    """
    if game is None:
        game = load_scenario(PD_FIXTURE_PATH).body if PD_FIXTURE_PATH.exists() else prisoners_dilemma()
    plan = BudgetPlan()
    rate = efficient_flat_rate(game.n_players, plan)
    original_ne = pure_nash(game)
    optima = social_optima(game)

    variants = []
    for exemptions in ((0.0,) * game.n_players, (0.0,) + (1.0,) * (game.n_players - 1)):
        rule = efficient_rule(game.n_players, plan, exemptions)
        taxed = apply_taxation(game, rule, plan)
        taxed_ne = pure_nash(taxed)
        variants.append({
            "exemptions": list(exemptions),
            "table": payoff_table(taxed) if game.n_players == 2 else None,
            "nash": taxed_ne.to_dict(taxed),
            "nash_is_efficient": taxed_ne.as_set() <= optima.as_set() and len(taxed_ne) > 0,
        })

    return {
        "rate": rate,
        "original": {
            "table": payoff_table(game) if game.n_players == 2 else None,
            "nash": original_ne.to_dict(game),
            "social_optima": optima.to_dict(game),
        },
        "taxed": variants,
        "ne_shift": {
            "from": _labels(game, original_ne.profiles),
            "to": _labels(game, pure_nash(apply_taxation(game, efficient_rule(game.n_players, plan), plan)).profiles),
        },
    }


def reproduce_mcs_example(path: Union[str, Path] = MCS_EXAMPLE_PATH) -> dict:
    """
    1과제 2사용자 과제 선택 예제 재현 (V=10, 비용 4.8/4.9)

    NE에서는 둘 다 과제를 수행해 후생 0.3, SE에서는 한 명만 수행해 후생 5.2.
    효율 세율에서 각 사용자는 2.6을 받는다.
    """
    scenario = load_scenario(path).body
    solver = MCSSolver(scenario)
    ne = solver.nash_equilibrium()
    se = solver.social_optimum()
    return {
        "nash": ne.to_dict(),
        "social_optimum": se.to_dict(),
        "ne_welfare": ne.welfare,
        "se_welfare": se.welfare,
        "welfare_drop": welfare_gain(ne.welfare, se.welfare),
        "taxed_payoffs": se.taxed_payoffs,
    }


def reproduce_mcwa_example(path: Union[str, Path] = MCWA_EXAMPLE_PATH, seed: int = 0) -> dict:
    """
    2사용자 1채널 채널 선택 예제 재현

    NE(반복 워터필링)는 둘 다 전체 전력, SE는 한 명만 전체 전력을 쓴다.
    """
    scenario = load_scenario(path).body
    iwf = iterative_water_filling(scenario)
    ne_caps = capacities(scenario, iwf.allocation)
    taxed = taxed_equilibrium(scenario, seed=seed)
    return {
        "nash": {
            "power": iwf.allocation.power.tolist(),
            "capacities": ne_caps.tolist(),
            "welfare": social_welfare(scenario, iwf.allocation),
            "converged": iwf.converged,
            "rounds": iwf.rounds,
        },
        "social_optimum": {
            "power": taxed.allocation.power.tolist(),
            "capacities": taxed.capacities.tolist(),
            "welfare": taxed.welfare,
            "exact": taxed.exact,
        },
        "taxed_payoffs": taxed.taxed_payoffs.tolist(),
        "ne_taxed_payoffs": taxed_payoffs(ne_caps, efficient_rule(scenario.n_users), BudgetPlan()).taxed_payoffs.tolist(),
        "warnings": taxed.warnings,
    }


def summarize_sweep(result: SimResult, out_dir: Optional[Union[str, Path]] = None) -> dict:
    """셀 요약 dict, out_dir이 있으면 시행별 CSV도 저장"""
    sim_config = result.config
    summary = {
        "seed": sim_config.seed,
        "trials_per_cell": sim_config.trials_per_cell,
        "cells": [c.to_dict() for c in result.cells],
        "mean_gain": {str(n): result.mean_gain(n) for n in sim_config.user_counts},
        "csv": None,
    }
    if out_dir is not None:
        summary["csv"] = str(write_csv(result, Path(out_dir) / "welfare_sweep.csv"))
    return summary


def reproduce_welfare_sweep(
    sim_config: Optional[SimConfig] = None,
    out_dir: Optional[Union[str, Path]] = None,
    progress: bool = False
) -> dict:
    """과제 선택 시뮬레이션 재현: 셀 요약과 (선택) CSV 경로"""
    return summarize_sweep(run_simulation(sim_config, progress=progress), out_dir)
