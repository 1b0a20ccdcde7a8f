"""
정적 게임 과세 메커니즘 서비스 모듈
"""

from .mechanism import BudgetPlan, TaxBreakdown, TaxingRule, apply_taxation, efficient_flat_rate, taxed_payoffs
from .normal_form import FiniteGame, ProfileSet, prisoners_dilemma, pure_nash, social_optima
from .mcs_game import MCSScenario, MCSUser, Task, TaskCost
from .mcs_solver import EquilibriumReport, MCSSolver, SolverConfig
from .mcwa_game import ChannelSpec, MCWAScenario, MCWAUser, PowerAllocation

__all__ = [
    "BudgetPlan",
    "TaxBreakdown",
    "TaxingRule",
    "apply_taxation",
    "efficient_flat_rate",
    "taxed_payoffs",
    "FiniteGame",
    "ProfileSet",
    "prisoners_dilemma",
    "pure_nash",
    "social_optima",
    "MCSScenario",
    "MCSUser",
    "Task",
    "TaskCost",
    "EquilibriumReport",
    "MCSSolver",
    "SolverConfig",
    "ChannelSpec",
    "MCWAScenario",
    "MCWAUser",
    "PowerAllocation",
]
