"""
taxgame - 정적 게임 과세 메커니즘
명령행 진입점 (python -m app)
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from dotenv import load_dotenv

# .env 로드
load_dotenv()

from app.config import (
    APP_TITLE,
    DEFAULT_TOLERANCE,
    MAX_BR_ROUNDS,
    PD_FIXTURE_PATH,
    SIM_REWARD_LEVELS,
    SIM_SEED,
    SIM_TRIALS,
    SIM_USER_COUNTS,
)
from app.errors import DimensionError, DomainError, ScenarioError, TaxGameError
from app.providers.generator import MCSGenerator, MCWAGenerator, SimConfig
from app.providers.scenario import ScenarioFile, dumps_scenario, load_scenario, save_scenario
from app.services.mcs_game import taxed_breakdown, user_payoffs
from app.services.mcs_solver import MCSSolver, SolverConfig
from app.services.mcwa_game import (
    capacities,
    iterative_water_filling,
    social_optimum as mcwa_social_optimum,
    social_welfare as mcwa_social_welfare,
    taxed_equilibrium,
)
from app.services.mechanism import (
    BudgetPlan,
    TaxingRule,
    apply_taxation,
    efficient_flat_rate,
    is_efficient_rule,
    taxed_payoffs,
)
from app.services.normal_form import pure_nash, social_optima
from app.services.simulation import (
    reproduce_mcs_example,
    reproduce_mcwa_example,
    reproduce_pd,
    run_simulation,
    summarize_sweep,
    to_csv_string,
)
from app.utils.report import (
    format_mcs_example,
    format_mcwa_example,
    format_pd_report,
    format_sweep,
    to_csv,
    to_json,
)

logger = logging.getLogger("app.main")

INEFFICIENT_RULE_WARNING = "효율 단일 세율이 아님: 과세 게임 균형이 사회적 최적이라는 보장이 없음"


# ========================================
# 공통 도우미
# ========================================

def _rule_from_args(args, n_players: int) -> tuple[TaxingRule, BudgetPlan]:
    """--rate/--exemptions/--beta → 과세 규칙 (기본: 효율 단일 세율, 면세점 0)"""
    plan = BudgetPlan(beta=args.beta)
    rate = efficient_flat_rate(n_players, plan) if args.rate is None else args.rate
    exemptions = args.exemptions if args.exemptions is not None else [0.0] * n_players
    return TaxingRule.flat(n_players, rate, exemptions), plan


def _rule_summary(rule: TaxingRule, plan: BudgetPlan) -> dict:
    return {**rule.to_dict(), "beta": plan.beta, "efficient": is_efficient_rule(rule, plan)}


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise DomainError(f"{what}: 정수 목록이 아님 ({text!r})") from None


def parse_profile(kind: str, text: str, body) -> object:
    """
    --profile 문자열 해석

    - normal_form: "0,1" (플레이어별 전략 인덱스)
    - mcs: "1,2;3" (사용자는 ';', 과제는 ',' 로 구분, 빈 선택은 빈 칸)
    - mcwa: "2;0.5,1.5" (사용자는 ';', 채널별 전력은 ',' 로 구분)
    """
    if kind == "normal_form":
        profile = _parse_ints(text, "profile")
        if len(profile) != body.n_players:
            raise DimensionError(f"프로필 길이 {len(profile)}가 플레이어 수 {body.n_players}와 다름")
        for s, count in zip(profile, body.strategy_counts):
            if not 0 <= s < count:
                raise DomainError(f"전략 인덱스 {s}가 범위 [0, {count}) 밖임")
        return tuple(profile)

    parts = text.split(";")
    if len(parts) != body.n_users:
        raise DimensionError(f"프로필 사용자 수 {len(parts)}가 {body.n_users}와 다름")
    if kind == "mcs":
        return tuple(tuple(_parse_ints(part, "profile")) for part in parts)

    try:
        power = np.array([[float(tok) for tok in part.split(",")] for part in parts])
    except ValueError:
        raise DomainError(f"profile: 전력 행렬이 아님 ({text!r})") from None
    if power.shape != (body.n_users, body.n_channels):
        raise DimensionError(f"전력 행렬 shape {power.shape}가 ({body.n_users}, {body.n_channels})와 다름")
    return power


def profile_payoffs(kind: str, body, profile) -> np.ndarray:
    if kind == "normal_form":
        return body.payoff_vector(profile)
    if kind == "mcs":
        return user_payoffs(body, profile)
    return capacities(body, profile)


def _emit(args, data: dict, rows: Optional[Sequence[dict]] = None, text: Optional[str] = None):
    fmt = args.format or ("text" if text is not None else "json")
    if fmt == "csv" and rows is not None:
        sys.stdout.write(to_csv(rows))
    elif fmt == "text" and text is not None:
        print(text)
    else:
        print(to_json(data))


def _write_out(args, name: str, data: dict):
    if args.out is None:
        return
    path = Path(args.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(data) + "\n", encoding="utf-8")
    logger.info("[IO] %s 저장", path)


# ========================================
# solve
# ========================================

def _solve_normal_form(args, game) -> tuple[dict, list[dict]]:
    ne = pure_nash(game, args.tolerance)
    optima = social_optima(game, args.tolerance)
    data = {"kind": "normal_form", "nash": ne.to_dict(game), "social_optima": optima.to_dict(game)}
    rows = [
        {"solution": name, "profile": list(p), "welfare": w}
        for name, found in (("nash", ne), ("social_optimum", optima))
        for p, w in zip(found.profiles, found.welfare)
    ]

    if args.taxed:
        rule, plan = _rule_from_args(args, game.n_players)
        taxed_game = apply_taxation(game, rule, plan)
        taxed_ne = pure_nash(taxed_game, args.tolerance)
        data["taxed"] = {
            "rule": _rule_summary(rule, plan),
            "nash": taxed_ne.to_dict(taxed_game),
            "nash_is_efficient": len(taxed_ne) > 0 and taxed_ne.as_set() <= optima.as_set(),
        }
        rows += [
            {"solution": "taxed_nash", "profile": list(p), "welfare": game.welfare(p)}
            for p in taxed_ne.profiles
        ]
    return data, rows


def _solve_mcs(args, scenario) -> tuple[dict, list[dict]]:
    solver = MCSSolver(scenario, SolverConfig(tolerance=args.tolerance, max_br_rounds=args.max_rounds))
    ne = solver.nash_equilibrium()
    optimum = solver.social_optimum()
    data = {"kind": "mcs", "nash": ne.to_dict(), "social_optimum": optimum.to_dict()}

    if args.taxed:
        rule, plan = _rule_from_args(args, scenario.n_users)
        breakdown = taxed_breakdown(scenario, optimum.profile, rule, plan)
        warnings = [] if is_efficient_rule(rule, plan) else [INEFFICIENT_RULE_WARNING]
        data["taxed"] = {"rule": _rule_summary(rule, plan), **breakdown.to_dict(), "warnings": warnings}

    rows = [
        {"solution": name, "welfare": report.welfare, "potential": report.potential,
         "rounds": report.rounds, "converged": report.converged, "method": report.method.value}
        for name, report in (("nash", ne), ("social_optimum", optimum))
    ]
    return data, rows


def _solve_mcwa(args, scenario) -> tuple[dict, list[dict]]:
    iwf = iterative_water_filling(scenario, max_rounds=args.max_rounds, tolerance=args.tolerance)
    seed = 0 if args.seed is None else args.seed
    optimum = mcwa_social_optimum(scenario, seed=seed)
    nash = {
        **iwf.allocation.to_dict(),
        "capacities": capacities(scenario, iwf.allocation).tolist(),
        "welfare": mcwa_social_welfare(scenario, iwf.allocation),
        "converged": iwf.converged,
        "rounds": iwf.rounds,
        "amplitude": iwf.amplitude,
    }
    data = {
        "kind": "mcwa",
        "nash": nash,
        "social_optimum": {
            **optimum.allocation.to_dict(),
            "capacities": capacities(scenario, optimum.allocation).tolist(),
            "welfare": optimum.welfare,
            "exact": optimum.exact,
            "warnings": optimum.warnings,
        },
    }

    if args.taxed:
        rule, plan = _rule_from_args(args, scenario.n_users)
        taxed = taxed_equilibrium(scenario, rule, plan, seed=seed)
        warnings = list(taxed.warnings)
        if not is_efficient_rule(rule, plan):
            warnings.append(INEFFICIENT_RULE_WARNING)
        data["taxed"] = {"rule": _rule_summary(rule, plan), **taxed.breakdown.to_dict(), "warnings": warnings}

    rows = [
        {"solution": "nash", "welfare": nash["welfare"], "converged": iwf.converged, "rounds": iwf.rounds},
        {"solution": "social_optimum", "welfare": optimum.welfare, "converged": True, "rounds": 0},
    ]
    return data, rows


def cmd_solve(args) -> int:
    scenario_file = load_scenario(args.scenario)
    solvers = {"normal_form": _solve_normal_form, "mcs": _solve_mcs, "mcwa": _solve_mcwa}
    data, rows = solvers[scenario_file.kind](args, scenario_file.body)
    _emit(args, data, rows)
    return 0


# ========================================
# tax
# ========================================

def cmd_tax(args) -> int:
    scenario_file = load_scenario(args.scenario)
    kind, body = scenario_file.kind, scenario_file.body
    profile = parse_profile(kind, args.profile, body)
    payoffs = profile_payoffs(kind, body, profile)

    rule, plan = _rule_from_args(args, len(payoffs))
    breakdown = taxed_payoffs(payoffs, rule, plan)
    data = {"kind": kind, "profile": args.profile, "payoffs": payoffs, "rule": _rule_summary(rule, plan),
            **breakdown.to_dict()}
    rows = [
        {"player": i + 1, "payoff": float(u), "tax": float(t), "redistributed": float(d), "taxed_payoff": float(v)}
        for i, (u, t, d, v) in enumerate(zip(
            payoffs, breakdown.taxes, breakdown.redistributed_income, breakdown.taxed_payoffs
        ))
    ]
    _emit(args, data, rows)
    return 0


# ========================================
# reproduce
# ========================================

def cmd_reproduce(args) -> int:
    seed = SIM_SEED if args.seed is None else args.seed

    if args.example == "pd":
        game = load_scenario(PD_FIXTURE_PATH).body
        summary = reproduce_pd(game)
        labels = game.strategy_labels or tuple(
            tuple(str(s) for s in range(count)) for count in game.strategy_counts
        )
        _write_out(args, "pd.json", summary)
        _emit(args, summary, text=format_pd_report(summary, labels[0], labels[1]))
    elif args.example == "mcs-example":
        summary = reproduce_mcs_example()
        _write_out(args, "mcs_example.json", summary)
        _emit(args, summary, text=format_mcs_example(summary))
    elif args.example == "mcwa-example":
        summary = reproduce_mcwa_example(seed=0 if args.seed is None else args.seed)
        _write_out(args, "mcwa_example.json", summary)
        _emit(args, summary, text=format_mcwa_example(summary))
    else:
        config = SimConfig(
            user_counts=tuple(args.users or SIM_USER_COUNTS),
            reward_levels=tuple(args.reward_level or SIM_REWARD_LEVELS),
            trials_per_cell=args.trials or SIM_TRIALS,
            seed=seed,
        )
        result = run_simulation(config, progress=sys.stderr.isatty())
        summary = summarize_sweep(result, out_dir=args.out)
        if args.format == "csv":
            # 시행별 행, 컬럼 순서 고정
            sys.stdout.write(to_csv_string(result))
        else:
            _emit(args, summary, text=format_sweep(summary))
    return 0


# ========================================
# generate
# ========================================

def cmd_generate(args) -> int:
    seed = SIM_SEED if args.seed is None else args.seed
    n_users = args.users[0] if args.users else None

    if args.kind == "mcs":
        reward_level = args.reward_level[0] if args.reward_level else 1.0
        n_users = n_users or 4
        generator = MCSGenerator(config=SimConfig(seed=seed), reward_level=reward_level)
        description = f"무작위 과제 선택 게임 (V={reward_level:g}, N={n_users})"
    else:
        n_users = n_users or 2
        generator = MCWAGenerator(n_channels=args.channels, cross_scale=args.cross_scale)
        description = f"무작위 채널 선택 게임 (N={n_users}, K={args.channels})"

    body = generator.generate(seed, n_users)
    scenario_file = ScenarioFile(kind=generator.kind, body=body, meta={"seed": seed, "description": description})
    if args.out:
        save_scenario(scenario_file, args.out)
    else:
        sys.stdout.write(dumps_scenario(scenario_file))
    return 0


# ========================================
# 파서
# ========================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="수치 허용 오차")
    common.add_argument("--max-rounds", type=int, default=MAX_BR_ROUNDS, help="최적 반응/워터필링 최대 라운드")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None, help="출력 형식")
    common.add_argument("--seed", type=int, default=None, help="난수 시드")
    common.add_argument("--verbose", "-v", action="store_true", help="DEBUG 로그 출력")

    rule = argparse.ArgumentParser(add_help=False)
    rule.add_argument("--rate", type=float, default=None, help="단일 세율 (기본: 효율 세율)")
    rule.add_argument("--exemptions", type=float, nargs="+", default=None, help="플레이어별 면세점")
    rule.add_argument("--beta", type=float, default=1.0, help="예산 계수 β")

    parser = argparse.ArgumentParser(prog="python -m app", description=APP_TITLE)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common, rule], help="균형과 사회적 최적 계산")
    solve.add_argument("scenario", help="시나리오 JSON 경로")
    solve.add_argument("--taxed", action="store_true", help="과세 게임 결과 포함")
    solve.set_defaults(handler=cmd_solve)

    tax = sub.add_parser("tax", parents=[common, rule], help="주어진 프로필의 과세 내역")
    tax.add_argument("scenario", help="시나리오 JSON 경로")
    tax.add_argument("--profile", required=True, help="프로필 (예: '0,1', '1,2;3', '2;2')")
    tax.set_defaults(handler=cmd_tax)

    reproduce = sub.add_parser("reproduce", parents=[common], help="예제/시뮬레이션 재현")
    reproduce.add_argument("example", choices=("pd", "mcs-example", "mcwa-example", "fig7"))
    reproduce.add_argument("--out", default=None, help="결과 저장 디렉터리")
    reproduce.add_argument("--trials", type=int, default=None, help="셀당 시행 수")
    reproduce.add_argument("--users", type=int, nargs="+", default=None, help="사용자 수 목록")
    reproduce.add_argument("--reward-level", type=float, nargs="+", default=None, help="과제 보상 목록")
    reproduce.set_defaults(handler=cmd_reproduce)

    generate = sub.add_parser("generate", parents=[common], help="무작위 시나리오 생성")
    generate.add_argument("kind", choices=("mcs", "mcwa"))
    generate.add_argument("--out", default=None, help="저장할 JSON 경로 (없으면 표준 출력)")
    generate.add_argument("--users", type=int, nargs=1, default=None, help="사용자 수")
    generate.add_argument("--reward-level", type=float, nargs=1, default=None, help="과제 보상 (mcs)")
    generate.add_argument("--channels", type=int, default=2, help="채널 수 (mcwa)")
    generate.add_argument("--cross-scale", type=float, default=0.1, help="교차 이득 비율 상한 (mcwa)")
    generate.set_defaults(handler=cmd_generate)

    return parser


def _diagnostic(error: Exception) -> dict:
    data = {"error": type(error).__name__, "message": str(error)}
    if isinstance(error, ScenarioError):
        data = {**error.to_dict(), **data}
    return data


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.handler(args)
    except (TaxGameError, FileNotFoundError) as e:
        logger.error("[CLI] %s 실패: %s", args.command, e)
        print(json.dumps(_diagnostic(e), ensure_ascii=False), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
