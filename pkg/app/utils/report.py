"""
결과 출력 포맷 모듈
- JSON 직렬화 (numpy 값, 무한대/NaN 정리)
- CSV 직렬화
- 예제 재현 결과 텍스트 보고서
"""

import csv
import io
import json
import math
from typing import Any, Optional, Sequence

import numpy as np


def _clean(value: Any) -> Any:
    """JSON으로 옮길 수 있는 값으로 변환 (유한하지 않은 실수는 null)"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def to_json(data: Any) -> str:
    return json.dumps(_clean(data), indent=2, ensure_ascii=False)


def to_csv(rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    """dict 행 목록 → CSV 문자열 (리스트 값은 ';'로 연결)"""
    rows = [_clean(row) for row in rows]
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({
            k: ";".join(str(x) for x in v) if isinstance(v, list) else ("" if v is None else v)
            for k, v in row.items()
        })
    return buffer.getvalue()


def _num(x: float) -> str:
    return f"{x:g}"


def format_payoff_table(
    table: Sequence[Sequence[Sequence[float]]],
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    marked: Sequence[Sequence[int]] = ()
) -> list[str]:
    """
    2인 게임 보수표

    Args:
        table: rows[s1][s2] = (u_1, u_2)
        row_labels: 플레이어 1 전략 이름
        col_labels: 플레이어 2 전략 이름
        marked: 별표(*)로 표시할 프로필 (예: 균형)

    Returns:
        출력 줄 목록
    """
    marked = {tuple(p) for p in marked}
    cells = [
        [
            f"({', '.join(_num(x) for x in cell)})" + ("*" if (r, c) in marked else "")
            for c, cell in enumerate(row)
        ]
        for r, row in enumerate(table)
    ]
    width = max([len(s) for row in cells for s in row] + [len(s) for s in col_labels]) + 2
    head = max(len(s) for s in row_labels) + 2

    lines = [" " * head + "".join(label.center(width) for label in col_labels)]
    for label, row in zip(row_labels, cells):
        lines.append(label.ljust(head) + "".join(cell.center(width) for cell in row))
    return lines


def format_pd_report(summary: dict, row_labels: Sequence[str], col_labels: Sequence[str]) -> str:
    """죄수의 딜레마 과세 예제 보고서"""
    lines = []
    lines.append("=" * 50)
    lines.append("【죄수의 딜레마 과세 예제】")
    lines.append("=" * 50)

    original = summary["original"]
    lines.append("\n▶ 원래 게임 (* = 내쉬 균형)")
    lines.extend(
        "   " + line for line in format_payoff_table(
            original["table"], row_labels, col_labels,
            [p["profile"] for p in original["nash"]["profiles"]],
        )
    )
    for p in original["social_optima"]["profiles"]:
        lines.append(f"   사회적 최적: ({', '.join(p['labels'])}) 후생 {_num(p['welfare'])}")

    for variant in summary["taxed"]:
        exemptions = ", ".join(_num(e) for e in variant["exemptions"])
        lines.append(f"\n▶ 과세 게임 ρ={_num(summary['rate'])}, 면세점=({exemptions})")
        lines.extend(
            "   " + line for line in format_payoff_table(
                variant["table"], row_labels, col_labels,
                [p["profile"] for p in variant["nash"]["profiles"]],
            )
        )
        lines.append(f"   균형 효율성: {'예' if variant['nash_is_efficient'] else '아니오'}")

    shift = summary["ne_shift"]
    lines.append("\n" + "-" * 50)
    lines.append(
        "균형 이동: "
        + " / ".join("(" + ",".join(p) + ")" for p in shift["from"])
        + " → "
        + " / ".join("(" + ",".join(p) + ")" for p in shift["to"])
    )
    lines.append("-" * 50)
    return "\n".join(lines)


def format_mcs_example(summary: dict) -> str:
    """과제 선택 1과제 예제 보고서"""
    lines = []
    lines.append("=" * 50)
    lines.append("【과제 선택 게임 예제】")
    lines.append("=" * 50)
    for title, key in (("내쉬 균형", "nash"), ("사회적 최적", "social_optimum")):
        report = summary[key]
        lines.append(f"\n▶ {title} ({report['method']})")
        for i, (sel, u) in enumerate(zip(report["profile"], report["payoffs"])):
            tasks = ", ".join(str(k) for k in sel) or "-"
            lines.append(f"   사용자 {i + 1}: 과제 [{tasks}] 보수 {u:.4g}")
        lines.append(f"   사회 후생: {report['welfare']:.4g}")
    lines.append("\n" + "-" * 50)
    lines.append(f"후생 이득 (SE-NE)/NE: {summary['welfare_drop']:.2%}")
    if summary["taxed_payoffs"] is not None:
        lines.append("과세 후 보수: " + ", ".join(f"{u:.4g}" for u in summary["taxed_payoffs"]))
    lines.append("-" * 50)
    return "\n".join(lines)


def format_mcwa_example(summary: dict) -> str:
    """채널 선택 예제 보고서"""
    lines = []
    lines.append("=" * 50)
    lines.append("【채널 선택 게임 예제】")
    lines.append("=" * 50)
    for title, key in (("내쉬 균형 (반복 워터필링)", "nash"), ("사회적 최적", "social_optimum")):
        part = summary[key]
        lines.append(f"\n▶ {title}")
        for i, (power, cap) in enumerate(zip(part["power"], part["capacities"])):
            lines.append(
                f"   사용자 {i + 1}: 전력 [{', '.join(f'{p:.4g}' for p in power)}] 용량 {cap:.4f}"
            )
        lines.append(f"   사회 후생: {part['welfare']:.4f}")
    lines.append("\n" + "-" * 50)
    lines.append("과세 후 보수 (사회적 최적): " + ", ".join(f"{u:.4f}" for u in summary["taxed_payoffs"]))
    lines.append("-" * 50)
    for warning in summary.get("warnings", []):
        lines.append(f"⚠️ {warning}")
    return "\n".join(lines)


def format_sweep(summary: dict) -> str:
    """시뮬레이션 셀 요약"""
    lines = []
    lines.append("=" * 50)
    lines.append(f"【NE/SE 사회 후생 비교】 seed={summary['seed']}, 셀당 {summary['trials_per_cell']}회")
    lines.append("=" * 50)
    lines.append(f"{'V':>5} {'N':>4} {'NE':>9} {'SE':>9} {'gain':>8} {'실패':>4}")
    for cell in summary["cells"]:
        lines.append(
            f"{cell['reward_level']:>5.2f} {cell['n_users']:>4d} {cell['mean_ne']:>9.4f} "
            f"{cell['mean_se']:>9.4f} {cell['gain']:>8.3f} {cell['failed']:>4d}"
        )
    if summary.get("csv"):
        lines.append(f"\nCSV: {summary['csv']}")
    return "\n".join(lines)
