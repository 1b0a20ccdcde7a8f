"""
시나리오 파일 Provider
- JSON 시나리오 로드/저장
- 스키마 검증 (필드 이름과 제약을 담은 ScenarioError)
- 정규 형식 직렬화 (save∘load = 항등)
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..errors import ScenarioError, TaxGameError
from ..services.mcs_game import MCSScenario, MCSUser, Task, TaskCost
from ..services.mcwa_game import ChannelSpec, MCWAScenario, MCWAUser
from ..services.normal_form import FiniteGame

logger = logging.getLogger(__name__)

KINDS = ("normal_form", "mcs", "mcwa")

ScenarioBody = Union[FiniteGame, MCSScenario, MCWAScenario]


@dataclass
class ScenarioFile:
    """시나리오 파일: 종류, 본문, 메타데이터"""
    kind: str
    body: ScenarioBody
    meta: dict = field(default_factory=lambda: {"seed": None, "description": ""})


def _get(data: dict, key: str, path: str, default: Any = ...) -> Any:
    if not isinstance(data, dict):
        raise ScenarioError(path, "object")
    if key not in data:
        if default is ...:
            raise ScenarioError(f"{path}.{key}" if path else key, "required")
        return default
    return data[key]


_BOUNDS = {
    ">= 0": lambda x: x >= 0,
    "> 0": lambda x: x > 0,
    "> 1": lambda x: x > 1,
}


def _number(value: Any, path: str, constraint: str = "number", allow_inf: bool = False) -> float:
    if value is None and allow_inf:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, constraint)
    if not math.isfinite(value):
        raise ScenarioError(path, "finite")
    if constraint in _BOUNDS and not _BOUNDS[constraint](value):
        raise ScenarioError(path, constraint, f"입력값 {value}")
    return float(value)


def _point(value: Any, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(path, "[x, y]")
    return (_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ScenarioError(path, "array")
    return value


def _user_id(raw: dict, path: str, seen: set[int]) -> int:
    user_id = int(_number(_get(raw, "id", path), f"{path}.id"))
    if user_id in seen:
        raise ScenarioError(f"{path}.id", "unique", f"중복 사용자 ID {user_id}")
    seen.add(user_id)
    return user_id


def _inf_to_null(value: float):
    return None if value == math.inf else value


# ----------------------------------------------------------------------
# 정규형 게임
# ----------------------------------------------------------------------

def parse_normal_form(body: dict) -> FiniteGame:
    payoffs = _get(body, "payoffs", "body")
    labels = _get(body, "strategy_labels", "body", None)
    if labels is not None:
        labels = [
            _list(row, f"body.strategy_labels[{n}]")
            for n, row in enumerate(_list(labels, "body.strategy_labels"))
        ]
        for n, row in enumerate(labels):
            if not all(isinstance(x, str) for x in row):
                raise ScenarioError(f"body.strategy_labels[{n}]", "array of strings")
    try:
        array = np.array(payoffs, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("body.payoffs", "rectangular numeric tensor") from None
    n_players = _get(body, "n_players", "body", array.ndim - 1)
    if n_players != array.ndim - 1:
        raise ScenarioError("body.n_players", "matches payoff tensor rank - 1")
    counts = _list(_get(body, "strategy_counts", "body", list(array.shape[:-1])), "body.strategy_counts")
    if counts != list(array.shape[:-1]):
        raise ScenarioError("body.strategy_counts", "matches payoff tensor shape")
    if labels is not None and [len(row) for row in labels] != counts:
        raise ScenarioError("body.strategy_labels", "one label per strategy")
    try:
        return FiniteGame(payoffs=array, strategy_labels=labels)
    except TaxGameError as e:
        raise ScenarioError("body.payoffs", "valid finite game", str(e)) from None


def dump_normal_form(game: FiniteGame) -> dict:
    body = {
        "n_players": game.n_players,
        "strategy_counts": list(game.strategy_counts),
        "payoffs": game.payoffs.tolist(),
    }
    if game.strategy_labels is not None:
        body["strategy_labels"] = [list(row) for row in game.strategy_labels]
    return body


# ----------------------------------------------------------------------
# 과제 선택 게임
# ----------------------------------------------------------------------

def parse_mcs(body: dict) -> MCSScenario:
    tasks = []
    for n, raw in enumerate(_list(_get(body, "tasks", "body"), "body.tasks")):
        path = f"body.tasks[{n}]"
        tasks.append(Task(
            id=int(_number(_get(raw, "id", path), f"{path}.id")),
            reward=_number(_get(raw, "reward", path), f"{path}.reward", ">= 0"),
            location=_point(_get(raw, "location", path), f"{path}.location"),
            window_open=_number(_get(raw, "window_open", path, 0.0), f"{path}.window_open"),
            window_close=_number(_get(raw, "window_close", path, None), f"{path}.window_close", allow_inf=True),
        ))

    users = []
    raw_users = _list(_get(body, "users", "body"), "body.users")
    if len(raw_users) < 2:
        raise ScenarioError("body.users", "at least 2 users")
    seen: set[int] = set()
    for n, raw in enumerate(raw_users):
        path = f"body.users[{n}]"
        available = {}
        for m, entry in enumerate(_list(_get(raw, "available", path, []), f"{path}.available")):
            entry_path = f"{path}.available[{m}]"
            task_id = int(_number(_get(entry, "task", entry_path), f"{entry_path}.task"))
            if task_id in available:
                raise ScenarioError(f"{entry_path}.task", "unique")
            available[task_id] = TaskCost(
                exec_time=_number(_get(entry, "exec_time", entry_path, 0.0), f"{entry_path}.exec_time", ">= 0"),
                exec_cost=_number(_get(entry, "exec_cost", entry_path, 0.0), f"{entry_path}.exec_cost", ">= 0"),
            )
        users.append(MCSUser(
            id=_user_id(raw, path, seen),
            initial_location=_point(_get(raw, "initial_location", path), f"{path}.initial_location"),
            travel_cost_rate=_number(_get(raw, "travel_cost_rate", path, 0.0), f"{path}.travel_cost_rate", ">= 0"),
            speed=_number(_get(raw, "speed", path, 1.0), f"{path}.speed", "> 0"),
            resource_budget=_number(
                _get(raw, "resource_budget", path, None), f"{path}.resource_budget", ">= 0", allow_inf=True
            ),
            available=available,
        ))

    return MCSScenario(tasks=tuple(tasks), users=tuple(users))


def dump_mcs(scenario: MCSScenario) -> dict:
    return {
        "tasks": [
            {
                "id": task.id,
                "reward": task.reward,
                "location": list(task.location),
                "window_open": task.window_open,
                "window_close": _inf_to_null(task.window_close),
            }
            for task in scenario.tasks
        ],
        "users": [
            {
                "id": user.id,
                "initial_location": list(user.initial_location),
                "travel_cost_rate": user.travel_cost_rate,
                "speed": user.speed,
                "resource_budget": _inf_to_null(user.resource_budget),
                "available": [
                    {"task": k, "exec_time": cost.exec_time, "exec_cost": cost.exec_cost}
                    for k, cost in sorted(user.available.items())
                ],
            }
            for user in scenario.users
        ],
    }


# ----------------------------------------------------------------------
# 채널 선택 게임
# ----------------------------------------------------------------------

def parse_mcwa(body: dict) -> MCWAScenario:
    channels = []
    for n, raw in enumerate(_list(_get(body, "channels", "body"), "body.channels")):
        path = f"body.channels[{n}]"
        channels.append(ChannelSpec(
            id=int(_number(_get(raw, "id", path), f"{path}.id")),
            bandwidth=_number(_get(raw, "bandwidth", path), f"{path}.bandwidth", "> 0"),
            noise=_number(_get(raw, "noise", path), f"{path}.noise", "> 0"),
        ))

    raw_users = _list(_get(body, "users", "body"), "body.users")
    if len(raw_users) < 2:
        raise ScenarioError("body.users", "at least 2 users")
    seen: set[int] = set()
    users = []
    for n, raw in enumerate(raw_users):
        path = f"body.users[{n}]"
        users.append(MCWAUser(
            id=_user_id(raw, path, seen),
            power_budget=_number(_get(raw, "power_budget", path), f"{path}.power_budget", "> 0"),
            available=frozenset(
                int(_number(k, f"{path}.available")) for k in _list(_get(raw, "available", path), f"{path}.available")
            ),
        ))

    try:
        gains = np.array(_get(body, "gains", "body"), dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("body.gains", "rectangular numeric tensor") from None

    return MCWAScenario(
        users=tuple(users),
        channels=tuple(channels),
        gains=gains,
        log_base=_number(_get(body, "log_base", "body", 2.0), "body.log_base", "> 1"),
    )


def dump_mcwa(scenario: MCWAScenario) -> dict:
    return {
        "log_base": scenario.log_base,
        "channels": [
            {"id": ch.id, "bandwidth": ch.bandwidth, "noise": ch.noise}
            for ch in scenario.channels
        ],
        "users": [
            {"id": user.id, "power_budget": user.power_budget, "available": sorted(user.available)}
            for user in scenario.users
        ],
        "gains": scenario.gains.tolist(),
    }


_PARSERS = {"normal_form": parse_normal_form, "mcs": parse_mcs, "mcwa": parse_mcwa}


def kind_of(body: ScenarioBody) -> str:
    if isinstance(body, FiniteGame):
        return "normal_form"
    if isinstance(body, MCSScenario):
        return "mcs"
    if isinstance(body, MCWAScenario):
        return "mcwa"
    raise TypeError(f"알 수 없는 시나리오 타입: {type(body).__name__}")


def from_dict(data: dict) -> ScenarioFile:
    """JSON 객체 → ScenarioFile (검증 포함)"""
    kind = _get(data, "kind", "")
    if kind not in KINDS:
        raise ScenarioError("kind", f"one of {list(KINDS)}", f"입력값 {kind!r}")
    meta = _get(data, "meta", "", {}) or {}
    if not isinstance(meta, dict):
        raise ScenarioError("meta", "object")
    body = _PARSERS[kind](_get(data, "body", ""))
    return ScenarioFile(
        kind=kind,
        body=body,
        meta={"seed": meta.get("seed"), "description": meta.get("description", "")},
    )


def to_dict(scenario_file: ScenarioFile) -> dict:
    """ScenarioFile → 정규 형식 JSON 객체"""
    body = scenario_file.body
    kind = kind_of(body)
    dumpers = {"normal_form": dump_normal_form, "mcs": dump_mcs, "mcwa": dump_mcwa}
    return {
        "kind": kind,
        "meta": {
            "seed": scenario_file.meta.get("seed"),
            "description": scenario_file.meta.get("description", ""),
        },
        "body": dumpers[kind](body),
    }


def load_scenario(path: Union[str, Path]) -> ScenarioFile:
    """
    시나리오 파일 로드

    Args:
        path: JSON 파일 경로

    Returns:
        검증된 ScenarioFile

    Raises:
        FileNotFoundError: 파일이 없을 때
        ScenarioError: JSON/스키마 위반
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ScenarioError("$", "well-formed JSON", str(e)) from None
        except UnicodeDecodeError as e:
            raise ScenarioError("$", "UTF-8 text", str(e)) from None
    scenario_file = from_dict(data)
    logger.debug("[IO] %s 로드 (%s)", path, scenario_file.kind)
    return scenario_file


def dumps_scenario(scenario_file: ScenarioFile) -> str:
    return json.dumps(to_dict(scenario_file), indent=2, ensure_ascii=False) + "\n"


def save_scenario(scenario_file: ScenarioFile, path: Union[str, Path]):
    """정규 형식 JSON으로 저장"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_scenario(scenario_file))
    logger.debug("[IO] %s 저장", path)
