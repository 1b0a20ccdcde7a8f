"""
설정 및 상수
- 수치 허용오차, 탐색 상한
- 시뮬레이션 기본값
- 데이터/문서 경로

모든 값은 TAXGAME_ 접두사 환경변수(.env 포함)로 덮어쓸 수 있다.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# .env 파일 로드
load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(f"TAXGAME_{name}")
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(f"TAXGAME_{name}")
    return int(value) if value not in (None, "") else default


# 경로 설정
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
DOCS_DIR = BASE_DIR / "docs"
SCHEMA_PATH = DOCS_DIR / "scenario_schema.json"

PD_FIXTURE_PATH = DATA_DIR / "prisoners_dilemma.json"
MCS_EXAMPLE_PATH = DATA_DIR / "mcs_example.json"
MCS_ROUTE_EXAMPLE_PATH = DATA_DIR / "mcs_route_example.json"
MCWA_EXAMPLE_PATH = DATA_DIR / "mcwa_example.json"

# 앱 설정
APP_TITLE = "taxgame - 정적 게임 과세 메커니즘"

# 공통 수치 설정
DEFAULT_TOLERANCE = _env_float("TOLERANCE", 1e-9)
ENUMERATION_CAP = _env_int("ENUMERATION_CAP", 1_000_000)

# 과제 선택 게임 (MCS) 솔버
MAX_SUBSET_SIZE = _env_int("MAX_SUBSET_SIZE", 10)
MAX_BR_ROUNDS = _env_int("MAX_BR_ROUNDS", 1000)
BRUTE_FORCE_CAP = _env_int("BRUTE_FORCE_CAP", 200_000)

# 채널 선택 게임 (MCWA)
DEFAULT_LOG_BASE = _env_float("LOG_BASE", 2.0)
IWF_MAX_ROUNDS = _env_int("IWF_MAX_ROUNDS", 1000)
IWF_TOLERANCE = _env_float("IWF_TOLERANCE", 1e-9)
SPEND_TOLERANCE = _env_float("SPEND_TOLERANCE", 1e-10)
POWER_THRESHOLD = _env_float("POWER_THRESHOLD", 1e-12)
MULTISTART_RESTARTS = _env_int("MULTISTART_RESTARTS", 32)
PGA_MAX_ITERS = _env_int("PGA_MAX_ITERS", 500)
PGA_TOLERANCE = _env_float("PGA_TOLERANCE", 1e-10)
BINARY_SCAN_MAX_USERS = _env_int("BINARY_SCAN_MAX_USERS", 12)

# 시뮬레이션 기본값
SIM_TASKS = _env_int("SIM_TASKS", 10)
SIM_USER_COUNTS = tuple(range(2, 21, 2))
SIM_REWARD_LEVELS = (0.2, 0.4, 0.6, 0.8, 1.0)
SIM_TRIALS = _env_int("TRIALS", 1000)
SIM_SEED = _env_int("SEED", 20240101)

# CSV 컬럼 (순서 고정)
SIM_CSV_COLUMNS = ["reward_level", "n_users", "trial", "ne_welfare", "se_welfare", "gain"]
