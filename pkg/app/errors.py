"""
공통 예외 정의
"""

from typing import Optional


class TaxGameError(Exception):
    """패키지 공통 베이스 예외"""


class DimensionError(TaxGameError, ValueError):
    """플레이어 수(벡터 길이) 불일치"""


class DomainError(TaxGameError, ValueError):
    """정의역 위반 (N < 2, 세율 범위, β ≤ 0 등)"""


class EnumerationCapError(TaxGameError):
    """전수 탐색 프로필 수가 상한을 넘음"""


class SelectionError(TaxGameError, ValueError):
    """순서 과제 선택이 잘못됨 (중복, 사용자에게 허용되지 않은 과제)"""


class UnknownTaskError(SelectionError, KeyError):
    """존재하지 않는 과제 ID"""

    def __str__(self) -> str:
        return Exception.__str__(self)


class FeasibilityError(TaxGameError):
    """실행 불가능한 프로필에서 보수를 계산하려 함"""


class SolverSizeError(TaxGameError):
    """최적 반응 탐색 상한 초과 (인스턴스를 줄여야 함)"""


class ScenarioError(TaxGameError, ValueError):
    """시나리오 파일 스키마 위반"""

    def __init__(self, field: str, constraint: str, detail: Optional[str] = None):
        self.field = field
        self.constraint = constraint
        message = f"{field}: {constraint}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)

    def to_dict(self) -> dict:
        return {"error": "scenario", "field": self.field, "constraint": self.constraint}
