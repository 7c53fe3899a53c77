from django.core.exceptions import ValidationError


class ResolutionError(Exception):
    """格點太粗，無法可靠解析所要求的特徵值。"""

    def __init__(self, message, suggested_N=None):
        super().__init__(message)
        self.suggested_N = suggested_N

    def __str__(self):
        message = super().__str__()
        if self.suggested_N is not None:
            return f"{message}（建議 N ≥ {self.suggested_N}）"
        return message


class WeightError(ValidationError):
    """廣義特徵值問題的權重 B 必須為正。"""


class EigenSolveError(Exception):
    """Sturm 計數不單調或殘差超過容許值，代表求解器本身出錯。"""
