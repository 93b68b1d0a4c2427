from typing import Optional


class ConfigError(ValueError):
    """Invalid user-supplied parameter; `field` names the offending setting."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class FeasibilityError(RuntimeError):
    """An enumeration or oracle guard refused the instance."""

    def __init__(self, what: str, predicted: int, limit: int):
        super().__init__(f"{what}: predicted size {predicted} exceeds limit {limit}")
        self.what = what
        self.predicted = predicted
        self.limit = limit


def check_feasible(what: str, predicted: int, limit: int) -> None:
    if predicted > limit:
        raise FeasibilityError(what, predicted, limit)
