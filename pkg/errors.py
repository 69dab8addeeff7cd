"""
Error Types for graspstab
Exception hierarchy with stable error codes shared by the library and the CLI
"""

from typing import Any, Dict, Optional


class GraspStabError(Exception):
    """Base class for every error raised by graspstab"""

    error_code = "INTERNAL_ERROR"
    exit_code = 2

    def __init__(self, message: str, extra: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.extra = dict(extra or {})

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "status": "error",
            "error_code": self.error_code,
            "message": self.message,
        }
        payload.update(self.extra)
        return payload


class InvalidInputError(GraspStabError):
    """Malformed arguments or geometry handed to a library call"""

    error_code = "INVALID_INPUT"


class GraspFileError(InvalidInputError):
    """Grasp description file failed schema or invariant validation"""

    error_code = "GRASP_FILE_INVALID"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}", {"pointer": pointer})
        self.pointer = pointer


class InvalidModelError(GraspStabError):
    """Linear model references unknown variables or has inconsistent shapes"""

    error_code = "INVALID_MODEL"


class RankDeficiencyError(GraspStabError):
    """A matrix that must be inverted is singular"""

    error_code = "RANK_DEFICIENT"

    def __init__(self, matrix: str, message: Optional[str] = None):
        super().__init__(
            message or f"matrix {matrix} is singular or not positive definite",
            {"matrix": matrix},
        )
        self.matrix = matrix


class ResourceLimitError(GraspStabError):
    """Solver hit its node or iteration limit before proving optimality"""

    error_code = "SOLVER_RESOURCE_LIMIT"
    exit_code = 3

    def __init__(
        self,
        message: str,
        best_bound: Optional[float] = None,
        incumbent: Optional[float] = None,
    ):
        super().__init__(message, {"best_bound": best_bound, "incumbent": incumbent})
        self.best_bound = best_bound
        self.incumbent = incumbent
