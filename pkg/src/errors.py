"""
errors.py

Error hierarchy shared by every package. Each error carries a stable
machine-readable code and the process exit code the CLI maps it to.
"""


class QCertLabError(Exception):
    """Base class for all lab errors."""

    code = "qcertlab-error"
    exit_code = 1

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self)}


class InvalidDimension(QCertLabError, ValueError):
    code = "invalid-dimension"
    exit_code = 3


class InvalidParameter(QCertLabError, ValueError):
    code = "invalid-parameter"
    exit_code = 3


class ShapeError(QCertLabError, ValueError):
    code = "shape-error"
    exit_code = 3


class ConfigError(QCertLabError, ValueError):
    code = "config-error"
    exit_code = 3


class ResourceLimit(QCertLabError):
    """A computation would exceed a configured size cap."""

    code = "resource-limit"
    exit_code = 2

    def __init__(self, what: str, size: int, cap: int, context: str = ""):
        self.what = what
        self.size = int(size)
        self.cap = int(cap)
        self.context = context
        message = f"{what} needs size {self.size} > cap {self.cap}"
        if context:
            message += f" ({context})"
        super().__init__(message)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out.update({"what": self.what, "size": self.size, "cap": self.cap, "context": self.context})
        return out


class PreconditionError(QCertLabError):
    code = "precondition-error"


class ConstructionError(QCertLabError):
    code = "construction-error"


class UnreachableBranch(QCertLabError):
    code = "unreachable-branch"


class CalibrationFailure(QCertLabError):
    """Calibration could not meet its target; diagnostics explain where it stopped."""

    code = "calibration-failure"

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["diagnostics"] = self.diagnostics
        return out
