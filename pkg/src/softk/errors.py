"""Exception hierarchy shared by every layer of the kernel."""

from __future__ import annotations


class SoftError(Exception):
    """Base class for all kernel errors."""


class ParseError(SoftError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class MalformedTerm(SoftError):
    pass


class MalformedEvent(SoftError):
    pass


class UnknownFunction(SoftError):
    def __init__(self, name: str):
        super().__init__(f"unknown function {name}")
        self.name = name


class ArityError(SoftError):
    def __init__(self, name: str, expected: int, actual: int):
        super().__init__(f"{name} expects {expected} argument(s), got {actual}")
        self.name = name
        self.expected = expected
        self.actual = actual


class NameClash(SoftError):
    def __init__(self, name: str, detail: str = "already in use"):
        super().__init__(f"{name}: {detail}")
        self.name = name


class InvariantViolation(SoftError):
    def __init__(self, condition: str):
        super().__init__(condition)
        self.condition = condition


class FunvarMismatch(SoftError):
    def __init__(self, extra=(), missing=()):
        self.extra = frozenset(extra)
        self.missing = frozenset(missing)
        parts = []
        if self.extra:
            parts.append("extra=" + " ".join(sorted(self.extra)))
        if self.missing:
            parts.append("missing=" + " ".join(sorted(self.missing)))
        super().__init__("function parameters do not match dependencies: " + ", ".join(parts))


class MissingInstance(SoftError):
    def __init__(self, sofun: str, sigma):
        self.sofun = sofun
        self.sigma = tuple(sigma)
        pairs = " ".join(f"({k} . {v})" for k, v in self.sigma)
        super().__init__(
            f"no instance of {sofun} for {pairs}; introduce it with "
            f"(defun-inst <name> ({sofun} {pairs})) and re-try"
        )


class ObligationFailed(SoftError):
    def __init__(self, obligations):
        self.obligations = list(obligations)
        names = ", ".join(f"{o.replaced}:{o.kind}" for o in self.obligations)
        super().__init__(f"undischarged obligations: {names}")


class BoundedCheckFailed(SoftError):
    def __init__(self, verdict):
        super().__init__(f"bounded check failed: {verdict}")
        self.verdict = verdict


class NonExecutable(SoftError):
    def __init__(self, name: str):
        super().__init__(f"{name} is not executable")
        self.name = name


class DepthExceeded(SoftError):
    pass


class BudgetExceeded(SoftError):
    pass


class UnboundVariable(SoftError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name}")
        self.name = name


class GuardViolation(SoftError):
    pass


class ChainShapeError(SoftError):
    def __init__(self, index: int, expected: str, actual: str = ""):
        msg = f"step {index}: expected {expected}"
        if actual:
            msg += f", got {actual}"
        super().__init__(msg)
        self.index = index
        self.expected = expected


class UsageError(SoftError):
    pass
