"""Exception types shared across the package."""

from __future__ import annotations


class InvalidParameter(ValueError):
    def __init__(self, name: str, reason: str):
        super().__init__(f"{name}: {reason}")
        self.name = name
        self.reason = reason


class LibraryTooSmall(InvalidParameter):
    def __init__(self, n: int, kr: int):
        super().__init__("n", f"library size N={n} is smaller than K_R={kr}")


class InvalidConfig(ValueError):
    """Raised when more than one parameter is out of range."""

    def __init__(self, problems: list[InvalidParameter]):
        super().__init__("; ".join(str(p) for p in problems))
        self.problems = problems


class Infeasible(ValueError):
    """Base class for delivery schemes that cannot serve the demand."""


class InfeasibleEdgeOnly(Infeasible):
    pass


class InfeasibleCloudOnly(Infeasible):
    pass


class InfeasibleHybrid(Infeasible):
    pass


class NoFeasibleScheme(Infeasible):
    pass


class CapacityViolation(ValueError):
    def __init__(self, node: str, used: int, limit: int):
        super().__init__(f"{node} stores {used} bits, limit is {limit}")
        self.node = node
        self.used = used
        self.limit = limit


class PartitionError(ValueError):
    pass


class RegimeMismatch(ValueError):
    pass


class ValidationFailure(RuntimeError):
    pass


class ReconcileFailure(AssertionError):
    def __init__(self, component: str, achieved, analytic):
        super().__init__(
            f"{component}: achieved {achieved} does not match analytic {analytic}"
        )
        self.component = component
        self.achieved = achieved
        self.analytic = analytic
