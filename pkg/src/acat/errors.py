"""Exception types shared across the solver modules."""

from __future__ import annotations


class AdmissibilityError(ValueError):
    """A state violates the physical admissibility of its model (e.g. negative
    density or pressure). ``where`` carries the offending cell location."""

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


class FluxFailure(RuntimeError):
    """A high-order flux recursion produced a non-finite or inadmissible
    intermediate. ``interface`` is the interface id, ``level`` the recursion
    depth at which the failure was detected."""

    def __init__(self, message: str, interface=None, level: int | None = None):
        super().__init__(message)
        self.interface = interface
        self.level = level


class ConvergenceFailure(RuntimeError):
    """An iterative solve (e.g. the star-pressure Newton iteration) did not
    converge within its iteration budget."""
