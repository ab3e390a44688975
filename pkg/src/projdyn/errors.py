"""Exception hierarchy.

Errors deriving from :class:`NumericalError` signal a numerical breakdown
(restoration, QP, definiteness) and map to CLI exit code 3.
"""


class ProjDynError(Exception):
    """Base class for all package errors."""


class NumericalError(ProjDynError):
    """A numerical procedure failed to produce a trustworthy result."""


class InfeasibleError(ProjDynError, ValueError):
    """A point violates a constraint by more than the active-set tolerance."""

    def __init__(self, index, value, tol):
        self.index = int(index)
        self.value = float(value)
        self.tol = float(tol)
        super().__init__(
            f"constraint {self.index} violated: h={self.value:.3e} > tol={self.tol:.1e}"
        )


class DegenerateRankError(NumericalError):
    """Active constraint gradients are not linearly independent."""

    def __init__(self, active, singular_values):
        self.active = tuple(active)
        self.singular_values = tuple(float(s) for s in singular_values)
        super().__init__(
            f"active constraints {list(self.active)} have degenerate rank "
            f"(singular values {list(self.singular_values)})"
        )


class DefinitenessError(NumericalError):
    """A metric evaluation is not symmetric positive definite."""


class SolverError(NumericalError):
    """The NNLS active-set solver exceeded its iteration cap."""

    def __init__(self, message, iterate=None, passive=None):
        self.iterate = None if iterate is None else list(map(float, iterate))
        self.passive = None if passive is None else list(map(int, passive))
        super().__init__(f"{message}; iterate={self.iterate}, passive={self.passive}")


class RestorationError(NumericalError):
    """Feasibility restoration did not converge."""

    def __init__(self, message, last_iterate, residual):
        self.last_iterate = list(map(float, last_iterate))
        self.residual = float(residual)
        super().__init__(
            f"{message}; last iterate={self.last_iterate}, residual={self.residual:.3e}"
        )


class SamplerError(ProjDynError):
    """A neighborhood sampler returned no usable points."""


class IrregularityError(ProjDynError):
    """A computation that needs a single projection branch met several."""


class ChartDomainError(ProjDynError):
    """A point left the domain of a coordinate chart."""

    def __init__(self, message, time=None):
        self.time = time
        if time is not None:
            message = f"{message} (t={time:.6g})"
        super().__init__(message)
