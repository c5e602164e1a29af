"""Exception types shared across the toolkit."""


class DegenerateGeometry(ValueError):
    """Tag position coincides (within tolerance) with an anchor."""


class SingularGeometry(ValueError):
    """H^T H is numerically singular; GDOP undefined at this tag position."""


class DegenerateDomain(ValueError):
    """Loss extrema too close together to define a scaled loss."""


class ShapeMismatch(ValueError):
    """Vector or matrix dimensions do not chain."""


class EstimationError(RuntimeError):
    """Too many Monte Carlo trials failed to converge."""


class NumericalDivergence(RuntimeError):
    """A training loss became non-finite; carries the offending step index."""

    def __init__(self, step, detail=""):
        super().__init__(f"non-finite loss at step {step}" + (f": {detail}" if detail else ""))
        self.step = step


class EmptyTrace(ValueError):
    """Episode trace holds no steps."""
