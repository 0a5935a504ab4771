"""Exception hierarchy.

Everything numerical derives from :class:`NumericalError` so that the CLI can
map it onto exit code 1.
"""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure."""


class NonConvergence(NumericalError):
    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class NoBracket(NumericalError):
    """Both ends of a bisection bracket lie in the same phase."""


class NegativeDiscriminant(NumericalError):
    """A square or fourth root of a negative quantity; the reference state is unstable."""


class CutoffNotConverged(NumericalError):
    """Doubling the boson cutoff moved a low-lying level by more than the tolerance."""
