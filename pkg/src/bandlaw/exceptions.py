"""Exception types raised across the package."""


class SpecError(ValueError):
    """An ensemble, atom or experiment description violates a shape constraint."""


class SpectralError(RuntimeError):
    """A dense decomposition failed or produced non-finite output."""


class SingularSampleError(SpectralError):
    """A sample has an exactly vanishing singular value, so its log-potential is -inf."""


class DysonConvergenceError(RuntimeError):
    """The fixed-point solver did not reach tolerance.

    Attributes
    ----------
    residual : float
        Residual of the last iterate.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
