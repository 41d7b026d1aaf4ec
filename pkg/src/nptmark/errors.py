"""Exception hierarchy shared by the library and the command line."""


class NptError(Exception):
    """Base class for every error raised by nptmark."""


class InvalidArgument(NptError, ValueError):
    pass


class ShapeError(InvalidArgument):
    pass


class LogoTooLarge(ShapeError):
    pass


class SizeRestrictionError(ShapeError):
    """Embedded block is too large for the least-squares system to be solvable."""


class ConfigError(InvalidArgument):
    pass


class ImageFormatError(InvalidArgument):
    pass


class UndefinedMetric(InvalidArgument):
    pass


class ConvergenceError(NptError, ArithmeticError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual bound {residual:.3e} after {iterations} terms)")
        self.residual = residual
        self.iterations = iterations


class SolverError(NptError, ArithmeticError):
    def __init__(self, message: str, rank: int | None = None, expected_rank: int | None = None):
        if rank is not None:
            message = f"{message} (rank {rank} of {expected_rank})"
        super().__init__(message)
        self.rank = rank
        self.expected_rank = expected_rank


class RankError(SolverError):
    pass


class DegenerateExtraction(SolverError):
    """alpha == 1 leaves the watermarked image equal to the host; nothing is recoverable."""


class DetectionFailure(NptError):
    pass


class TamperSuspected(NptError):
    def __init__(self, message: str, residual: float, threshold: float):
        super().__init__(f"{message} (residual {residual:.3e} > {threshold:.3e})")
        self.residual = residual
        self.threshold = threshold
