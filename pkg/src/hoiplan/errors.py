"""Exception types shared across the package."""


class InvalidInput(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class ContractViolation(RuntimeError):
    """A pluggable component (denoiser, predictor) broke its output contract."""


class NumericFailure(ArithmeticError):
    pass


class DegenerateDirection(ValueError):
    pass


class NotEstimable(ValueError):
    pass
