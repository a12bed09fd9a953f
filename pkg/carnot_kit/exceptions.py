class CarnotKitException(Exception):
    pass


class DimensionMismatchError(CarnotKitException):
    def __init__(self, message: str, layer: int) -> None:
        super().__init__(message)
        self.layer = layer


class DomainError(CarnotKitException, ValueError):
    pass


class NonSmoothLocusError(DomainError):
    pass


class DivergenceError(CarnotKitException):
    def __init__(self, message: str, time: float) -> None:
        super().__init__(message)
        self.time = time


class UnreachedTargetError(CarnotKitException):
    def __init__(self, message: str, best_residual: float) -> None:
        super().__init__(message)
        self.best_residual = best_residual


class OracleFailureError(CarnotKitException):
    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class ConfigurationError(CarnotKitException):
    pass


class PhiValidationError(ConfigurationError):
    pass
