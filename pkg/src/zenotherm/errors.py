"""Exception hierarchy; the CLI maps each family to a distinct exit code."""


class ZenothermError(Exception):
    exit_code = 1


class ConfigError(ZenothermError):
    exit_code = 2


class NumericalError(ZenothermError):
    exit_code = 3


class QuadratureError(NumericalError):
    def __init__(self, message, error_estimate=float("nan")):
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class IntegrationBlowupError(NumericalError):
    pass


class UnitarityError(NumericalError):
    pass


class CapacityError(ZenothermError):
    exit_code = 4
