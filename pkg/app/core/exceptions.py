class SimulationError(ValueError):
    """Base class for every rejected input or broken contract in the simulator."""


class InvalidProfileError(SimulationError):
    pass


class InvalidMatchingError(SimulationError):
    pass


class InvalidQueryError(SimulationError):
    pass


class EmptyEvolutionDomainError(SimulationError):
    """Raised when an evolution event is requested on lists of length 1."""


class ContractViolationError(SimulationError):
    pass


class StaleContextError(SimulationError):
    pass


class ConfigError(SimulationError):
    pass


class FitError(SimulationError):
    pass


class ReplayMismatchError(SimulationError):
    pass
