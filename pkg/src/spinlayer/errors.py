"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all spinlayer errors."""


class NonTilingGrid(SimulationError):
    """Grid spacings do not tile the requested extents exactly."""


class EtaTooLarge(SimulationError):
    """Thin-layer thickness exceeds a slab height."""


class AsymmetricSlabs(SimulationError):
    """Full mirror requested on a geometry with unequal slab cell counts."""


class ThinLayerInactive(SimulationError):
    """Thin-layer operation requested but the geometry has no layer cells."""


class ZeroExchange(SimulationError):
    """Nonlinear spacer boundary condition is ill-posed without exchange."""


class CFLViolation(SimulationError):
    """Time step violates a stability bound."""


class NonFinite(SimulationError):
    """A field acquired NaN/Inf values or a zero-norm cell was renormalized."""


class SolverDiverged(SimulationError):
    """Poisson projection failed to reach the requested tolerance."""


class WindowOutOfRange(SimulationError):
    """Time-averaging window extends beyond the stored trajectory."""


class ConfigError(SimulationError):
    """Base class for run-configuration problems (exit code 2)."""


class ParseError(ConfigError):
    """Malformed configuration text.

    Carries the 1-based line number of the first offending line.
    """

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ConfigError):
    """Configuration parsed but a field failed validation."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason
