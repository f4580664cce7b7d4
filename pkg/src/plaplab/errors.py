"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: grid sizes, exponents, schedules, unknown keys."""


class SignChangeError(ConfigError):
    """Weight violates the standing hypothesis that a(x) takes both signs."""


class RegimeError(RuntimeError):
    """Operation invoked outside the parameter regime where it is defined."""


class ProjectionError(RuntimeError):
    """Radial projection onto a constraint manifold is undefined for this field."""


class InitializationError(RuntimeError):
    """No admissible starting field could be constructed."""


class DegenerateDomainError(RuntimeError):
    """A hard constraint removed every free node."""


class NonFiniteError(ArithmeticError):
    """A computation produced NaN or infinity."""
