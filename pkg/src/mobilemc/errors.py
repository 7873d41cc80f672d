"""Exception vocabulary shared across the package.

Four failure categories cover every operation: bad call arguments, bad
parameter sets or configuration files, algorithms that cannot meet their
accuracy contract, and distance laws that collapse to a point mass.
"""


class InvalidArgumentError(ValueError):
    """An operation received an argument outside its documented domain."""


class InvalidConfigError(ValueError):
    """A parameter set or configuration failed validation."""


class NumericalFailureError(ArithmeticError):
    """A numerical algorithm could not reach its accuracy target."""


class DegenerateLawError(InvalidArgumentError):
    """A continuous distance law was requested where only a point mass exists."""
