"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument falls outside the domain an operation is defined on."""


class UnknownCountryError(KeyError):
    pass


class FirmNotViableError(DomainError):
    """Unit cost above the market's cutoff."""


class ChannelUnavailableError(DomainError):
    pass


class NoEquilibriumError(ArithmeticError):
    """The free-entry residual has no sign change on the search bracket."""


class SingularityError(ArithmeticError):
    pass


class SpecificationError(ValueError):
    """A regression specification cannot be estimated as written."""


class SeparationError(SpecificationError):
    def __init__(self, message, column=None):
        self.column = column
        super().__init__(message)


class RankDeficiencyError(ArithmeticError):
    pass


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the source file when known."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NumericAbort(ArithmeticError):
    """Simulation state became non-finite."""
