"""Exception hierarchy shared by all scalekit modules."""


class ScalekitError(Exception):
    """Base class for every error raised by scalekit."""


class SpecParseError(ScalekitError, ValueError):
    """A model-spec document could not be parsed.

    ``location`` names where the problem is: a ``line:col`` pair for syntax
    errors or a field path such as ``stages[2].depth`` for missing fields.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class SchemaError(SpecParseError):
    """A document parsed but holds a value the schema does not allow."""


class InvalidSpecError(ScalekitError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid network spec:\n  " + "\n  ".join(self.violations))


class DegenerateResolutionError(ScalekitError, ValueError):
    """Successive strides drove a spatial resolution below one pixel."""


class DivisibilityError(ScalekitError, ValueError):
    """A group width does not divide the width of the conv it groups."""


class DomainError(ScalekitError, ValueError):
    pass


class DesignError(ScalekitError, ValueError):
    """Design parameters do not describe a constructible network."""


class ExhaustionError(ScalekitError, RuntimeError):
    """Rejection sampling ran out of draws before reaching the target count."""


class DegenerateDataError(ScalekitError, ValueError):
    pass


class UnknownModelError(ScalekitError, LookupError):
    pass
