"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class FragAreaError(Exception):
    exit_code = 3

    def __init__(self, message="", field=None):
        super().__init__(message)
        self.field = field

    @property
    def kind(self):
        return type(self).__name__

    def diagnostic(self):
        head = self.kind if self.field is None else f"{self.kind}: {self.field}"
        msg = str(self)
        return f"{head}: {msg}" if msg else head


class ValidationError(FragAreaError):
    exit_code = 2


class InvalidParameter(ValidationError):
    pass


class DivergentIntegral(ValidationError):
    pass


class EmptyMeasure(ValidationError):
    pass


class DomainError(ValidationError, ValueError):
    pass


class NotFinite(ValidationError):
    """Operation needs a dislocation measure with finite total mass."""


class InsufficientSamples(ValidationError):
    pass


class QuadratureFailure(FragAreaError):
    exit_code = 3


class NoConvergence(FragAreaError):
    exit_code = 3


class DegenerateMeasure(FragAreaError):
    exit_code = 3


class BudgetExceeded(FragAreaError):
    exit_code = 4
