"""Exception hierarchy used across formval."""


class FormvalError(Exception):
    """Base class for every error raised by this package."""


class SpecSyntaxError(FormvalError):
    """The measurement-spec document is malformed."""


class SpecReferenceError(FormvalError):
    """Unknown or duplicated identifier in the measurement spec."""


class IngestError(FormvalError):
    """A pilot or SME rating file does not match the spec."""


class MissingDataError(IngestError):
    """Raised under the ``error`` missing-data policy."""

    def __init__(self, cells):
        self.cells = list(cells)
        where = ", ".join(f"({c.respondent_id}, {c.item_id})" for c in self.cells[:10])
        more = "" if len(self.cells) <= 10 else f" and {len(self.cells) - 10} more"
        super().__init__(f"missing cells at {where}{more}")


class ContentValidityError(FormvalError):
    """No item of a construct survives the content-validity gate."""


class DiagnosticsError(FormvalError):
    """A statistic is undefined for the supplied data."""


class WorkflowError(FormvalError):
    """Gate evaluation or iteration bookkeeping received inconsistent input."""
