"""Exception hierarchy shared by the library and the command line."""


class CovercommError(Exception):
    pass


class InputError(CovercommError, ValueError):
    """Malformed or inconsistent input data."""


class ParseError(InputError):
    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {message}" if where else message)


class GraphError(InputError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class InvalidMorphism(CovercommError):
    """Raised when an operation needs a valid morphism; carries the report."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid morphism: " + "; ".join(report.violations))


class NoCommonCover(CovercommError):
    """The two graphs have different universal covers, so no common cover exists."""


class NotVH(CovercommError):
    """Raised by operations that need a VH partition when none exists."""

    def __init__(self, reason, witness=()):
        self.reason = reason
        self.witness = tuple(witness)
        super().__init__(f"not a VH complex: {reason} (witness: {' '.join(self.witness)})")
