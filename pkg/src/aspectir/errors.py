"""Exception types shared across the package."""


class AspectIRError(Exception):
    """Base class for all errors raised by aspectir."""


class FormatError(AspectIRError, ValueError):
    """An input file violates its expected format."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class EntityNotInKBError(AspectIRError, KeyError):
    """A query string does not name an entity of the knowledge base."""

    def __init__(self, query):
        self.query = query
        super().__init__(query)

    def __str__(self):
        return f"entity not in KB: {self.query!r}"
