"""Exception types shared across parley modules."""

from __future__ import annotations


class ParleyError(Exception):
    """Base class for all parley errors."""


class ConfigError(ParleyError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class InvalidParams(ParleyError, ValueError):
    pass


class MalformedTurn(ParleyError):
    """An indented continuation line with no preceding turn header."""

    def __init__(self, line_no: int, line: str = "", source: str = ""):
        self.line_no = line_no
        self.line = line
        self.source = source
        where = f"{source}:" if source else "line "
        super().__init__(f"{where}{line_no}: continuation before any turn header: {line!r}")


class ParseError(ParleyError):
    def __init__(self, line_no: int, message: str, source: str = ""):
        self.line_no = line_no
        self.source = source
        where = f"{source}:" if source else "line "
        super().__init__(f"{where}{line_no}: {message}")


class DimensionMismatch(ParseError):
    def __init__(self, line_no: int, expected: int, got: int, source: str = ""):
        self.expected = expected
        self.got = got
        super().__init__(line_no, f"expected {expected} components, got {got}", source)


class ZeroVector(ParleyError, ValueError):
    pass


class UnknownTerm(ParleyError, KeyError):
    def __init__(self, term: str):
        self.term = term
        super().__init__(term)

    def __str__(self) -> str:
        return f"term not in embedding table: {self.term!r}"


class MissingVector(ParleyError, KeyError):
    def __init__(self, comment_id: int):
        self.comment_id = comment_id
        super().__init__(comment_id)

    def __str__(self) -> str:
        return f"no precomputed vector for comment id {self.comment_id}"


class InvalidSpec(ParleyError, ValueError):
    pass


class EmptyCatalog(ParleyError, ValueError):
    pass


class EmptyVocabulary(ParleyError, ValueError):
    pass


class NoReference(ParleyError):
    pass


class InsufficientParties(ParleyError):
    pass


class TooLittleData(ParleyError):
    pass


class EmptyStream(ParleyError, ValueError):
    pass


class MissingArtifact(ParleyError):
    def __init__(self, path, hint: str = ""):
        self.path = path
        msg = f"required artifact not found: {path}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
