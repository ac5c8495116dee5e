"""Exception hierarchy. Every error raised by the package derives from XnliError."""


class XnliError(Exception):
    pass


class UnknownLabel(XnliError, ValueError):
    pass


class InvalidLanguage(XnliError, ValueError):
    pass


class InvalidToken(XnliError, ValueError):
    pass


class DuplicateToken(XnliError, ValueError):
    pass


# file formats
class FormatError(XnliError, ValueError):
    """Base for malformed input files; carries path and line number when known."""

    def __init__(self, message, path=None, lineno=None):
        where = ""
        if path is not None:
            where = f"{path}:{lineno}: " if lineno is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.lineno = lineno


class MalformedRow(FormatError):
    pass


class HeaderMismatch(FormatError):
    pass


class ParseError(FormatError):
    pass


class LineCountMismatch(FormatError):
    pass


# numerics
class EmptyInput(XnliError, ValueError):
    pass


class EmptyVector(EmptyInput):
    pass


class ShapeMismatch(XnliError, ValueError):
    pass


class DimMismatch(ShapeMismatch):
    pass


class LengthMismatch(ShapeMismatch):
    pass


class RankTooLarge(XnliError, ValueError):
    pass


class ConvergenceFailure(XnliError, RuntimeError):
    pass


class NonFiniteValue(XnliError, FloatingPointError):
    pass


# embeddings / training
class EmptySide(XnliError, ValueError):
    pass


class EmptyCorpus(XnliError, ValueError):
    pass


class DegenerateVocabulary(XnliError, ValueError):
    pass


class NoUsablePairs(XnliError, ValueError):
    pass


class EmptySentence(XnliError, ValueError):
    pass


class EmptyDataset(XnliError, ValueError):
    pass


class SizeOutOfRange(XnliError, ValueError):
    pass


class EmptySizes(XnliError, ValueError):
    pass


class OutOfRange(XnliError, ValueError):
    pass
