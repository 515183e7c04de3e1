"""Exception hierarchy shared across the package."""


class CorpusgenError(Exception):
    """Base class for every error raised by corpusgen."""


class ProgramMismatch(CorpusgenError):
    """Two coverage values refer to different programs."""


class DegenerateProgram(CorpusgenError):
    """A program without executable lines cannot carry a coverage percentage."""


class PredictionParseError(CorpusgenError):
    """An annotated listing could not be turned into a coverage map."""


class GenerationParseError(CorpusgenError):
    """A model response did not contain a usable test input."""


class GenerationExhausted(CorpusgenError):
    """The generator produced nothing parseable within its retry budget."""


class PredictionExhausted(CorpusgenError):
    """The coverage predictor produced nothing parseable within its retry budget."""


class ProviderUnavailable(CorpusgenError):
    """The chat endpoint could not be reached after all retries."""


class CassetteDrift(CorpusgenError):
    """A replayed request does not match the recorded fingerprint."""


class CassetteExhausted(CorpusgenError):
    """Replay ran past the last recorded entry."""


class OracleTooLarge(CorpusgenError):
    """Exhaustive minimum cover requested for too many seeds."""


class DegenerateInterval(CorpusgenError):
    """A per-time metric was requested over a non-positive interval."""


class ParseError(CorpusgenError):
    """MiniLang source could not be parsed."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
