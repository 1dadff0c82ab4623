class TrendlabError(ValueError):
    """Invalid input or unusable data. The CLI maps these to exit code 2."""


class ParseError(TrendlabError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
