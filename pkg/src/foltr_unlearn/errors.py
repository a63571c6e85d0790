"""Exception types shared across the package."""


class LetorParseError(ValueError):
    """Raised when a LETOR input line cannot be parsed; carries the line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ConfigurationError(ValueError):
    """Invalid experiment or component configuration."""


class StrategyError(RuntimeError):
    """An unlearning strategy cannot run with the given state (e.g. missing history)."""
