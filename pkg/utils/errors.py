class SeriesDivergenceError(RuntimeError):
    """Raised when a truncated series has not started converging within its term budget."""

    def __init__(self, message: str, terms_used: int = 0):
        super().__init__(message)
        self.terms_used = terms_used


class ConfigError(ValueError):
    """Scenario or sweep configuration could not be parsed or validated."""
