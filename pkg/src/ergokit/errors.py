class ErgokitError(Exception):
    """Base class for library errors."""


class ParameterError(ErgokitError, ValueError):
    pass


class EmptySpectrumError(ErgokitError, ValueError):
    pass


class SpectrumFormatError(ErgokitError, ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class NumericError(ErgokitError, ArithmeticError):
    pass
