class CalibrationError(Exception):
    """Base class for every error raised by the calibration package"""


class ConfigError(CalibrationError, ValueError):
    """Invalid thresholds, flags or generator parameters"""


class HistogramError(ConfigError):
    """Invalid histogram bin edges"""


class SynthError(ConfigError):
    """Synthetic dataset specification that cannot be satisfied"""


class FormatError(CalibrationError, ValueError):
    def __init__(self, message, source="<stream>", line=None):
        """
        Error found while reading an annotation or detection file.

        Args:
            message (str): what is wrong
            source (str): file name or stream description
            line (int): 1-based line number, if known
        """
        self.message = message
        self.source = source
        self.line = line
        super().__init__(str(self))

    def __str__(self):
        if self.line is None:
            return "{}: {}".format(self.source, self.message)
        return "{}:{}: {}".format(self.source, self.line, self.message)

    def __reduce__(self):
        # errors raised in parsing workers cross process boundaries
        return FormatError, (self.message, self.source, self.line)
