import logging
import sys
from abc import ABC, abstractmethod

from tqdm import tqdm

LOGGER_NAME = "calibration"


class MessageStrategy(ABC):
    @abstractmethod
    def message(self, kind: str, title="", message=""):
        """
        Shows a warning or information message

        Args:
            kind (str): "warning", "information" or "error"
            title (str): title of the message
            message (str): content of the message
        """
        pass

    @abstractmethod
    def progress_message(self, func, func_args: dict, message="", total=None):
        """
        Runs func while showing its progress

        Args:
            func: function that is executed, it receives a step_fn(val, max) keyword argument
            func_args (dict): dictionary of arguments for func
            message (str): description of the task
            total (int): expected amount of steps, if known

        Returns:
            the return value of func
        """
        pass


class TerminalMessageStrategy(MessageStrategy):
    def __init__(self, stream=None, progress=True):
        """
        Prints messages and progress bars on the error stream.

        Args:
            stream: text stream, sys.stderr when None
            progress (bool): whether to draw progress bars
        """
        self.stream = stream
        self.progress = progress

    def _stream(self):
        return self.stream if self.stream is not None else sys.stderr

    def message(self, kind: str, title="", message=""):
        print("{} - {}: {}".format(kind.capitalize(), title, message), file=self._stream())

    def progress_message(self, func, func_args: dict, message="", total=None):
        if not self.progress:
            return func(step_fn=lambda val, max: None, **func_args)

        bar = tqdm(total=total, desc=message, unit_scale=True, leave=False, file=self._stream())

        def step(val, max):
            if bar.total != max:
                bar.total = max
            bar.n = val
            bar.refresh()

        try:
            return func(step_fn=step, **func_args)
        finally:
            bar.close()


class LoggingMessageStrategy(MessageStrategy):
    LEVELS = {
        'warning': logging.WARNING,
        'information': logging.INFO,
        'error': logging.ERROR,
    }

    def __init__(self, logger=None):
        """
        Routes messages to the standard logging hierarchy; progress is silent.

        Args:
            logger (logging.Logger): destination, the "calibration" logger when None
        """
        self.logger = logger if logger is not None else logging.getLogger(LOGGER_NAME)

    def message(self, kind: str, title="", message=""):
        level = self.LEVELS.get(kind.lower(), logging.INFO)
        self.logger.log(level, "%s: %s", title, message)

    def progress_message(self, func, func_args: dict, message="", total=None):
        self.logger.debug("%s: started", message)
        result = func(step_fn=lambda val, max: None, **func_args)
        self.logger.debug("%s: done", message)
        return result
