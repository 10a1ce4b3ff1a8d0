from calibration.message.Strategies import MessageStrategy, LoggingMessageStrategy
from calibration.utils.metaclasses import SingletonMeta


class Messenger(metaclass=SingletonMeta):
    _strategy: MessageStrategy = None

    def __init__(self, strategy: MessageStrategy = None):
        """
        Single access point for every diagnostic of the package.

        Library code logs by default; the command line installs a TerminalMessageStrategy.

        Args:
            strategy (MessageStrategy): how to handle messages
        """
        if strategy is not None:
            self._strategy = strategy
        elif self._strategy is None:
            self._strategy = LoggingMessageStrategy()

    def message(self, kind: str, title="", message=""):
        self._strategy.message(kind, title, message)

    def warning(self, title="", message=""):
        self._strategy.message("warning", title, message)

    def information(self, title="", message=""):
        self._strategy.message("information", title, message)

    def progress_message(self, func, func_args: dict, message="", total=None):
        """
        Returns:
             the return value of func
        """
        return self._strategy.progress_message(func, func_args, message, total)

    def set_strategy(self, strategy: MessageStrategy):
        self._strategy = strategy

    def get_strategy(self):
        return self._strategy
