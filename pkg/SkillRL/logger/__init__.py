from .base_logger import BaseLogger, LogLevel, fmt_time_now, make_unique_name, cmap
from .csv_logger import CsvLogger


class logger:
    """
    Package-wide console logger used by library code that does not own a run directory.
    Messages below `logger.level` are dropped.
    """
    level = LogLevel.DEBUG

    @staticmethod
    def set_level(level: int):
        logger.level = level

    @staticmethod
    def log_str(msg: str, type=None, level: int=LogLevel.INFO):
        if level < logger.level:
            return
        if type: type = type.lower()
        time_str = fmt_time_now()
        print("{}[{}]{}\t{}".format(
            cmap[type],
            time_str,
            cmap["reset"],
            msg
        ))

    @staticmethod
    def info(msg):
        logger.log_str(msg, "info", LogLevel.INFO)

    @staticmethod
    def debug(msg):
        logger.log_str(msg, "debug", LogLevel.DEBUG)

    @staticmethod
    def warning(msg):
        logger.log_str(msg, "warning", LogLevel.WARNING)

    @staticmethod
    def error(msg):
        logger.log_str(msg, "error", LogLevel.ERROR)
