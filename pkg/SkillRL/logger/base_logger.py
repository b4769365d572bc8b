from typing import Any, Dict, Optional

import os
from datetime import datetime

import yaml

from SkillRL.misc.namespace import NameSpace
from SkillRL.misc.chore import to_builtin


def make_unique_name(name: Optional[str]) -> str:
    name = name or ""
    now = datetime.now()
    suffix = now.strftime("%m-%d-%H-%M")
    pid_str = os.getpid()
    if name == "":
        return f"{suffix}-{pid_str}"
    else:
        return f"{name}-{suffix}-{pid_str}"


def fmt_time_now() -> str:
    return datetime.now().strftime("%Y-%m-%d %H:%M:%S")


cmap = {
    None: "\033[0m",
    "error": "\033[1;31m",
    "debug": "\033[0m",
    "warning": "\033[1;33m",
    "info": "\033[1;34m",
    "reset": "\033[0m",
}


class LogLevel:
    NOTSET = 0
    DEBUG = 1
    WARNING = 2
    ERROR = 3
    INFO = 4


class BaseLogger():
    """
    Base class for run loggers, providing colored string logging and config snapshots.
    Every run owns exactly one directory `<log_dir>/<unique_name>`.

    Parameters
    ----------
    log_dir :  The base dir where the logger logs to.
    name :  The name of the run, a time and pid suffix will be appended to ensure uniqueness.
    unique_name :  The name of the run, but no suffix will be appended.
    backup_stdout :  Whether or not mirror the console lines into `stdout.txt` inside the run dir.
    activate :  Whether this logger is activated.
    level :  The level threshold of the logging message.
    """

    cmap = cmap

    def __init__(
        self,
        log_dir: str,
        name: Optional[str]=None,
        unique_name: Optional[str]=None,
        backup_stdout: bool=False,
        activate: bool=True,
        level: int=LogLevel.WARNING,
        *args, **kwargs
    ):
        self.activate = activate
        self.backup_stdout = False
        if not self.activate:
            return
        self.unique_name = unique_name or make_unique_name(name)
        self.log_dir = os.path.join(log_dir, self.unique_name)
        os.makedirs(self.log_dir, exist_ok=True)

        self.backup_stdout = backup_stdout
        if self.backup_stdout:
            self.stdout_file = os.path.join(self.log_dir, "stdout.txt")
            self.stdout_fp = open(self.stdout_file, "a+")
        self.level = level

    def can_log(self, level=LogLevel.INFO):
        return self.activate and level >= self.level

    def _write(self, time_str: str, msg: str, type="info"):
        self.stdout_fp.write("[{}] ({})\t{}\n".format(time_str, type.upper(), msg))
        self.stdout_fp.flush()

    def _log(self, msg: str, type: str, level: int):
        if self.can_log(level):
            time_str = fmt_time_now()
            print("{}[{}]{}\t{}".format(self.cmap[type], time_str, self.cmap["reset"], msg))
            if self.backup_stdout:
                self._write(time_str, msg, type)

    def info(self, msg: str, level: int=LogLevel.INFO):
        self._log(msg, "info", level)

    def debug(self, msg: str, level: int=LogLevel.DEBUG):
        self._log(msg, "debug", level)

    def warning(self, msg: str, level: int=LogLevel.WARNING):
        self._log(msg, "warning", level)

    def error(self, msg: str, level: int=LogLevel.ERROR):
        self._log(msg, "error", level)

    def log_config(self, config: Any, filename: str="config.yaml") -> Optional[str]:
        """Dump the resolved config into the run dir as YAML. """
        if not self.activate:
            return None
        if isinstance(config, NameSpace):
            config = config.as_dict()
        path = os.path.join(self.log_dir, filename)
        with open(path, "w") as fp:
            yaml.safe_dump(to_builtin(config), fp, sort_keys=False)
        return path

    def path(self, *names: str) -> str:
        """Join `names` under the run dir, creating parent directories on the way. """
        target = os.path.join(self.log_dir, *names)
        os.makedirs(os.path.dirname(target), exist_ok=True)
        return target

    def close(self):
        if getattr(self, "backup_stdout", False) and hasattr(self, "stdout_fp"):
            self.stdout_fp.close()
            self.backup_stdout = False

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
