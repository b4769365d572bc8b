from typing import Any, List, Optional, Union
from typing import Dict as DictLike

import os

import pandas as pd

from SkillRL.logger.base_logger import (
    BaseLogger,
    LogLevel,
)


class CsvLogger(BaseLogger):
    """
    CSV Logger. Scalars are appended row by row into `<run_dir>/<filename>`; when a row brings new
    keys the header is extended and the file is rewritten. Every row carries the `constants` columns
    (the config hash and seed of the run) so that each result file names its provenance.

    Parameters
    ----------
    log_dir :  The base dir where the logger logs to.
    name :  The name of the run. A suffix will be added to the name to ensure the uniqueness of the log path.
    unique_name :  The name of the run, but no suffix will be appended.
    backup_stdout :  Whether or not backup stdout to files.
    activate :  Whether this logger is activated.
    level :  The level threshold of the logging message.
    filename :  The name of the metrics file. Default is `metrics.csv`.
    constants :  Columns written with the same value on every row.
    """

    def __init__(
        self,
        log_dir: str,
        name: Optional[str]=None,
        unique_name: Optional[str]=None,
        backup_stdout: bool=False,
        activate: bool=True,
        level=LogLevel.WARNING,
        filename: str="metrics.csv",
        constants: Optional[DictLike[str, Any]]=None,
        *args, **kwargs
    ):
        super().__init__(log_dir, name, unique_name, backup_stdout, activate, level)
        self.constants = dict(constants or {})
        if not self.activate:
            return
        self.csv_file = os.path.join(self.log_dir, filename)
        self.csv_sep = ","
        self.csv_keys = ["step"] + list(self.constants.keys())
        self.csv_rows: List[DictLike[str, Any]] = []
        with open(self.csv_file, "w") as fp:
            fp.write(self.csv_sep.join(self.csv_keys) + "\n")

    def log_scalars(
        self,
        main_tag: Optional[str],
        tag_scalar_dict: DictLike[str, Union[float, int]],
        step: Optional[int]=None
    ):
        """Add a row of scalars to the CSV file.

        main_tag :  prefix of the column names, `main_tag/tag`. Ignored when None or empty.
        tag_scalar_dict :  the values to record.
        step :  global step of the row.
        """
        if not self.activate:
            return
        if main_tag:
            tag_scalar_dict = {main_tag+"/"+tag: value for tag, value in tag_scalar_dict.items()}
        row = dict(self.constants)
        row.update(tag_scalar_dict)
        row["step"] = int(step) if step is not None else len(self.csv_rows)
        self.csv_rows.append(row)

        extra_keys = sorted(set(row.keys()) - set(self.csv_keys))
        if extra_keys:
            self.csv_keys.extend(extra_keys)
            with open(self.csv_file, "w") as fp:
                fp.write(self.csv_sep.join(self.csv_keys) + "\n")
                for old_row in self.csv_rows:
                    fp.write(self._format_row(old_row) + "\n")
        else:
            with open(self.csv_file, "a") as fp:
                fp.write(self._format_row(row) + "\n")

    def log_scalar(self, tag: str, value: Union[float, int], step: Optional[int]=None):
        self.log_scalars(main_tag=None, tag_scalar_dict={tag: value}, step=step)

    def log_frame(self, frame: pd.DataFrame, filename: str) -> Optional[str]:
        """Write a whole table into the run dir, prefixed with the constant columns. """
        if not self.activate:
            return None
        frame = frame.copy()
        for idx, (key, value) in enumerate(self.constants.items()):
            frame.insert(idx, key, value)
        path = self.path(filename)
        frame.to_csv(path, index=False)
        return path

    def _format_row(self, row: DictLike[str, Any]) -> str:
        return self.csv_sep.join(str(row.get(key, "")) for key in self.csv_keys)
