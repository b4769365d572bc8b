from SkillRL.exp.argparse import parse_args, parse_file_args, parse_set_pairs, update_args
from SkillRL.exp._seed import set_seed, make_rng, derive_seed, rng_state, restore_rng
from SkillRL.exp.config import get_profile, validate_config, fingerprint_config, PROFILES

from SkillRL.logger import CsvLogger, LogLevel
from SkillRL.logger import logger as skillrl_internal_logger
from SkillRL.misc.chore import hash_config
from SkillRL.misc.namespace import NameSpace

import os
from dataclasses import dataclass
from typing import Optional

RUN_ROOT_ENV = "SKILLRL_RUN_ROOT"

_LEVELS = {
    "debug": LogLevel.DEBUG,
    "warning": LogLevel.WARNING,
    "error": LogLevel.ERROR,
    "info": LogLevel.INFO,
}


@dataclass
class RunContext:
    config: NameSpace
    logger: CsvLogger
    config_hash: str
    seed: int

    @property
    def run_dir(self) -> str:
        return self.logger.log_dir


def run_root() -> str:
    return os.environ.get(RUN_ROOT_ENV, "./runs")


def setup(config: NameSpace, command: str, run_name: Optional[str]=None) -> RunContext:
    """Seed every generator, open the run directory and snapshot the resolved config.

    The run directory is `$SKILLRL_RUN_ROOT/<command>-<MM-DD-HH-MM>-<pid>` unless `run_name` is given.
    Every CSV row written through the returned logger carries the config hash and seed.

    :param config: the resolved configuration.
    :param command: name of the CLI command, used as the run name prefix.
    :param run_name: exact name of the run directory.
    """
    seed = set_seed(config.seed)
    config_hash = hash_config(fingerprint_config(config.as_dict()))
    level = _LEVELS[config.log.level]
    skillrl_internal_logger.set_level(level)
    run_logger = CsvLogger(
        run_root(),
        name=command,
        unique_name=run_name,
        backup_stdout=config.log.backup_stdout,
        level=level,
        constants={"config_hash": config_hash, "seed": seed},
    )
    run_logger.log_config(config)
    run_logger.info(f"[{command}] run dir {run_logger.log_dir}, config hash {config_hash}, seed {seed}")
    return RunContext(config=config, logger=run_logger, config_hash=config_hash, seed=seed)
