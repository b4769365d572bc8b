from typing import Optional


class SkillRLError(Exception):
    """
    Base class of every error raised by SkillRL. The command line entry converts these into
    exit status 1, anything else is treated as a crash.
    """
    pass


class ConfigError(SkillRLError):
    """
    Raised when a configuration value is unknown or out of range. 
    
    Parameters
    ----------
    key :  The dotted path of the offending key, e.g. `skill.latent_dim`. 
    msg :  A description of the violation. 
    """
    def __init__(self, key: str, msg: str) -> None:
        self.key = key
        super().__init__(f"{key}: {msg}")


class SimulationError(SkillRLError):
    pass


class ClipFormatError(SkillRLError):
    """
    Raised when a motion clip file cannot be parsed. `position` is either a `line:column` 
    location in the document or the path of the offending field. 
    """
    def __init__(self, path: str, position: str, msg: str) -> None:
        self.path = path
        self.position = position
        super().__init__(f"{path} [{position}]: {msg}")


class CheckpointError(SkillRLError):
    def __init__(self, path: str, offset: Optional[int], msg: str) -> None:
        self.path = path
        self.offset = offset
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{path}{where}: {msg}")


class UnreachableError(SkillRLError):
    pass


class InsufficientDataError(SkillRLError):
    pass


class ShapeError(SkillRLError, ValueError):
    pass


class ParameterError(SkillRLError, ValueError):
    """Raised when a generator parameter lies outside its documented range. """
    def __init__(self, name: str, value, lo, hi) -> None:
        self.name = name
        super().__init__(f"{name}={value} outside [{lo}, {hi}]")
