from typing import Any, Dict, List, Optional, Sequence, Union

import json

import yaml

from SkillRL.misc.namespace import NameSpace
from SkillRL.misc.chore import safe_eval
from SkillRL.misc.errors import ConfigError
from SkillRL.logger import logger
from SkillRL.exp.config import get_profile, validate_config, DESK


def parse_file_args(path: Optional[str]) -> Dict[str, Any]:
    """Parse a json or yaml config file into a nested dict. `None` gives an empty dict. """
    if path is None:
        return {}
    try:
        with open(path, "r") as fp:
            if path.endswith(".json"):
                file_args = json.load(fp)
            elif path.endswith(".yaml") or path.endswith(".yml"):
                file_args = yaml.safe_load(fp)
            else:
                raise ConfigError("--config", f"unsupported config file type: {path}")
    except OSError as e:
        raise ConfigError("--config", f"cannot read {path}: {e.strerror}")
    except yaml.YAMLError as e:
        raise ConfigError("--config", f"malformed yaml in {path}: {e}")
    if file_args is None:
        return {}
    if not isinstance(file_args, dict):
        raise ConfigError("--config", f"{path} must contain a mapping at the top level")
    return file_args


def parse_set_pairs(pairs: Optional[Sequence[str]]) -> Dict[str, Any]:
    """Turn `["a.b=1", "c=foo"]` into `{"a.b": 1, "c": "foo"}`, evaluating values safely. """
    parsed = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(pair, "expected KEY=VALUE")
        key, value = pair.split("=", 1)
        key = key.strip()
        for _ in range(2):
            if key.startswith("-"):
                key = key[1:]
        parsed[key] = safe_eval(value.strip())
    return parsed


def update_args(args: Dict[str, Any], new_args: Optional[Union[dict, list]]=None, strict: bool=True) -> Dict[str, Any]:
    """Update the nested arguments with a flat dict (or list of key, value pairs) of dotted keys.

    Parameters
    ----------
    args :  The nested argument dict to update in place.
    new_args :  New (command line) arguments, keys are dotted paths such as `skill.lr`.
    strict :  Whether an unknown key raises ConfigError instead of being added.
    """
    if new_args is None:
        return args
    if isinstance(new_args, list):
        num = len(new_args)//2
        new_args = dict(zip([new_args[2*i] for i in range(num)], [new_args[2*i+1] for i in range(num)]))
    for new_key, new_value in new_args.items():
        keys = new_key.split(".")
        this = args
        for kidx, k in enumerate(keys[:-1]):
            if k not in this or not isinstance(this[k], dict):
                if strict:
                    raise ConfigError(".".join(keys[:kidx+1]), "unknown key")
                this[k] = {}
            this = this[k]
        last_k = keys[-1]
        if last_k not in this:
            if strict:
                raise ConfigError(new_key, "unknown key")
            logger.warning(f"update_args: key {new_key} is not in the config, setting it to {new_value}.")
        else:
            logger.debug(f"update_args: overwriting key {new_key} with {new_value}.")
        this[last_k] = new_value
    return args


def _merge_nested(base: Dict[str, Any], new: Dict[str, Any], prefix: str="") -> Dict[str, Any]:
    for key, value in new.items():
        dotted = prefix + str(key)
        if key not in base:
            raise ConfigError(dotted, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(dotted, f"expected a section, got {value!r}")
            _merge_nested(base[key], value, dotted + ".")
        else:
            base[key] = value
    return base


def parse_args(
    path: Optional[str]=None,
    profile: Optional[str]=None,
    overrides: Optional[Sequence[str]]=None,
    convert: bool=True,
) -> Union[NameSpace, Dict[str, Any]]:
    """
    Resolve the run configuration in layers: built-in profile, then the config file at `path`,
    then the command-line `KEY=VALUE` overrides. The profile is taken from `profile`, else from
    the file's `profile` key, else `desk`. The result is validated and, by default, wrapped into
    a `NameSpace` supporting both dict look-up and attribute access.

    Parameters
    ----------
    path :  The path to a yaml or json config file, optional.
    profile :  Name of the built-in profile to start from.
    overrides :  A list of `dotted.key=value` strings applied last.
    convert :  Whether or not convert the parsed arguments to a NameSpace object.
    """
    file_args = parse_file_args(path)
    set_args = parse_set_pairs(overrides)
    profile = profile or set_args.get("profile") or file_args.get("profile") or DESK["profile"]
    config = get_profile(profile)
    _merge_nested(config, file_args)
    update_args(config, set_args, strict=True)
    config["profile"] = profile
    validate_config(config)
    if convert:
        config = NameSpace("config", config, nested=True)
    return config
