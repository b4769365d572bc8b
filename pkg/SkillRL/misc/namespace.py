from typing import Any, Dict, Iterator
from collections.abc import Mapping

# `NameSpace` wraps a (nested) config dict so that every level supports both
# attribute access (`cfg.skill.latent_dim`) and dict access (`cfg["skill"]["latent_dim"]`).
# Nested dicts are converted eagerly, lists are kept as they are.


class NameSpace(Mapping):
    """
    A read-mostly view of a nested configuration.

    Parameters
    ----------
    name :  The name of this level, only used for printing.
    maps :  The dict to wrap.
    nested :  Whether to convert nested dicts into NameSpace as well. Default is True.
    """
    def __init__(self, name: str, maps: Dict[str, Any], nested: bool=True) -> None:
        object.__setattr__(self, "_name", name)
        data = {}
        for key, value in maps.items():
            if nested and isinstance(value, Mapping) and not isinstance(value, NameSpace):
                value = NameSpace(key, value, nested=True)
            data[key] = value
        object.__setattr__(self, "_data", data)

    def __getattr__(self, key: str) -> Any:
        if key.startswith("_"):
            raise AttributeError(key)
        try:
            return self._data[key]
        except KeyError:
            raise AttributeError(f"{self._name} has no attribute {key}") from None

    def __setattr__(self, key: str, value: Any) -> None:
        self[key] = value

    def __getitem__(self, key: str) -> Any:
        return self._data[key]

    def __setitem__(self, key: str, value: Any) -> None:
        if isinstance(value, Mapping) and not isinstance(value, NameSpace):
            value = NameSpace(key, value)
        self._data[key] = value

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self) -> str:
        return f"<NameSpace: {self._name}>"

    def __str__(self, indent: int=0) -> str:
        lines = [repr(self)] if indent == 0 else []
        for key, value in self._data.items():
            if isinstance(value, NameSpace):
                lines.append("{}|{}:".format("\t"*indent, key))
                lines.append(value.__str__(indent+1))
            else:
                lines.append("{}|{}: {}".format("\t"*indent, key, value))
        return "\n".join(lines)

    def as_dict(self) -> Dict[str, Any]:
        return {
            key: value.as_dict() if isinstance(value, NameSpace) else value
                for key, value in self._data.items()
        }
