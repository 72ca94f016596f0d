"""Load SystemConfig from flat key=value files or JSON."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from pydantic import ValidationError

from tripartite_optomech.constants import TWO_PI
from tripartite_optomech.exceptions import ConfigError
from tripartite_optomech.params import SystemConfig

logger = logging.getLogger(__name__)

FLAT_SUFFIXES = (".cfg", ".conf", ".ini", ".txt")
HZ_SUFFIX = "_hz"

KeyPath = Tuple[str, ...]


def _parse_value(raw: str) -> Any:
    value = raw.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    lowered = value.lower()
    if lowered in ("none", "null"):
        return None
    try:
        return float(value)
    except ValueError:
        return value


def _convert_hz(key: str, value: Any, where: str) -> Tuple[str, Any]:
    """Strip a trailing _hz and turn the value into an angular frequency."""
    if not key.endswith(HZ_SUFFIX):
        return key, value
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{where}: '{key}' must be numeric, got {value!r}")
    return key[: -len(HZ_SUFFIX)], TWO_PI * float(value)


def _insert(tree: Dict[str, Any], path: KeyPath, value: Any, where: str) -> None:
    node = tree
    for part in path[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"{where}: '{'.'.join(path)}' conflicts with scalar key '{part}'")
        node = child
    if path[-1] in node:
        raise ConfigError(f"{where}: duplicate key '{'.'.join(path)}'")
    node[path[-1]] = value


def parse_flat_config(text: str, source: str = "<string>") -> SystemConfig:
    """
    Parse the flat `key = value` configuration format.

    One assignment per line; `#` starts a comment; dotted keys address the
    `geometric`, `effective` and `drive` blocks; keys ending in `_hz` are
    multiplied by 2 pi.

    Args:
        text: File contents
        source: Name used in error messages

    Returns:
        Validated SystemConfig

    Raises:
        ConfigError: On malformed, duplicate or unknown keys, naming the line
    """
    tree: Dict[str, Any] = {}
    origins: Dict[KeyPath, int] = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        where = f"{source}:{lineno}"
        if "=" not in content:
            raise ConfigError(f"{where}: expected 'key = value', got {content!r}")
        raw_key, raw_value = content.split("=", 1)
        parts = [p.strip() for p in raw_key.strip().split(".")]
        if not all(parts) or not raw_value.strip():
            raise ConfigError(f"{where}: malformed assignment {content!r}")

        value = _parse_value(raw_value)
        leaf, value = _convert_hz(parts[-1], value, where)
        path: KeyPath = (*parts[:-1], leaf)
        _insert(tree, path, value, where)
        origins[path] = lineno

    logger.debug(f"Parsed {len(origins)} keys from {source}")
    return _validate(tree, source, origins)


def _convert_hz_tree(data: Dict[str, Any], source: str) -> Dict[str, Any]:
    converted: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = _convert_hz_tree(value, source)
        else:
            key, value = _convert_hz(key, value, source)
        if key in converted:
            raise ConfigError(f"{source}: duplicate key '{key}' after _hz conversion")
        converted[key] = value
    return converted


def _validate(
    data: Dict[str, Any], source: str, origins: Optional[Dict[KeyPath, int]] = None
) -> SystemConfig:
    try:
        return SystemConfig.model_validate(data)
    except ValidationError as e:
        messages = []
        for err in e.errors():
            loc = tuple(str(p) for p in err["loc"])
            lineno = (origins or {}).get(loc)
            prefix = f"{source}:{lineno}" if lineno is not None else source
            messages.append(f"{prefix}: {'.'.join(loc) or '<root>'}: {err['msg']}")
        logger.error(f"Invalid configuration in {source}")
        raise ConfigError("\n".join(messages)) from e


def load_config(file_path: Union[str, Path]) -> SystemConfig:
    """
    Load a SystemConfig from a flat config file or a JSON document.

    Args:
        file_path: Path to a .cfg/.conf/.ini/.txt or .json file

    Returns:
        Validated SystemConfig

    Raises:
        ConfigError: If the file is missing, has an unsupported suffix or is invalid
    """
    path = Path(file_path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    suffix = path.suffix.lower()
    logger.info(f"Loading configuration: {path}")
    if suffix == ".json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}: invalid JSON ({e.msg})") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top-level JSON value must be an object")
        return _validate(_convert_hz_tree(data, str(path)), str(path))
    if suffix in FLAT_SUFFIXES:
        return parse_flat_config(path.read_text(encoding="utf-8"), source=str(path))
    raise ConfigError(
        f"Unsupported config format: {path.suffix}. Use {', '.join(FLAT_SUFFIXES)} or .json"
    )
