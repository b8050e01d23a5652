"""
hotspot_spread.config

分层配置：内置默认值 ← 配置文件（YAML / TOML / JSON） ← 命令行参数
"""

import copy
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from .exceptions import InvalidConfig
from .utils.utils import get_config, raise_for_statement


LOGGER = logging.getLogger(__name__)

SECTIONS = ("ingest", "hotspot", "learner", "analysis", "synth")

# 顶层 seed 会同步到这些分区
SEEDED_SECTIONS = ("learner", "synth")


def defaults() -> Dict[str, Any]:
    """内置默认配置"""
    resolved = {section: copy.deepcopy(get_config(section)) for section in SECTIONS}
    resolved["seed"] = resolved["learner"].get("seed", 0)
    return resolved


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取用户配置文件，按扩展名选择解析器

    Args:
        path (str | Path): .yaml/.yml、.toml 或 .json 文件

    Returns:
        dict: 配置内容
    """
    path = Path(path)
    raise_for_statement(path.exists(), f"配置文件不存在: {path}", InvalidConfig)
    suffix = path.suffix.lower()
    try:
        if suffix in (".yaml", ".yml"):
            with open(path, encoding="utf8") as f:
                data = yaml.safe_load(f) or {}
        elif suffix == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        elif suffix == ".json":
            with open(path, encoding="utf8") as f:
                data = json.load(f)
        else:
            raise InvalidConfig(f"不支持的配置文件格式: {path}")
    except (yaml.YAMLError, tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise InvalidConfig(f"无法解析配置文件 {path}: {e}")
    raise_for_statement(isinstance(data, dict), f"配置文件 {path} 的顶层必须是映射", InvalidConfig)
    return data


def _merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def _check_sections(data: Mapping[str, Any], origin: str) -> None:
    unknown = set(data) - set(SECTIONS) - {"seed"}
    raise_for_statement(not unknown, f"{origin} 中有未知的配置分区: {sorted(unknown)}", InvalidConfig)


def resolve_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    """
    合成最终配置

    显式给出的顶层 seed（来自配置文件或命令行）覆盖 learner 与 synth 中的 seed。

    Args:
        path (str | Path): 用户配置文件
        overrides (Mapping): 命令行参数，值为 None 的项忽略

    Returns:
        dict: 完整配置，即运行清单中的 config_snapshot
    """
    resolved = defaults()
    explicit_seed = None
    for origin, layer in ((str(path), load_config_file(path) if path else {}), ("命令行参数", overrides or {})):
        _check_sections(layer, origin)
        _merge(resolved, layer)
        if layer.get("seed") is not None:
            explicit_seed = layer["seed"]

    if explicit_seed is not None:
        raise_for_statement(int(explicit_seed) == explicit_seed, f"seed 必须是整数: {explicit_seed}", InvalidConfig)
        for section in SEEDED_SECTIONS:
            resolved[section]["seed"] = int(explicit_seed)
    LOGGER.debug("配置: %s", resolved)
    return resolved
