"""
hotspot_spread.utils.utils

通用工具库
"""

import functools
import hashlib
import json
import os
from pathlib import Path
from typing import Callable, Type, TypeVar, Union

import pandas as pd

from ..exceptions import HotspotSpreadError, InputNotFound, MalformedInput


CONFIG_ROOT_ENV = "HOTSPOT_SPREAD_CONFIG_ROOT"

T = TypeVar("T")


def get_config_root() -> str:
    """
    获取默认配置目录，环境变量 HOTSPOT_SPREAD_CONFIG_ROOT 优先

    Returns:
        str: 配置目录
    """
    root = os.environ.get(CONFIG_ROOT_ENV)
    if root:
        return os.path.abspath(root)
    return os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "data", "config"))


def get_config(field: str, *args) -> dict:
    """
    获取默认配置

    Args:
        field (str): 配置所属分类

    Returns:
        dict: 配置
    """
    path = os.path.join(get_config_root(), f"{field.lower()}.json")
    if os.path.exists(path):
        with open(path, encoding="utf8") as f:
            data = json.load(f)
            for arg in args:
                data = data[arg]
            return data
    else:
        return {}


def raise_for_statement(
    statement: bool,
    msg: str = "未满足条件",
    exc: Type[HotspotSpreadError] = HotspotSpreadError,
) -> None:
    if not statement:
        raise exc(msg)


def file_digest(path: Union[str, Path]) -> str:
    """
    计算文件内容的 sha256 摘要

    Args:
        path (str | Path): 文件路径

    Returns:
        str: 十六进制摘要
    """
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def reads_input(func: Callable[..., T]) -> Callable[..., T]:
    """
    把读取第一个参数所指文件时的底层异常转为 DataError

    文件不存在或无法打开为 InputNotFound；编码、JSON 或 CSV 结构错误为 MalformedInput。
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        path = args[0] if args else kwargs.get("path")
        try:
            return func(*args, **kwargs)
        except OSError as e:
            raise InputNotFound(f"{path}: 无法读取 ({e.strerror or e})") from e
        except (UnicodeDecodeError, json.JSONDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise MalformedInput(f"{path}: 格式错误 ({e})") from e

    return wrapper
