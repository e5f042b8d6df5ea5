"""
辅助工具函数模块
"""
import json
import logging
from pathlib import Path
from typing import Optional

import yaml

from .. import config
from ..core.errors import PreconditionError, SchemaError

logger = logging.getLogger(__name__)


def ensure_directory(directory_path):
    """确保目录存在"""
    path = Path(directory_path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def load_document(file_path, field: str = ""):
    """读取 JSON 或 YAML 文档（按扩展名，.yaml/.yml 之外一律按 JSON）"""
    path = Path(file_path)
    if not path.is_file():
        raise PreconditionError(f"文件不存在: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise SchemaError(f"无法解析 {path.name}: {e}", field or path.name) from e


def parse_inline(text: str, field: str):
    """解析命令行上的 JSON 字面量，例如 "[-1,2]" """
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"无法解析 JSON: {text}", field) from e


def parse_float_list(text: Optional[str], field: str):
    """逗号分隔或 JSON 数组形式的数列"""
    if text is None:
        return None
    text = text.strip()
    values = parse_inline(text, field) if text.startswith("[") else [v for v in text.split(",") if v.strip()]
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError) as e:
        raise SchemaError(f"数列中含非数值: {text}", field) from e


def apply_overrides(overrides: Optional[dict]) -> dict:
    """把 --config 文件中的容差写回 config 模块，返回被替换的旧值"""
    if not overrides:
        return {}
    if not isinstance(overrides, dict):
        raise SchemaError("配置文件必须是键值对象", "config")
    for key, value in overrides.items():
        if key not in config.OVERRIDABLE:
            raise SchemaError(f"不可覆盖的配置项: {key}", f"config.{key}")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            raise SchemaError(f"配置项必须是正数: {key}={value}", f"config.{key}")
    previous = {key: getattr(config, key) for key in overrides}
    for key, value in overrides.items():
        setattr(config, key, type(previous[key])(value))
    logger.info(f"本次运行覆盖的配置: {sorted(overrides)}")
    return previous

