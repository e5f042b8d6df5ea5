"""
产物写出

JSON 或 CSV，写入临时文件后 os.replace，未指定路径时输出到 stdout。
"""
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..core.errors import PreconditionError

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")


def _default(value):
    """numpy 标量与数组的 JSON 编码"""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"无法序列化 {type(value).__name__}")


def render_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True, default=_default) + "\n"


def render_csv(data: Union[pd.DataFrame, list, dict]) -> str:
    """表格化输出；dict 按一行处理"""
    if isinstance(data, pd.DataFrame):
        frame = data
    elif isinstance(data, dict):
        frame = pd.json_normalize(data)
    else:
        frame = pd.DataFrame(list(data))
    return frame.to_csv(index=False)


def write_artifact(data, out: Optional[str] = None, fmt: str = "json") -> Optional[str]:
    """写出一个产物

    Args:
        data: 可 JSON 序列化的对象，或 CSV 用的 DataFrame / 记录列表
        out: 目标路径，None 表示 stdout
        fmt: json 或 csv

    Returns:
        写入的文件路径，stdout 时为 None
    """
    if fmt not in FORMATS:
        raise PreconditionError(f"未知的输出格式: {fmt}")
    text = render_csv(data) if fmt == "csv" else render_json(data)
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None

    target = Path(out)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, target)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info(f"产物已写入: {target}")
    return str(target)
