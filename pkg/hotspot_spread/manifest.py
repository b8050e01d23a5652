"""
hotspot_spread.manifest

运行清单：记录命令、完整配置、输入文件摘要、随机种子与时间
"""

from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from .serialization import read_json, write_json
from .utils.utils import file_digest


MANIFEST_NAME = "manifest.json"


def hash_inputs(paths: Iterable[Union[str, Path]]) -> Dict[str, str]:
    """
    计算输入文件的 sha256，目录按其中的文件逐个计算（跳过其中的运行清单）

    Args:
        paths (Iterable): 文件或目录

    Returns:
        Dict[str, str]: 路径到摘要的映射，按路径排序
    """
    hashes = {}
    for path in paths:
        path = Path(path)
        files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
        for file in files:
            if file.name == MANIFEST_NAME:
                continue
            hashes[str(file)] = file_digest(file)
    return dict(sorted(hashes.items()))


@dataclass
class RunManifest:
    command: str
    config_snapshot: Dict[str, Any]
    input_hashes: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @classmethod
    def create(
        cls,
        command: str,
        config_snapshot: Dict[str, Any],
        inputs: Iterable[Union[str, Path]] = (),
        seed: Optional[int] = None,
    ) -> "RunManifest":
        return cls(command=command, config_snapshot=config_snapshot, input_hashes=hash_inputs(inputs), seed=seed)

    def write(self, out_dir: Union[str, Path]) -> Path:
        """写出 <out_dir>/manifest.json，已有的清单被覆盖"""
        path = Path(out_dir) / MANIFEST_NAME
        write_json(asdict(self), path)
        return path

    @classmethod
    def read(cls, out_dir: Union[str, Path]) -> "RunManifest":
        return cls(**read_json(Path(out_dir) / MANIFEST_NAME))
