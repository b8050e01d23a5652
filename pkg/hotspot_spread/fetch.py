"""
hotspot_spread.fetch

数据集下载管理器：按来源列表并发下载周快照 CSV 与分区边界文件
"""

import asyncio
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

from .exceptions import InvalidConfig
from .utils.network import HEADERS, get_client
from .utils.utils import get_config, raise_for_statement, reads_input


LOGGER = logging.getLogger(__name__)


@dataclass
class DownloadTask:
    """下载任务"""
    url: str
    filepath: str
    filename: str
    total_size: int = 0
    downloaded: int = 0
    status: str = "pending"  # pending, downloading, completed, failed, skipped
    error: Optional[str] = None


@dataclass
class FetchReport:
    tasks: List[DownloadTask] = field(default_factory=list)

    @property
    def success(self) -> int:
        return sum(task.status in ("completed", "skipped") for task in self.tasks)

    @property
    def failed(self) -> int:
        return sum(task.status == "failed" for task in self.tasks)

    @property
    def errors(self) -> List[str]:
        return [f"{task.filename}: {task.error}" for task in self.tasks if task.status == "failed"]


@reads_input
def load_sources(path: Optional[Union[str, Path]] = None) -> List[Dict[str, str]]:
    """
    读取来源列表

    Args:
        path (str | Path): JSON 文件，内容为 {"files": [{"url": ..., "filename": ...}]} 或直接为列表，
            默认使用内置的 sources 配置

    Returns:
        List[Dict[str, str]]: 来源列表
    """
    if path is None:
        entries = get_config("sources").get("files", [])
    else:
        with open(path, encoding="utf8") as f:
            data = json.load(f)
        entries = data.get("files", []) if isinstance(data, dict) else data
    for entry in entries:
        raise_for_statement(
            isinstance(entry, dict) and "url" in entry,
            f"来源条目缺少 url: {entry}",
            InvalidConfig,
        )
    return [
        {"url": entry["url"], "filename": entry.get("filename") or entry["url"].rstrip("/").rsplit("/", 1)[-1]}
        for entry in entries
    ]


class Downloader:
    """数据集下载管理器"""

    def __init__(self, max_concurrent: int = 3, client=None):
        """
        Args:
            max_concurrent (int): 最大并发下载数
            client: 下载客户端，默认使用全局 DownloadClient
        """
        raise_for_statement(max_concurrent >= 1, "max_concurrent 至少为 1", InvalidConfig)
        self.max_concurrent = max_concurrent
        self.semaphore = asyncio.Semaphore(max_concurrent)
        self.client = client or get_client()

    async def download_single(
        self,
        url: str,
        filepath: str,
        force: bool = False,
        progress_callback: Optional[Callable[[DownloadTask], None]] = None,
    ) -> DownloadTask:
        """
        下载单个文件，已存在的文件在 force 为 False 时跳过

        Args:
            url (str): 下载链接
            filepath (str): 保存路径
            force (bool): 覆盖已存在的文件
            progress_callback (Callable[[DownloadTask], None]): 进度回调

        Returns:
            DownloadTask: 任务状态
        """
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        task = DownloadTask(url=url, filepath=filepath, filename=Path(filepath).name)

        if Path(filepath).exists() and not force:
            task.status = "skipped"
            LOGGER.info("%s 已存在，跳过", filepath)
            if progress_callback:
                progress_callback(task)
            return task

        partial = Path(f"{filepath}.part")
        try:
            task.status = "downloading"
            if progress_callback:
                progress_callback(task)

            dwn_id = await self.client.download_create(url, HEADERS)
            task.total_size = self.client.download_content_length(dwn_id)
            try:
                with open(partial, "wb") as f:
                    while True:
                        chunk = await self.client.download_chunk(dwn_id)
                        if not chunk:
                            break
                        f.write(chunk)
                        task.downloaded += len(chunk)
            finally:
                await self.client.download_close(dwn_id)
            partial.replace(filepath)
            task.status = "completed"
        except Exception as e:
            partial.unlink(missing_ok=True)
            task.status = "failed"
            task.error = str(e)
            LOGGER.warning("下载 %s 失败: %s", url, e)

        if progress_callback:
            progress_callback(task)
        return task

    async def download_batch(
        self,
        sources: List[Dict[str, str]],
        out_dir: Union[str, Path],
        force: bool = False,
        progress_callback: Optional[Callable[[int, int, str], None]] = None,
    ) -> FetchReport:
        """
        批量下载

        Args:
            sources (List[Dict[str, str]]): 来源列表
            out_dir (str | Path): 保存目录
            force (bool): 覆盖已存在的文件
            progress_callback (Callable[[int, int, str], None]): 批量进度回调

        Returns:
            FetchReport: 每个任务的状态
        """
        done = 0

        async def download_wrapper(entry):
            nonlocal done
            async with self.semaphore:
                task = await self.download_single(entry["url"], str(Path(out_dir) / entry["filename"]), force)
            done += 1
            if progress_callback:
                progress_callback(done, len(sources), task.filename)
            return task

        tasks = await asyncio.gather(*[download_wrapper(entry) for entry in sources])
        return FetchReport(tasks=list(tasks))
