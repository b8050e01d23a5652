"""
hotspot_spread.utils.network

数据集下载用的网络模块，仅支持 curl_cffi
"""

from dataclasses import dataclass
from typing import Any, AsyncIterator, Dict, Optional

from curl_cffi import requests

from ..exceptions import DownloadError
from .utils import get_config


HEADERS: Dict[str, str] = dict(get_config("sources").get("headers", {}))


@dataclass
class _Stream:
    session: requests.AsyncSession
    response: Any
    chunks: AsyncIterator[bytes]


class DownloadClient:
    """
    流式下载客户端

    每个流独占一个 AsyncSession，用编号引用，读完后需调用 download_close。
    """

    def __init__(self, impersonate: Optional[str] = None):
        self.impersonate = impersonate
        self._streams: Dict[int, _Stream] = {}
        self._next_id = 0

    async def download_create(self, url: str, headers: Optional[dict] = None) -> int:
        """
        打开一个下载流

        Args:
            url (str): 数据文件地址
            headers (dict): 请求头，缺省用配置中的 headers

        Returns:
            int: 流编号
        """
        session = requests.AsyncSession(impersonate=self.impersonate) if self.impersonate else requests.AsyncSession()
        response = await session.get(url, headers=dict(HEADERS if headers is None else headers), stream=True)
        if response.status_code != 200:
            await session.close()
            raise DownloadError(f"HTTP 错误 {response.status_code}: {url}")
        self._next_id += 1
        self._streams[self._next_id] = _Stream(session, response, response.aiter_content())
        return self._next_id

    def download_content_length(self, stream_id: int) -> int:
        # 服务器未给出长度时为 0
        return int(self._streams[stream_id].response.headers.get("content-length") or 0)

    async def download_chunk(self, stream_id: int) -> bytes:
        """读取下一块数据，流结束时返回空字节串"""
        return await anext(self._streams[stream_id].chunks, b"")

    async def download_close(self, stream_id: int) -> None:
        stream = self._streams.pop(stream_id, None)
        if stream is not None:
            await stream.session.close()


_shared_client: Optional[DownloadClient] = None


def get_client() -> DownloadClient:
    """进程内共享的下载客户端"""
    global _shared_client
    if _shared_client is None:
        _shared_client = DownloadClient(get_config("sources").get("impersonate"))
    return _shared_client
