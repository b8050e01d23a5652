"""
hotspot_spread.progress

批量任务（逐周学习、数据集下载）的终端进度显示，输出到 stderr
"""

import sys
from typing import Callable, List, Optional, TextIO


def format_size(size: int) -> str:
    """格式化文件大小"""
    if size < 1024:
        return f"{size}B"
    elif size < 1024 * 1024:
        return f"{size/1024:.1f}KB"
    elif size < 1024 * 1024 * 1024:
        return f"{size/(1024*1024):.1f}MB"
    else:
        return f"{size/(1024*1024*1024):.1f}GB"


class BatchProgressDisplay:
    """批量任务进度显示"""

    def __init__(self, label: str = "批量任务", stream: Optional[TextIO] = None, enabled: bool = True):
        """
        Args:
            label (str): 任务名称
            stream (TextIO): 输出流，默认 stderr
            enabled (bool): 为 False 时不输出
        """
        self.label = label
        self.stream = stream or sys.stderr
        self.enabled = enabled
        self.current = 0
        self.total = 0
        self.current_title = ""

    def update_progress(self, current: int, total: int, title: str):
        """更新进度"""
        self.current = current
        self.total = total
        self.current_title = title
        if not self.enabled:
            return
        progress = (current / total) * 100 if total > 0 else 0
        print(
            f"\r📦 {self.label}: {current}/{total} ({progress:.1f}%) - 当前: {title}",
            end="",
            flush=True,
            file=self.stream,
        )

    def finish(self, success_count: int, failed_count: int, errors: Optional[List[str]] = None):
        """输出汇总，只列出前 5 个错误"""
        if not self.enabled:
            return
        print(f"\n✅ {self.label}完成!", file=self.stream)
        print(f"   成功: {success_count}", file=self.stream)
        print(f"   失败: {failed_count}", file=self.stream)

        if errors and failed_count > 0:
            print("\n❌ 错误详情:", file=self.stream)
            for error in errors[:5]:
                print(f"   - {error}", file=self.stream)
            if len(errors) > 5:
                print(f"   ... 还有 {len(errors) - 5} 个错误", file=self.stream)

    def callback(self) -> Callable[[int, int, str], None]:
        return self.update_progress
