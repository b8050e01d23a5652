"""
hotspot_spread.hotspot

将周计数转换为热点状态 y 与存在状态 ŷ
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .exceptions import DimensionMismatch, InsufficientHistory, InvalidThreshold
from .ingest import WeeklyCaseCounts
from .utils.utils import get_config, raise_for_statement
from .weeks import select_range


DEFAULT_THRESHOLD = get_config("hotspot").get("threshold", 3)


@dataclass
class HotspotSeries:
    """
    热点序列

    Args:
        y (np.ndarray): N×T 热点状态，l ≥ c 时为 1
        y_hat (np.ndarray): N×T 存在状态，l ≥ 1 时为 1
        c (int): 热点阈值
        week_labels (list): 周标签
        subzone_ids (list): 分区编号
        week_start (str): 每周起始日
    """

    y: np.ndarray
    y_hat: np.ndarray
    c: int
    week_labels: List[str]
    subzone_ids: List[str]
    week_start: str = "sunday"

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int8)
        self.y_hat = np.asarray(self.y_hat, dtype=np.int8)
        expected = (len(self.subzone_ids), len(self.week_labels))
        raise_for_statement(
            self.y.shape == expected and self.y_hat.shape == expected,
            f"热点矩阵形状 {self.y.shape}/{self.y_hat.shape} 与期望的 {expected} 不符",
            DimensionMismatch,
        )

    @property
    def N(self) -> int:
        return len(self.subzone_ids)

    @property
    def T(self) -> int:
        return len(self.week_labels)

    def week_index(self, label: str) -> int:
        raise_for_statement(label in self.week_labels, f"序列中没有周 {label}", InsufficientHistory)
        return self.week_labels.index(label)

    def history(self, t: int, H: int, lag: int = 1) -> np.ndarray:
        """
        取 H 列存在状态，最近的一列在前

        lag=1 时为训练用的 ŷ^{t-1} .. ŷ^{t-H}，lag=0 时为预测用的 ŷ^t .. ŷ^{t-H+1}。

        Args:
            t (int): 周下标
            H (int): 回看周数
            lag (int): 最近一列相对 t 的偏移

        Returns:
            np.ndarray: N×H 矩阵
        """
        oldest = t - lag - H + 1
        raise_for_statement(
            0 <= oldest and t < self.T,
            f"周 {self.week_labels[t] if 0 <= t < self.T else t} 之前不足 {H} 周历史",
            InsufficientHistory,
        )
        columns = [t - lag - h for h in range(H)]
        return self.y_hat[:, columns].astype(float)

    def select_weeks(self, week_range: Optional[str]) -> "HotspotSeries":
        labels = select_range(self.week_labels, week_range)
        columns = [self.week_labels.index(label) for label in labels]
        return HotspotSeries(
            y=self.y[:, columns],
            y_hat=self.y_hat[:, columns],
            c=self.c,
            week_labels=labels,
            subzone_ids=list(self.subzone_ids),
            week_start=self.week_start,
        )


def binarize(counts: WeeklyCaseCounts, c: int = DEFAULT_THRESHOLD) -> HotspotSeries:
    """
    按阈值 c 生成热点状态与存在状态

    Args:
        counts (WeeklyCaseCounts): 周计数矩阵
        c (int): 热点阈值，至少为 1

    Returns:
        HotspotSeries: 热点序列
    """
    raise_for_statement(int(c) == c and c >= 1, f"热点阈值必须是不小于 1 的整数，当前为 {c}", InvalidThreshold)
    c = int(c)
    return HotspotSeries(
        y=(counts.counts >= c).astype(np.int8),
        y_hat=(counts.counts >= 1).astype(np.int8),
        c=c,
        week_labels=list(counts.week_labels),
        subzone_ids=list(counts.subzone_ids),
        week_start=counts.week_start,
    )
