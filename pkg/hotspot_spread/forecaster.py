"""
hotspot_spread.forecaster

用学习到的模型预测下一周热点
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from .exceptions import DimensionMismatch
from .hotspot import HotspotSeries
from .learner import SpreadingModel, estimate
from .utils.utils import raise_for_statement
from .weeks import EpiWeekCalendar


@dataclass
class ForecastResult:
    """
    一周的预测结果

    predictions[i] = 1 当且仅当 scores[i] > threshold_value（严格大于）。
    """

    scores: np.ndarray
    predictions: np.ndarray
    threshold_value: float
    target_week: str
    issued_week: str = ""
    subzone_ids: List[str] = field(default_factory=list)
    weights: List[float] = field(default_factory=list)


def activate(raw_estimates: Sequence[float]) -> np.ndarray:
    """逐元素 tanh"""
    return np.tanh(np.asarray(raw_estimates, dtype=float))


def indicator_threshold(scores: Sequence[float]) -> Tuple[np.ndarray, float]:
    """
    μ + σ 指示函数，σ 为总体标准差

    Args:
        scores (Sequence[float]): 激活后的得分

    Returns:
        Tuple[np.ndarray, float]: 0/1 预测与阈值
    """
    scores = np.asarray(scores, dtype=float).ravel()
    raise_for_statement(len(scores) >= 1, "得分向量为空", DimensionMismatch)
    mu = float(np.mean(scores))
    if np.ptp(scores) == 0:
        # 全部相等时 σ = 0，没有得分严格大于均值
        return np.zeros(len(scores), dtype=np.int8), mu
    threshold = mu + float(np.std(scores))
    return (scores > threshold).astype(np.int8), threshold


def forecast_next_week(
    model: SpreadingModel,
    hotspots: HotspotSeries,
    current_week: Union[int, str],
) -> ForecastResult:
    """
    预测 current_week 的下一周

    历史窗口相对训练前移一周：使用 ŷ^t .. ŷ^{t-H+1}。

    Args:
        model (SpreadingModel): 学习结果
        hotspots (HotspotSeries): 热点序列
        current_week (int | str): 当前周下标或标签

    Returns:
        ForecastResult: 预测结果
    """
    t = hotspots.week_index(current_week) if isinstance(current_week, str) else int(current_week)
    raise_for_statement(
        model.P.shape == (hotspots.N, hotspots.N),
        f"模型 {model.target_week} 的矩阵形状 {model.P.shape} 与 N={hotspots.N} 不符",
        DimensionMismatch,
    )
    history = hotspots.history(t, len(model.w), lag=0)
    scores = activate(estimate(model.P, model.w, history))
    predictions, threshold = indicator_threshold(scores)

    issued = hotspots.week_labels[t]
    if t + 1 < hotspots.T:
        target = hotspots.week_labels[t + 1]
    else:
        target = EpiWeekCalendar(hotspots.week_start).shift(issued, 1)
    return ForecastResult(
        scores=scores,
        predictions=predictions,
        threshold_value=threshold,
        target_week=target,
        issued_week=issued,
        subzone_ids=list(hotspots.subzone_ids),
        weights=[float(v) for v in model.w],
    )


def forecast_weeks(models: Sequence[SpreadingModel], hotspots: HotspotSeries) -> List[ForecastResult]:
    """对每个模型所在的周做一周预测"""
    return [forecast_next_week(model, hotspots, model.target_week) for model in models]
