"""
hotspot_spread.evaluation

预测评估：逐周混淆矩阵与指标、按年汇总、时间权重分布
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DimensionMismatch, EmptyInput
from .forecaster import ForecastResult
from .hotspot import HotspotSeries
from .utils.utils import raise_for_statement
from .weeks import year_of


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


@dataclass
class WeeklyScore:
    week: str
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass
class WeightStats:
    min: float
    median: float
    mean: float
    max: float


@dataclass
class YearlySummary:
    """
    年度汇总

    macro 为逐周指标的算术平均，micro 为合并混淆矩阵后的指标；标准差为总体标准差。
    """

    year: str
    weeks: int
    accuracy_mean: float
    accuracy_std: float
    precision_mean: float
    recall_mean: float
    f1_mean: float
    micro: Dict[str, float] = field(default_factory=dict)
    weight_stats: List[WeightStats] = field(default_factory=list)


def confusion_counts(predictions: Sequence[int], observations: Sequence[int]) -> Confusion:
    """
    逐元素统计 TP/FP/TN/FN

    Args:
        predictions (Sequence[int]): 0/1 预测
        observations (Sequence[int]): 0/1 观测

    Returns:
        Confusion: 混淆计数
    """
    pred = np.asarray(predictions).astype(bool).ravel()
    obs = np.asarray(observations).astype(bool).ravel()
    raise_for_statement(
        len(pred) == len(obs),
        f"预测长度 {len(pred)} 与观测长度 {len(obs)} 不一致",
        DimensionMismatch,
    )
    return Confusion(
        tp=int(np.sum(pred & obs)),
        fp=int(np.sum(pred & ~obs)),
        tn=int(np.sum(~pred & ~obs)),
        fn=int(np.sum(~pred & obs)),
    )


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator > 0 else 0.0


def _metrics(counts: Confusion) -> Tuple[float, float, float, float]:
    accuracy = _ratio(counts.tp + counts.tn, counts.total)
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return accuracy, precision, recall, f1


def weekly_metrics(counts: Confusion, week: str = "") -> WeeklyScore:
    """
    计算一周的指标，分母为 0 时对应指标记为 0

    Args:
        counts (Confusion): 混淆计数
        week (str): 周标签

    Returns:
        WeeklyScore: 周指标
    """
    raise_for_statement(counts.total > 0, f"周 {week} 没有任何分区", EmptyInput)
    accuracy, precision, recall, f1 = _metrics(counts)
    return WeeklyScore(
        week=week,
        tp=counts.tp,
        fp=counts.fp,
        tn=counts.tn,
        fn=counts.fn,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def _weight_stats(weights: Sequence[Sequence[float]]) -> List[WeightStats]:
    if not weights:
        return []
    matrix = np.asarray(weights, dtype=float)
    return [
        WeightStats(
            min=float(column.min()),
            median=float(np.median(column)),
            mean=float(column.mean()),
            max=float(column.max()),
        )
        for column in matrix.T
    ]


def yearly_summary(
    scores: Sequence[WeeklyScore],
    weights: Sequence[Sequence[float]] = (),
    year: str = "",
) -> YearlySummary:
    """
    汇总一年的周指标与时间权重

    Args:
        scores (Sequence[WeeklyScore]): 周指标
        weights (Sequence[Sequence[float]]): 各周的时间权重 w
        year (str): 年份标签

    Returns:
        YearlySummary: 年度汇总
    """
    raise_for_statement(len(scores) > 0, f"{year or '该年'}没有可评估的周", EmptyInput)
    accuracy = np.array([s.accuracy for s in scores])
    pooled = Confusion(0, 0, 0, 0)
    for s in scores:
        pooled = pooled + Confusion(s.tp, s.fp, s.tn, s.fn)
    micro_accuracy, micro_precision, micro_recall, micro_f1 = _metrics(pooled)
    return YearlySummary(
        year=year,
        weeks=len(scores),
        accuracy_mean=float(accuracy.mean()),
        accuracy_std=float(accuracy.std()),
        precision_mean=float(np.mean([s.precision for s in scores])),
        recall_mean=float(np.mean([s.recall for s in scores])),
        f1_mean=float(np.mean([s.f1 for s in scores])),
        micro={
            "accuracy": micro_accuracy,
            "precision": micro_precision,
            "recall": micro_recall,
            "f1": micro_f1,
        },
        weight_stats=_weight_stats(weights),
    )


def score_forecasts(forecasts: Sequence[ForecastResult], hotspots: HotspotSeries) -> List[WeeklyScore]:
    """
    将预测与目标周的观测 y 配对打分，目标周不在序列中的预测跳过

    Args:
        forecasts (Sequence[ForecastResult]): 预测结果
        hotspots (HotspotSeries): 观测序列

    Returns:
        List[WeeklyScore]: 周指标
    """
    scores = []
    for forecast in forecasts:
        if forecast.target_week not in hotspots.week_labels:
            continue
        observed = hotspots.y[:, hotspots.week_labels.index(forecast.target_week)]
        try:
            counts = confusion_counts(forecast.predictions, observed)
        except DimensionMismatch as e:
            raise DimensionMismatch(f"周 {forecast.target_week}: {e}")
        scores.append(weekly_metrics(counts, forecast.target_week))
    return scores


def summarize_by_year(
    scores: Sequence[WeeklyScore],
    weights: Optional[Dict[str, Sequence[float]]] = None,
) -> List[YearlySummary]:
    """
    按目标周所属的流行病学年分组汇总

    Args:
        scores (Sequence[WeeklyScore]): 周指标
        weights (Dict[str, Sequence[float]]): 周标签到时间权重的映射

    Returns:
        List[YearlySummary]: 按年份排序的汇总
    """
    raise_for_statement(len(scores) > 0, "没有可评估的周", EmptyInput)
    weights = weights or {}
    grouped = defaultdict(list)
    for score in scores:
        grouped[year_of(score.week)].append(score)
    summaries = []
    for year in sorted(grouped):
        year_scores = grouped[year]
        year_weights = [weights[s.week] for s in year_scores if s.week in weights]
        summaries.append(yearly_summary(year_scores, year_weights, str(year)))
    return summaries
