"""
hotspot_spread.synth

按已知传播矩阵 P* 与时间权重 w* 生成合成热点序列，作为学习与预测的对照
"""

import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidScenario
from .forecaster import activate, indicator_threshold
from .hotspot import HotspotSeries
from .ingest import WeeklyCaseCounts
from .utils.utils import get_config, raise_for_statement
from .weeks import EpiWeekCalendar, WEEK_SYSTEMS


LOGGER = logging.getLogger(__name__)


def _default(key: str):
    return field(default_factory=lambda: get_config("synth")[key])


@dataclass
class SynthScenario:
    """
    合成场景

    Args:
        n_subzones (int): 分区数 N
        n_weeks (int): 周数 T
        lookback (int): 回看周数 H
        density (float): P* 非零元素占比（对角线总是非零）
        self_weight (float): P* 对角线取值
        offdiag_low (float): 非对角元素下界
        offdiag_high (float): 非对角元素上界
        w_star (list): 时间权重 w*
        seed_presence_rate (float): 前 H 周随机存在状态的比例
        presence_rate (float): 动态阶段额外的阈下存在状态比例
        noise_rate (float): 观测噪声，只翻转 y = 0 处的存在位
        hotspot_threshold (int): 生成计数时使用的阈值 c
        start_date (str): 第一周内的日期
        week_start (str): 每周起始日
        seed (int): 随机种子
        P_star (np.ndarray): 显式给出的 P*，为 None 时按 density 生成
    """

    n_subzones: int = _default("n_subzones")
    n_weeks: int = _default("n_weeks")
    lookback: int = _default("lookback")
    density: float = _default("density")
    self_weight: float = _default("self_weight")
    offdiag_low: float = _default("offdiag_low")
    offdiag_high: float = _default("offdiag_high")
    w_star: List[float] = _default("w_star")
    seed_presence_rate: float = _default("seed_presence_rate")
    presence_rate: float = _default("presence_rate")
    noise_rate: float = _default("noise_rate")
    hotspot_threshold: int = _default("hotspot_threshold")
    start_date: str = _default("start_date")
    week_start: str = _default("week_start")
    seed: int = _default("seed")
    P_star: Optional[np.ndarray] = None

    def __post_init__(self):
        self.w_star = [float(v) for v in self.w_star]
        if self.P_star is not None:
            self.P_star = np.asarray(self.P_star, dtype=float)
        self.validate()

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SynthScenario":
        unknown = set(data) - set(cls.__dataclass_fields__)
        raise_for_statement(not unknown, f"未知的 synth 配置项: {sorted(unknown)}", InvalidScenario)
        return cls(**dict(data))

    def to_dict(self) -> dict:
        data = {key: getattr(self, key) for key in self.__dataclass_fields__ if key != "P_star"}
        if self.P_star is not None:
            data["P_star"] = self.P_star.tolist()
        return data

    def validate(self) -> None:
        checks = [
            (self.n_subzones >= 1 and self.n_weeks >= 1 and self.lookback >= 1, "N、T、H 都必须至少为 1"),
            (self.n_weeks > self.lookback, f"周数 {self.n_weeks} 必须大于回看周数 {self.lookback}"),
            (len(self.w_star) == self.lookback, f"w_star 长度 {len(self.w_star)} 与 H={self.lookback} 不符"),
            (all(0 <= v <= 1 for v in self.w_star), "w_star 必须在 [0, 1] 内"),
            (0 <= self.density <= 1, "density 必须在 [0, 1] 内"),
            (0 <= self.offdiag_low <= self.offdiag_high, "非对角取值区间不合法"),
            (self.self_weight >= 0, "self_weight 不能为负"),
            (0 <= self.seed_presence_rate <= 1, "seed_presence_rate 必须在 [0, 1] 内"),
            (0 <= self.presence_rate <= 1, "presence_rate 必须在 [0, 1] 内"),
            (0 <= self.noise_rate < 0.5, "noise_rate 必须在 [0, 0.5) 内"),
            (int(self.hotspot_threshold) == self.hotspot_threshold and self.hotspot_threshold >= 1, "hotspot_threshold 必须是正整数"),
            (self.week_start.lower() in WEEK_SYSTEMS, f"未知的周起始日: {self.week_start}"),
        ]
        for ok, msg in checks:
            raise_for_statement(ok, msg, InvalidScenario)
        try:
            date.fromisoformat(self.start_date)
        except ValueError:
            raise InvalidScenario(f"无法解析 start_date: {self.start_date}")
        if self.P_star is not None:
            N = self.n_subzones
            raise_for_statement(self.P_star.shape == (N, N), f"P_star 形状 {self.P_star.shape} 与 N={N} 不符", InvalidScenario)
            raise_for_statement(bool((self.P_star >= 0).all()), "P_star 必须非负", InvalidScenario)

    @property
    def N(self) -> int:
        return self.n_subzones

    @property
    def T(self) -> int:
        return self.n_weeks

    @property
    def H(self) -> int:
        return self.lookback

    def planted_matrix(self) -> np.ndarray:
        if self.P_star is not None:
            return self.P_star.copy()
        return make_planted_matrix(
            self.N,
            self.density,
            self.self_weight,
            (self.offdiag_low, self.offdiag_high),
            np.random.default_rng([self.seed, 0]),
        )


def sparsity(P: np.ndarray) -> float:
    """零元素占比"""
    P = np.asarray(P)
    return float(np.mean(P == 0)) if P.size else 0.0


def make_planted_matrix(
    N: int,
    density: float,
    self_weight: float,
    offdiag_range: Tuple[float, float],
    rng: np.random.Generator,
) -> np.ndarray:
    """
    生成稀疏非负的 P*

    对角线取 self_weight，其余非零元素在非对角位置上随机选取，取值服从 uniform(offdiag_range)。

    Args:
        N (int): 分区数
        density (float): 非零元素占比，对角线计入其中
        self_weight (float): 对角线取值
        offdiag_range (Tuple[float, float]): 非对角元素取值区间
        rng (np.random.Generator): 随机数生成器

    Returns:
        np.ndarray: N×N 矩阵
    """
    P = np.zeros((N, N))
    np.fill_diagonal(P, self_weight)
    off_diagonal = [(i, j) for i in range(N) for j in range(N) if i != j]
    extra = min(len(off_diagonal), max(0, int(round(density * N * N)) - N))
    if extra:
        chosen = rng.choice(len(off_diagonal), size=extra, replace=False)
        low, high = offdiag_range
        for k, value in zip(sorted(chosen), rng.uniform(low, high, size=extra)):
            P[off_diagonal[k]] = value
    return P


def _labels(scenario: SynthScenario) -> List[str]:
    calendar = EpiWeekCalendar(scenario.week_start)
    start = date.fromisoformat(scenario.start_date)
    return [calendar.label_for(start + timedelta(weeks=k)) for k in range(scenario.T)]


def subzone_ids(n: int) -> List[str]:
    return [f"SZ{i:03d}" for i in range(n)]


def generate(scenario: SynthScenario) -> HotspotSeries:
    """
    按前向模型生成热点序列

    前 H 周为随机存在状态；之后每周 y^t 由 tanh(Σ_h w*_h P* ŷ^{t-h}) 经 μ+σ 指示函数给出，
    隐含存在状态为 y^t 加上 presence_rate 的阈下存在，观测存在状态在 y = 0 处按 noise_rate 翻转。

    Args:
        scenario (SynthScenario): 合成场景

    Returns:
        HotspotSeries: 观测到的热点序列
    """
    scenario.validate()
    N, T, H = scenario.N, scenario.T, scenario.H
    rng = np.random.default_rng([scenario.seed, 1])
    P_star = scenario.planted_matrix()
    w_star = np.asarray(scenario.w_star)

    latent = np.zeros((N, T), dtype=np.int8)
    y = np.zeros((N, T), dtype=np.int8)
    latent[:, :H] = rng.random((N, H)) < scenario.seed_presence_rate
    y[:, :H] = latent[:, :H]
    for t in range(H, T):
        history = latent[:, [t - 1 - h for h in range(H)]].astype(float)
        predictions, _ = indicator_threshold(activate(P_star @ (history @ w_star)))
        y[:, t] = predictions
        latent[:, t] = y[:, t] | (rng.random(N) < scenario.presence_rate)

    observed = latent.copy()
    if scenario.noise_rate > 0:
        flips = (rng.random((N, T)) < scenario.noise_rate) & (y == 0)
        observed = np.where(flips, 1 - observed, observed).astype(np.int8)

    LOGGER.debug("合成序列: N=%d T=%d 热点格 %d 个, P* 稀疏度 %.3f", N, T, int(y.sum()), sparsity(P_star))
    return HotspotSeries(
        y=y,
        y_hat=observed,
        c=int(scenario.hotspot_threshold),
        week_labels=_labels(scenario),
        subzone_ids=subzone_ids(N),
        week_start=scenario.week_start,
    )


def to_counts(series: HotspotSeries, c: Optional[int] = None) -> WeeklyCaseCounts:
    """
    转换为计数矩阵：热点格计 c，阈下存在格计 1，其余为 0

    c = 1 时阈下存在格会被当成热点，只有 y 与 ŷ 完全一致的序列可以转换。

    Args:
        series (HotspotSeries): 热点序列
        c (int): 阈值，默认使用序列自身的 c

    Returns:
        WeeklyCaseCounts: 按 c 二值化后还原为原序列的计数
    """
    c = int(series.c if c is None else c)
    presence_only = (series.y_hat == 1) & (series.y == 0)
    raise_for_statement(
        c >= 2 or not presence_only.any(),
        "c = 1 时无法用计数表示阈下存在状态",
        InvalidScenario,
    )
    counts = np.where(series.y == 1, c, np.where(presence_only, 1, 0))
    return WeeklyCaseCounts(
        counts=counts,
        week_labels=list(series.week_labels),
        subzone_ids=list(series.subzone_ids),
        week_start=series.week_start,
    )


def held_out_labels(series: HotspotSeries, weeks: int) -> Sequence[str]:
    """最后 weeks 周的标签，weeks <= 0 时为空"""
    if weeks <= 0:
        return []
    return series.week_labels[-weeks:]
