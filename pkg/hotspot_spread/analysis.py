"""
hotspot_spread.analysis

传播矩阵的稳定性（SSIM）、年度传播网络、人口流动网络及两者的比较
"""

import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .exceptions import (
    DimensionMismatch,
    EmptyAfterMapping,
    EmptyInput,
    InvalidConfig,
    MissingPlanningArea,
    ZeroMatrixWarning,
    ZeroVariance,
)
from .ingest import SubzoneIndex
from .learner import SpreadingModel
from .utils.utils import get_config, raise_for_statement
from .weeks import year_of


LOGGER = logging.getLogger(__name__)


class FlowKind(Enum):
    """
    网络类型
    """
    LEARNED = "learned"    # 学习得到的传播网络 G_L
    MOBILITY = "mobility"  # 通勤流动网络 G_M


class FlowLevel(Enum):
    SUBZONE = "subzone"
    PLANNING_AREA = "planning-area"


class PopulationMode(Enum):
    """
    流动比率中 D(k) 的取法
    """
    RAW = "raw"
    DENSITY = "density"


@dataclass
class AnalysisConfig:
    top_k: int = field(default_factory=lambda: get_config("analysis")["top_k"])
    population_mode: str = field(default_factory=lambda: get_config("analysis")["population_mode"])
    zero_tolerance: float = field(default_factory=lambda: get_config("analysis")["zero_tolerance"])
    ssim_k1: float = field(default_factory=lambda: get_config("analysis")["ssim_k1"])
    ssim_k2: float = field(default_factory=lambda: get_config("analysis")["ssim_k2"])

    def __post_init__(self):
        raise_for_statement(self.top_k >= 1, "top_k 至少为 1", InvalidConfig)
        raise_for_statement(
            self.population_mode in {m.value for m in PopulationMode},
            f"未知的 population_mode: {self.population_mode}",
            InvalidConfig,
        )
        raise_for_statement(0 <= self.zero_tolerance < 1, "zero_tolerance 必须在 [0, 1) 内", InvalidConfig)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "AnalysisConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        raise_for_statement(not unknown, f"未知的 analysis 配置项: {sorted(unknown)}", InvalidConfig)
        return cls(**dict(data))


@dataclass
class FlowNetwork:
    """
    分区（或规划区）之间的有向加权网络

    Args:
        weights (np.ndarray): 非负权重矩阵
        kind (FlowKind): 学习网络或流动网络，流动网络必须对称
        level (FlowLevel): 分区或规划区
        labels (list): 行列对应的区域编号
    """

    weights: np.ndarray
    kind: FlowKind
    level: FlowLevel
    labels: List[str]
    skipped: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        n = len(self.labels)
        raise_for_statement(
            self.weights.shape == (n, n),
            f"权重矩阵形状 {self.weights.shape} 与 {n} 个区域不符",
            DimensionMismatch,
        )
        raise_for_statement(bool((self.weights >= 0).all()), "网络权重存在负值", DimensionMismatch)
        if self.kind is FlowKind.MOBILITY:
            raise_for_statement(
                bool(np.array_equal(self.weights, self.weights.T)),
                "流动网络必须对称",
                DimensionMismatch,
            )

    @property
    def total(self) -> float:
        return float(self.weights.sum())


@dataclass
class RegionMetrics:
    """
    各区域的传入、传出比率与流动比率，均已按最大值归一化
    """

    transmission_in: np.ndarray
    transmission_out: np.ndarray
    mobility_ratio: np.ndarray
    population: np.ndarray
    labels: List[str] = field(default_factory=list)


@dataclass
class NetworkComparison:
    top_k: int
    correlations: Dict[str, Dict[str, Optional[float]]]
    jaccard: Dict[str, float]
    top_regions: Dict[str, List[str]]
    undefined: List[str] = field(default_factory=list)


def row_normalize(P: np.ndarray) -> np.ndarray:
    """
    每行除以该行绝对值之和，全零行保持为零

    Args:
        P (np.ndarray): N×N 矩阵

    Returns:
        np.ndarray: 行归一化后的矩阵
    """
    P = np.asarray(P, dtype=float)
    sums = np.abs(P).sum(axis=1, keepdims=True)
    return np.divide(P, sums, out=np.zeros_like(P), where=sums > 0)


def sparsify(P: np.ndarray, zero_tolerance: float) -> np.ndarray:
    """将 |P_ij| < zero_tolerance·max|P| 的元素置零"""
    P = np.asarray(P, dtype=float)
    scale = float(np.abs(P).max()) if P.size else 0.0
    return np.where(np.abs(P) < zero_tolerance * scale, 0.0, P)


def ssim(A: np.ndarray, B: np.ndarray, k1: float = 0.01, k2: float = 0.03) -> float:
    """
    单窗口（全局）结构相似度

    Args:
        A (np.ndarray): 矩阵，调用方负责行归一化
        B (np.ndarray): 同形状矩阵
        k1 (float): 亮度项常数系数
        k2 (float): 对比度项常数系数

    Returns:
        float: [0, 1] 内的 SSIM
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    raise_for_statement(A.shape == B.shape, f"矩阵形状不一致: {A.shape} 与 {B.shape}", DimensionMismatch)
    L = max(float(max(A.max(), B.max())), 1e-12)
    c1 = (k1 * L) ** 2
    c2 = (k2 * L) ** 2
    mu_a, mu_b = A.mean(), B.mean()
    da, db = A - mu_a, B - mu_b
    var_a, var_b = np.mean(da * da), np.mean(db * db)
    cov = np.mean(da * db)
    value = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    return float(min(1.0, max(0.0, value)))


def stability_series(
    models: Sequence[SpreadingModel],
    config: Optional[AnalysisConfig] = None,
) -> List[Tuple[str, str, float]]:
    """
    相邻两周传播矩阵的 SSIM

    比较前先把数值零附近的抖动置零，再按行归一化。

    Args:
        models (Sequence[SpreadingModel]): 按周排序的模型
        config (AnalysisConfig): 分析配置

    Returns:
        List[Tuple[str, str, float]]: (周 t, 周 t+1, SSIM)
    """
    config = config or AnalysisConfig()
    ordered = sorted(models, key=lambda m: m.target_week)
    prepared = [row_normalize(sparsify(m.P, config.zero_tolerance)) for m in ordered]
    return [
        (a.target_week, b.target_week, ssim(pa, pb, config.ssim_k1, config.ssim_k2))
        for a, b, pa, pb in zip(ordered, ordered[1:], prepared, prepared[1:])
    ]


def aggregate_yearly(models: Sequence[SpreadingModel], labels: Optional[List[str]] = None) -> FlowNetwork:
    """
    年度传播网络 G_L：每周矩阵除以其最大元素后求和

    最大元素不为正的周贡献全零并发出警告；缩放后的负值截断为 0。

    Args:
        models (Sequence[SpreadingModel]): 同一年的模型
        labels (list): 区域编号，默认取模型中的 subzone_ids

    Returns:
        FlowNetwork: 学习网络
    """
    raise_for_statement(len(models) > 0, "没有可聚合的模型", EmptyInput)
    N = models[0].P.shape[0]
    total = np.zeros((N, N))
    for model in models:
        raise_for_statement(model.P.shape == (N, N), f"模型 {model.target_week} 的维度与 N={N} 不符", DimensionMismatch)
        peak = float(model.P.max())
        if peak <= 0:
            warnings.warn(f"周 {model.target_week} 的传播矩阵最大值为 {peak}，按全零处理", ZeroMatrixWarning)
            continue
        total += np.clip(model.P / peak, 0.0, None)
    labels = labels or list(models[0].subzone_ids) or [str(i) for i in range(N)]
    return FlowNetwork(weights=total, kind=FlowKind.LEARNED, level=FlowLevel.SUBZONE, labels=labels)


def aggregate_by_year(models: Sequence[SpreadingModel]) -> Dict[int, FlowNetwork]:
    """按目标周所属年份分别聚合"""
    grouped = defaultdict(list)
    for model in models:
        grouped[year_of(model.target_week)].append(model)
    return {year: aggregate_yearly(grouped[year]) for year in sorted(grouped)}


def build_mobility_network(
    commutes: Iterable[Tuple[str, str]],
    grid_to_subzone: Mapping[str, str],
    index: SubzoneIndex,
) -> FlowNetwork:
    """
    由 (居住网格, 工作网格) 记录构建对称流动网络 G_M

    每条记录同时计入 (i, j) 与 (j, i)，居住与工作在同一分区时对角线加 2。

    Args:
        commutes (Iterable[Tuple[str, str]]): 通勤记录
        grid_to_subzone (Mapping[str, str]): 网格到分区的映射
        index (SubzoneIndex): 分区索引

    Returns:
        FlowNetwork: 流动网络，skipped 为无法映射的记录数
    """
    weights = np.zeros((index.N, index.N))
    retained = 0
    skipped = 0
    outside = 0
    for home, work in commutes:
        i_id = grid_to_subzone.get(str(home))
        j_id = grid_to_subzone.get(str(work))
        if i_id is None or j_id is None:
            skipped += 1
            continue
        # 映射到的分区已从索引中剔除（如低密度分区）
        if i_id not in index or j_id not in index:
            skipped += 1
            outside += 1
            continue
        i, j = index.position(i_id), index.position(j_id)
        weights[i, j] += 1
        weights[j, i] += 1
        retained += 1

    raise_for_statement(retained > 0, f"全部 {skipped} 条通勤记录都无法映射到分区", EmptyAfterMapping)
    if skipped > outside:
        LOGGER.warning("%d 条通勤记录的网格没有对应分区，已跳过", skipped - outside)
    if outside:
        LOGGER.warning("%d 条通勤记录映射到的分区不在分区索引中，已跳过", outside)
    return FlowNetwork(
        weights=weights,
        kind=FlowKind.MOBILITY,
        level=FlowLevel.SUBZONE,
        labels=index.ids,
        skipped=skipped,
    )


def _normalize_by_max(values: np.ndarray) -> np.ndarray:
    peak = values.max() if values.size else 0.0
    return values / peak if peak > 0 else np.zeros_like(values)


def region_metrics(
    G_L: FlowNetwork,
    G_M: FlowNetwork,
    index: SubzoneIndex,
    population_mode: PopulationMode = PopulationMode.RAW,
) -> RegionMetrics:
    """
    计算传入、传出与流动比率，计算前两个网络的对角线都置零

    Args:
        G_L (FlowNetwork): 学习网络
        G_M (FlowNetwork): 流动网络
        index (SubzoneIndex): 分区索引
        population_mode (PopulationMode): D(k) 取人口或人口密度

    Returns:
        RegionMetrics: 区域指标
    """
    raise_for_statement(
        G_L.labels == G_M.labels == index.ids,
        "学习网络、流动网络与分区索引的区域顺序不一致",
        DimensionMismatch,
    )
    learned = G_L.weights.copy()
    mobility = G_M.weights.copy()
    np.fill_diagonal(learned, 0.0)
    np.fill_diagonal(mobility, 0.0)

    population = index.population if PopulationMode(population_mode) is PopulationMode.RAW else index.density
    return RegionMetrics(
        transmission_in=_normalize_by_max(learned.sum(axis=1)),
        transmission_out=_normalize_by_max(learned.sum(axis=0)),
        mobility_ratio=_normalize_by_max(mobility.sum(axis=1) * population),
        population=population,
        labels=index.ids,
    )


def rollup_planning_areas(net: FlowNetwork, index: SubzoneIndex) -> FlowNetwork:
    """
    把分区网络汇总到规划区：(A, B) = Σ_{i∈A, j∈B} net(i, j)

    Args:
        net (FlowNetwork): 分区级网络
        index (SubzoneIndex): 分区索引

    Returns:
        FlowNetwork: 规划区级网络，规划区按编号排序
    """
    raise_for_statement(net.labels == index.ids, "网络与分区索引的区域顺序不一致", DimensionMismatch)
    missing = [sz.subzone_id for sz in index.subzones if not sz.planning_area_id]
    raise_for_statement(not missing, f"以下分区缺少规划区编号: {missing}", MissingPlanningArea)

    areas = sorted(set(index.planning_area_ids))
    position = {area: k for k, area in enumerate(areas)}
    membership = np.zeros((index.N, len(areas)))
    for i, area in enumerate(index.planning_area_ids):
        membership[i, position[area]] = 1.0
    return FlowNetwork(
        weights=membership.T @ net.weights @ membership,
        kind=net.kind,
        level=FlowLevel.PLANNING_AREA,
        labels=areas,
    )


def _correlations(a: np.ndarray, b: np.ndarray) -> Dict[str, float]:
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ZeroVariance("常数向量的相关系数无定义")
    return {
        "pearson": float(stats.pearsonr(a, b)[0]),
        "spearman": float(stats.spearmanr(a, b)[0]),
    }


def top_k_regions(values: np.ndarray, labels: Sequence[str], k: int) -> List[str]:
    """取值最大的 k 个区域，相同取值按下标先后"""
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    return [labels[i] for i in order[: min(k, len(labels))]]


def compare_networks(metrics: RegionMetrics, top_k: int = 10) -> NetworkComparison:
    """
    比较流动比率与传入、传出比率

    Args:
        metrics (RegionMetrics): 区域指标
        top_k (int): 取前 k 个区域计算 Jaccard 重合度

    Returns:
        NetworkComparison: 比较报告，常数向量的相关系数记为 None
    """
    labels = metrics.labels or [str(i) for i in range(len(metrics.mobility_ratio))]
    mobility_top = top_k_regions(metrics.mobility_ratio, labels, top_k)
    correlations, jaccard, top_regions, undefined = {}, {}, {"mobility_ratio": mobility_top}, []
    for name, values in (
        ("transmission_in", metrics.transmission_in),
        ("transmission_out", metrics.transmission_out),
    ):
        try:
            correlations[name] = _correlations(metrics.mobility_ratio, values)
        except ZeroVariance as e:
            correlations[name] = {"pearson": None, "spearman": None}
            undefined.append(f"{name}: {e}")
        top = top_k_regions(values, labels, top_k)
        top_regions[name] = top
        union = set(top) | set(mobility_top)
        jaccard[name] = len(set(top) & set(mobility_top)) / len(union) if union else 0.0
    return NetworkComparison(
        top_k=top_k,
        correlations=correlations,
        jaccard=jaccard,
        top_regions=top_regions,
        undefined=undefined,
    )
