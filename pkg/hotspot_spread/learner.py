"""
hotspot_spread.learner

逐周学习传播矩阵 P^t 与时间权重 w_h^t。

P 用按行梯度下降最小化带 L1/L2 正则的平方损失，w 在 [0, 1] 网格上做坐标搜索。
"""

import asyncio
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DimensionMismatch, InsufficientHistory, InvalidConfig
from .hotspot import HotspotSeries
from .utils.utils import get_config, raise_for_statement


LOGGER = logging.getLogger(__name__)

EPS = 1e-300


def _default(key: str):
    return field(default_factory=lambda: get_config("learner")[key])


@dataclass
class LearnerConfig:
    """
    学习器配置

    Args:
        lookback (int): 回看周数 H
        lambda1 (float): L2 正则系数
        lambda2 (float): L1 正则系数
        learning_rate (float): 初始步长，损失上升时减半
        min_learning_rate (float): 步长下限，低于此值停止
        max_iters (int): 最大迭代次数
        tolerance (float): 相对损失变化停止阈值
        weight_grid_step (float): 权重粗搜索步长
        weight_refine_step (float): 权重细搜索步长，None 表示不细化
        initial_weight (float): 坐标搜索起点
        init_scale (float): P 初始化为 uniform(0, init_scale)
        seed (int): 随机种子
        max_concurrent (int): 并发学习的周数
    """

    lookback: int = _default("lookback")
    lambda1: float = _default("lambda1")
    lambda2: float = _default("lambda2")
    learning_rate: float = _default("learning_rate")
    min_learning_rate: float = _default("min_learning_rate")
    max_iters: int = _default("max_iters")
    tolerance: float = _default("tolerance")
    weight_grid_step: float = _default("weight_grid_step")
    weight_refine_step: Optional[float] = _default("weight_refine_step")
    initial_weight: float = _default("initial_weight")
    init_scale: float = _default("init_scale")
    seed: int = _default("seed")
    max_concurrent: int = _default("max_concurrent")

    def __post_init__(self):
        self.validate()

    @property
    def H(self) -> int:
        return self.lookback

    @classmethod
    def from_mapping(cls, data: Mapping) -> "LearnerConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        raise_for_statement(not unknown, f"未知的 learner 配置项: {sorted(unknown)}", InvalidConfig)
        return cls(**dict(data))

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        checks = [
            (int(self.lookback) == self.lookback and self.lookback >= 1, "lookback 必须是正整数"),
            (self.lambda1 >= 0 and self.lambda2 >= 0, "正则系数不能为负"),
            (self.learning_rate > 0, "learning_rate 必须为正"),
            (self.max_iters >= 1, "max_iters 至少为 1"),
            (self.tolerance >= 0, "tolerance 不能为负"),
            (0 < self.weight_grid_step <= 1, "weight_grid_step 必须在 (0, 1] 内"),
            (
                self.weight_refine_step is None or 0 < self.weight_refine_step <= 1,
                "weight_refine_step 必须在 (0, 1] 内或为 null",
            ),
            (0 <= self.initial_weight <= 1, "initial_weight 必须在 [0, 1] 内"),
            (self.init_scale >= 0, "init_scale 不能为负"),
            (self.max_concurrent >= 1, "max_concurrent 至少为 1"),
        ]
        for ok, msg in checks:
            raise_for_statement(ok, msg, InvalidConfig)


@dataclass
class SpreadingModel:
    """
    某一目标周的学习结果

    P[i, j] 为从分区 j 到分区 i 的传播链接权重。
    """

    P: np.ndarray
    w: np.ndarray
    target_week: str
    final_loss: float
    iterations_used: int
    subzone_ids: List[str] = field(default_factory=list)
    loss_history: List[float] = field(default_factory=list)
    search_trace: List[Tuple[Tuple[float, ...], float]] = field(default_factory=list)


def _check_history(P: np.ndarray, w: np.ndarray, y_hat_history: np.ndarray) -> None:
    N = P.shape[1]
    raise_for_statement(P.ndim == 2 and P.shape[0] == N, f"P 必须是方阵，当前形状 {P.shape}", DimensionMismatch)
    raise_for_statement(
        y_hat_history.ndim == 2 and y_hat_history.shape == (N, len(w)),
        f"历史矩阵形状 {y_hat_history.shape} 与 N={N}、H={len(w)} 不符",
        DimensionMismatch,
    )


def _as_arrays(P, w, y_hat_history):
    return np.asarray(P, dtype=float), np.asarray(w, dtype=float).ravel(), np.asarray(y_hat_history, dtype=float)


def estimate(P: np.ndarray, w: Sequence[float], y_hat_history: np.ndarray) -> np.ndarray:
    """
    热点估计 Σ_h w_h · P · ŷ^{t-h}

    Args:
        P (np.ndarray): N×N 传播矩阵
        w (Sequence[float]): 长度为 H 的时间权重
        y_hat_history (np.ndarray): N×H 存在状态，列依次为 ŷ^{t-1} .. ŷ^{t-H}

    Returns:
        np.ndarray: 长度为 N 的估计
    """
    P, w, y_hat_history = _as_arrays(P, w, y_hat_history)
    _check_history(P, w, y_hat_history)
    return P @ (y_hat_history @ w)


def _loss_from_x(P: np.ndarray, x: np.ndarray, y: np.ndarray, lambda1: float, lambda2: float) -> float:
    residual = P @ x - y
    return float(np.sum(residual * residual) + lambda1 * np.sum(P * P) + lambda2 * np.sum(np.abs(P)))


def loss(
    P: np.ndarray,
    w: Sequence[float],
    y_hat_history: np.ndarray,
    y_target: np.ndarray,
    lambda1: float,
    lambda2: float,
) -> float:
    """
    全局损失 Σ_i (Σ_h w_h P_i· ŷ^{t-h} − y_i^t)² + λ1‖P‖₂² + λ2‖P‖₁

    Returns:
        float: 非负损失
    """
    P, w, y_hat_history = _as_arrays(P, w, y_hat_history)
    _check_history(P, w, y_hat_history)
    y_target = np.asarray(y_target, dtype=float).ravel()
    raise_for_statement(len(y_target) == P.shape[0], f"目标向量长度 {len(y_target)} 与 N={P.shape[0]} 不符", DimensionMismatch)
    return _loss_from_x(P, y_hat_history @ w, y_target, lambda1, lambda2)


def row_gradient(
    P_row_i: np.ndarray,
    w: Sequence[float],
    y_hat_history: np.ndarray,
    y_i_target: float,
    lambda1: float,
    lambda2: float,
) -> np.ndarray:
    """
    第 i 行的梯度

    2·(P_i· x − y_i)·x + λ1·P_i· + λ2·sign(P_i·)，其中 x = Σ_h w_h ŷ^{t-h}，sign(0) = 0。

    Args:
        P_row_i (np.ndarray): P 的第 i 行
        w (Sequence[float]): 时间权重
        y_hat_history (np.ndarray): N×H 存在状态
        y_i_target (float): 分区 i 当周的热点状态
        lambda1 (float): L2 正则系数
        lambda2 (float): L1 正则系数

    Returns:
        np.ndarray: 长度为 N 的梯度
    """
    P_row_i = np.asarray(P_row_i, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    y_hat_history = np.asarray(y_hat_history, dtype=float)
    raise_for_statement(
        y_hat_history.shape == (len(P_row_i), len(w)),
        f"历史矩阵形状 {y_hat_history.shape} 与 N={len(P_row_i)}、H={len(w)} 不符",
        DimensionMismatch,
    )
    x = y_hat_history @ w
    residual = P_row_i @ x - y_i_target
    return 2.0 * residual * x + lambda1 * P_row_i + lambda2 * np.sign(P_row_i)


def _matrix_gradient(P: np.ndarray, x: np.ndarray, y: np.ndarray, lambda1: float, lambda2: float) -> np.ndarray:
    # 各行的 row_gradient 叠成矩阵
    residual = P @ x - y
    return 2.0 * np.outer(residual, x) + lambda1 * P + lambda2 * np.sign(P)


def week_rng(seed: int, t: int) -> np.random.Generator:
    """每个目标周独立的随机数发生器，与并发调度无关"""
    return np.random.default_rng([int(seed), int(t)])


def initial_matrix(N: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    return rng.uniform(0.0, scale, size=(N, N))


def _resolve_week(hotspots: HotspotSeries, target_week: Union[int, str]) -> int:
    if isinstance(target_week, str):
        return hotspots.week_index(target_week)
    raise_for_statement(0 <= target_week < hotspots.T, f"周下标 {target_week} 越界", InsufficientHistory)
    return int(target_week)


def _fit(
    x: np.ndarray,
    y: np.ndarray,
    P0: np.ndarray,
    config: LearnerConfig,
) -> Tuple[np.ndarray, float, int, List[float]]:
    P = P0.copy()
    current = _loss_from_x(P, x, y, config.lambda1, config.lambda2)
    losses = [current]
    eta = config.learning_rate
    iterations = 0
    while iterations < config.max_iters:
        iterations += 1
        candidate = P - eta * _matrix_gradient(P, x, y, config.lambda1, config.lambda2)
        candidate_loss = _loss_from_x(candidate, x, y, config.lambda1, config.lambda2)
        if candidate_loss > current:
            # 损失上升则步长减半，本次不更新
            eta /= 2.0
            if eta < config.min_learning_rate:
                break
            continue
        change = (current - candidate_loss) / max(current, EPS)
        P, current = candidate, candidate_loss
        losses.append(current)
        if change < config.tolerance:
            break
    return P, current, iterations, losses


def fit_spreading_matrix(
    hotspots: HotspotSeries,
    target_week: Union[int, str],
    w: Sequence[float],
    config: LearnerConfig,
    initial: Optional[np.ndarray] = None,
) -> SpreadingModel:
    """
    固定时间权重，学习目标周的传播矩阵

    Args:
        hotspots (HotspotSeries): 热点序列
        target_week (int | str): 目标周下标或标签
        w (Sequence[float]): 时间权重
        config (LearnerConfig): 学习器配置
        initial (np.ndarray): 初始矩阵，默认按 (seed, 周下标) 随机生成

    Returns:
        SpreadingModel: 学习结果
    """
    t = _resolve_week(hotspots, target_week)
    w = np.asarray(w, dtype=float).ravel()
    raise_for_statement(len(w) == config.H, f"权重长度 {len(w)} 与 H={config.H} 不符", DimensionMismatch)
    history = hotspots.history(t, config.H, lag=1)
    y = hotspots.y[:, t].astype(float)
    if initial is None:
        initial = initial_matrix(hotspots.N, week_rng(config.seed, t), config.init_scale)
    raise_for_statement(
        initial.shape == (hotspots.N, hotspots.N),
        f"初始矩阵形状 {initial.shape} 与 N={hotspots.N} 不符",
        DimensionMismatch,
    )

    P, final_loss, iterations, losses = _fit(history @ w, y, np.asarray(initial, dtype=float), config)
    return SpreadingModel(
        P=P,
        w=w.copy(),
        target_week=hotspots.week_labels[t],
        final_loss=final_loss,
        iterations_used=iterations,
        subzone_ids=list(hotspots.subzone_ids),
        loss_history=losses,
    )


def weight_grid(step: float) -> List[float]:
    """[0, 1] 上步长为 step 的网格，总是包含两个端点"""
    n = int(np.floor(1.0 / step + 1e-9))
    values = [round(k * step, 10) for k in range(n + 1)]
    if values[-1] < 1.0:
        values.append(1.0)
    return values


def _refine_grid(center: float, coarse: float, fine: float) -> List[float]:
    n = int(round(coarse / fine))
    values = {round(min(1.0, max(0.0, center + k * fine)), 10) for k in range(-n, n + 1)}
    return sorted(values)


def search_temporal_weights(
    hotspots: HotspotSeries,
    target_week: Union[int, str],
    config: LearnerConfig,
) -> SpreadingModel:
    """
    坐标搜索时间权重

    依次对每个 w_h 扫描粗网格并重新学习 P，保留损失最小者；
    之后在粗最优附近以细步长再扫一遍。所有候选共用同一个初始矩阵。

    Args:
        hotspots (HotspotSeries): 热点序列
        target_week (int | str): 目标周下标或标签
        config (LearnerConfig): 学习器配置

    Returns:
        SpreadingModel: 最优模型，search_trace 记录所有候选
    """
    t = _resolve_week(hotspots, target_week)
    hotspots.history(t, config.H, lag=1)
    initial = initial_matrix(hotspots.N, week_rng(config.seed, t), config.init_scale)
    grid = weight_grid(config.weight_grid_step)
    cache: Dict[Tuple[float, ...], SpreadingModel] = {}

    def evaluate(w: np.ndarray) -> SpreadingModel:
        key = tuple(round(float(v), 10) for v in w)
        if key not in cache:
            cache[key] = fit_spreading_matrix(hotspots, t, key, config, initial=initial)
        return cache[key]

    start = min(grid, key=lambda v: abs(v - config.initial_weight))
    best = evaluate(np.full(config.H, start))

    def sweep(h: int, values: Sequence[float]) -> None:
        nonlocal best
        for value in values:
            candidate = best.w.copy()
            candidate[h] = value
            model = evaluate(candidate)
            if model.final_loss < best.final_loss:
                best = model

    for h in range(config.H):
        sweep(h, grid)

    if config.weight_refine_step is not None and config.weight_refine_step < config.weight_grid_step:
        for h in range(config.H):
            sweep(h, _refine_grid(best.w[h], config.weight_grid_step, config.weight_refine_step))

    best.search_trace = [(key, model.final_loss) for key, model in cache.items()]
    LOGGER.debug("%s: w=%s loss=%.6f (%d 个候选)", best.target_week, best.w, best.final_loss, len(cache))
    return best


def eligible_weeks(hotspots: HotspotSeries, config: LearnerConfig, labels: Optional[Sequence[str]] = None) -> List[int]:
    """有足够历史、且在 labels 范围内的目标周下标"""
    wanted = set(hotspots.week_labels if labels is None else labels)
    return [t for t in range(config.H, hotspots.T) if hotspots.week_labels[t] in wanted]


async def learn_weeks(
    hotspots: HotspotSeries,
    config: LearnerConfig,
    labels: Optional[Sequence[str]] = None,
    progress_callback: Optional[Callable[[int, int, str], None]] = None,
) -> List[SpreadingModel]:
    """
    并发学习多个目标周

    Args:
        hotspots (HotspotSeries): 热点序列
        config (LearnerConfig): 学习器配置
        labels (Sequence[str]): 需要学习的周，默认全部
        progress_callback (Callable[[int, int, str], None]): 进度回调

    Returns:
        List[SpreadingModel]: 按周排序的模型
    """
    weeks = eligible_weeks(hotspots, config, labels)
    semaphore = asyncio.Semaphore(config.max_concurrent)
    done = 0

    async def learn_wrapper(t: int) -> SpreadingModel:
        nonlocal done
        async with semaphore:
            model = await asyncio.to_thread(search_temporal_weights, hotspots, t, config)
        done += 1
        if progress_callback:
            progress_callback(done, len(weeks), model.target_week)
        return model

    return list(await asyncio.gather(*[learn_wrapper(t) for t in weeks]))
