"""
hotspot_spread.exceptions

异常定义。UsageError 对应命令行退出码 2，DataError 对应退出码 1。
"""


class HotspotSpreadError(Exception):
    """所有异常的基类"""

    exit_code = 1


class UsageError(HotspotSpreadError):
    """参数或配置错误"""

    exit_code = 2


class DataError(HotspotSpreadError):
    """输入数据错误"""

    exit_code = 1


class InvalidThreshold(UsageError):
    """热点阈值 c < 1"""


class InvalidConfig(UsageError):
    """配置项不合法"""


class InvalidScenario(UsageError):
    """合成场景参数不合法"""


class MissingHeader(DataError):
    """CSV 缺少表头或必需列"""


class NoDateSource(DataError):
    """文件名与日期列都无法给出采集日期"""


class InputNotFound(DataError):
    """输入文件不存在或无法打开"""


class MalformedInput(DataError):
    """输入文件编码或格式错误"""


class EmptyAfterFiltering(DataError):
    """所有记录都无法映射到分区"""


class InvalidSubzoneIndex(DataError):
    """分区边界文件不合法"""


class DimensionMismatch(DataError):
    """矩阵或向量维度不一致"""


class InsufficientHistory(DataError):
    """目标周之前的历史周数不足 H"""


class EmptyInput(DataError):
    """输入为空"""


class EmptyAfterMapping(DataError):
    """所有通勤记录都无法映射到分区"""


class MissingPlanningArea(DataError):
    """分区缺少规划区编号"""


class ZeroVariance(DataError):
    """常数向量，相关系数无定义"""


class DownloadError(DataError):
    """下载失败"""


class ZeroMatrixWarning(UserWarning):
    """某周的传播矩阵最大值不为正"""
