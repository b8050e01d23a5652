"""
hotspot_spread.weeks

流行病学周历，基于 epiweeks。周标签形如 ``2013-W24``：
星期日起始为 CDC 周，星期一起始为 ISO 周。
"""

import re
from dataclasses import dataclass
from datetime import date
from typing import List, Optional, Sequence

from epiweeks import Week

from .exceptions import InvalidConfig
from .utils.utils import raise_for_statement


# 周起始日 -> epiweeks 周系统
WEEK_SYSTEMS = {
    "sunday": "cdc",
    "monday": "iso",
}

LABEL_PATTERN = re.compile(r"^(\d{4})-W(\d{2})$")


def format_label(week: Week) -> str:
    return f"{week.year}-W{week.week:02d}"


@dataclass(frozen=True)
class EpiWeekCalendar:
    """
    流行病学周历

    Args:
        week_start (str): 每周起始日，sunday 或 monday，默认 sunday
    """

    week_start: str = "sunday"

    def __post_init__(self):
        raise_for_statement(
            self.week_start.lower() in WEEK_SYSTEMS,
            f"未知的周起始日: {self.week_start}",
            InvalidConfig,
        )

    @property
    def system(self) -> str:
        return WEEK_SYSTEMS[self.week_start.lower()]

    def week_for(self, day: date) -> Week:
        return Week.fromdate(day, system=self.system)

    def week_start_of(self, day: date) -> date:
        """某日所在周的起始日期"""
        return self.week_for(day).startdate()

    def label_for(self, day: date) -> str:
        """
        某日所在周的标签

        Args:
            day (date): 日期

        Returns:
            str: 周标签
        """
        return format_label(self.week_for(day))

    def parse(self, label: str) -> Week:
        """
        解析周标签

        Raises:
            InvalidConfig: 标签格式错误或周数超出该年范围
        """
        match = LABEL_PATTERN.match(label)
        raise_for_statement(match is not None, f"无法解析周标签: {label}", InvalidConfig)
        try:
            week = Week(int(match.group(1)), int(match.group(2)), system=self.system)
        except ValueError as e:
            raise InvalidConfig(f"周标签超出范围: {label}") from e
        return week

    def start_of(self, label: str) -> date:
        """周标签对应的起始日期"""
        return self.parse(label).startdate()

    def shift(self, label: str, weeks: int) -> str:
        return format_label(self.parse(label) + weeks)

    def labels_between(self, first: date, last: date) -> List[str]:
        """两个日期之间（含）的所有周标签，按时间排序"""
        week = self.week_for(first)
        end = self.week_start_of(last)
        labels = []
        while week.startdate() <= end:
            labels.append(format_label(week))
            week += 1
        return labels


def year_of(label: str) -> int:
    """周标签所属的流行病学年"""
    return int(label[:4])


def select_range(labels: Sequence[str], week_range: Optional[str]) -> List[str]:
    """
    按 ``A:B`` 形式的区间筛选周标签，两端可省略，闭区间

    Args:
        labels (Sequence[str]): 有序周标签
        week_range (str): 区间表达式，None 表示全部

    Returns:
        List[str]: 筛选结果
    """
    if not week_range:
        return list(labels)
    raise_for_statement(":" in week_range, f"周区间应为 A:B 形式: {week_range}", InvalidConfig)
    low, high = (part.strip() or None for part in week_range.split(":", 1))
    for bound in (low, high):
        raise_for_statement(
            bound is None or LABEL_PATTERN.match(bound) is not None,
            f"无法解析周标签: {bound}",
            InvalidConfig,
        )
    # 标签零填充，字符串序即时间序
    return [
        label
        for label in labels
        if (low is None or label >= low) and (high is None or label <= high)
    ]
