"""Per-round counters and cross-round aggregation (mean and 95% CI)."""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

# two-sided 95% Student-t quantiles, t(df, 0.975), df = 1..30
T975 = (
    12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281,
    2.2010, 2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860,
    2.0796, 2.0739, 2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423,
)
Z975 = 1.959964


def t_quantile_975(df: int) -> float:
    if df < 1:
        raise ValueError("need at least one degree of freedom")
    if df <= len(T975):
        return T975[df - 1]
    # Cornish-Fisher expansion, accurate to ~1e-3 beyond the table
    z = Z975
    return z + (z**3 + z) / (4 * df) + (5 * z**5 + 16 * z**3 + 3 * z) / (96 * df**2)


@dataclass
class EnergyModel:
    """Radio energy per frame. Declared defaults, not hardware calibration."""

    tx_mj_per_byte: float = 0.020
    rx_mj_per_byte: float = 0.010
    frame_overhead_mj: float = 0.05

    def tx(self, nbytes: int) -> float:
        return self.tx_mj_per_byte * nbytes + self.frame_overhead_mj

    def rx(self, nbytes: int) -> float:
        return self.rx_mj_per_byte * nbytes + self.frame_overhead_mj


@dataclass
class RoundReport:
    data_sent: int = 0
    data_delivered: int = 0
    data_dropped: int = 0
    latency_us: list = field(default_factory=list)
    ctrl_sent: int = 0
    ctrl_received: int = 0
    ctrl_delivered_raw: int = 0
    ctrl_dropped: Counter = field(default_factory=Counter)
    energy_mj: dict = field(default_factory=dict)

    def add_energy(self, node, mj: float) -> None:
        self.energy_mj[node] = self.energy_mj.get(node, 0.0) + mj

    def record_delivery(self, latency_us: int) -> None:
        self.data_delivered += 1
        self.latency_us.append(latency_us)


def pdr(report: RoundReport) -> Optional[float]:
    if report.data_sent == 0:
        return None
    return report.data_delivered / report.data_sent


def mean_latency_ms(report: RoundReport) -> Optional[float]:
    if not report.latency_us:
        return None
    return statistics.fmean(report.latency_us) / 1000.0


def energy_per_delivered(report: RoundReport) -> Optional[float]:
    """Network energy (mJ) spent per data packet that reached the root."""
    total = math.fsum(report.energy_mj.values())
    if report.data_delivered == 0:
        return 0.0 if total == 0 else None
    return total / report.data_delivered


@dataclass(frozen=True)
class Estimate:
    mean: Optional[float]
    ci95: Optional[float]
    n: int


def summarize(values: Iterable[Optional[float]]) -> Estimate:
    """Mean and t-based 95% half-width, ignoring absent values."""
    xs = sorted(v for v in values if v is not None)
    if not xs:
        return Estimate(None, None, 0)
    mean = math.fsum(xs) / len(xs)
    if len(xs) < 2:
        return Estimate(mean, None, len(xs))
    sd = statistics.stdev(xs)
    return Estimate(mean, t_quantile_975(len(xs) - 1) * sd / math.sqrt(len(xs)), len(xs))


def round_metrics(report: RoundReport, drop_reasons: Sequence[str]) -> dict:
    row = {
        "pdr": pdr(report),
        "mean_latency_ms": mean_latency_ms(report),
        "ctrl_sent": float(report.ctrl_sent),
        "ctrl_received": float(report.ctrl_received),
    }
    for reason in drop_reasons:
        row[f"ctrl_dropped_{reason}"] = float(report.ctrl_dropped.get(reason, 0))
    row["energy_per_delivered_mJ"] = energy_per_delivered(report)
    return row


@dataclass
class AggregateReport:
    metrics: dict  # name -> Estimate
    rounds: int

    def mean(self, name: str) -> Optional[float]:
        return self.metrics[name].mean

    def ci95(self, name: str) -> Optional[float]:
        return self.metrics[name].ci95


def aggregate_rounds(reports: Sequence[RoundReport], drop_reasons: Sequence[str] = ()) -> AggregateReport:
    rows = [round_metrics(r, drop_reasons) for r in reports]
    names = list(rows[0]) if rows else []
    return AggregateReport({k: summarize(row[k] for row in rows) for k in names}, len(reports))
