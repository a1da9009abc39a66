"""
app/services/report_service.py

Tabular views of experiment reports: the per-run CSV row, per-step hit-rate
series for plotting, and the sweep summary with the RE-on-MHR fit. The
summary keeps memory modes apart so full and ablated runs sit side by side;
trends only look at runs with full memory.
"""

from pathlib import Path
from typing import List, Sequence

import pandas as pd
from scipy import stats

from app.models.experiment_schemas import ExperimentReport, MemoryMode
from app.utils.logger import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ["policy", "capacity", "window", "main", "seed", "mhr", "mra", "re", "rt", "warmup_step"]
SWEEP_COLUMNS = CSV_COLUMNS + ["distribution", "mhr_post_warmup", "memory"]
GROUP_COLUMNS = ["policy", "capacity", "window", "main", "distribution", "memory"]


class ReportService:
    """Builds and writes report tables"""

    @staticmethod
    def reports_frame(reports: Sequence[ExperimentReport], columns: List[str] = CSV_COLUMNS) -> pd.DataFrame:
        rows = [report.model_dump(mode="json", include=set(columns)) for report in reports]
        frame = pd.DataFrame(rows, columns=columns)
        for column in ("window", "main", "warmup_step"):
            frame[column] = frame[column].astype("Int64")
        return frame

    @staticmethod
    def series_frame(report: ExperimentReport) -> pd.DataFrame:
        return pd.DataFrame({
            "step": range(len(report.hit_rate_series)),
            "hit_rate": report.hit_rate_series,
            "occupancy": report.occupancy_series,
        })

    @staticmethod
    def summary_frame(reports: Sequence[ExperimentReport]) -> pd.DataFrame:
        """Means per grid point across seeds"""
        frame = ReportService.reports_frame(reports, SWEEP_COLUMNS)
        summary = frame.groupby(GROUP_COLUMNS, dropna=False, sort=False).agg(
            runs=("seed", "count"),
            mean_mhr=("mhr", "mean"),
            mean_mhr_post_warmup=("mhr_post_warmup", "mean"),
            mean_mra=("mra", "mean"),
            mean_re=("re", "mean"),
            mean_rt=("rt", "mean"),
        )
        return summary.reset_index()

    @staticmethod
    def trends_frame(reports: Sequence[ExperimentReport]) -> pd.DataFrame:
        """RE-on-MHR regression over full-memory runs and the largest-vs-smallest capacity MHR ratio"""
        rows = []
        reports = [r for r in reports if r.memory is MemoryMode.FULL]
        mhr = [r.mhr_post_warmup for r in reports]
        re = [r.re for r in reports]
        if len(set(mhr)) >= 2:
            fit = stats.linregress(mhr, re)
            rows += [
                {"metric": "re_on_mhr_slope", "policy": "all", "value": fit.slope},
                {"metric": "re_on_mhr_intercept", "policy": "all", "value": fit.intercept},
                {"metric": "re_on_mhr_r2", "policy": "all", "value": fit.rvalue ** 2},
            ]
        else:
            logger.warning("RE-on-MHR fit skipped: fewer than two distinct MHR values")

        frame = ReportService.reports_frame(reports, SWEEP_COLUMNS)
        for policy, group in frame.groupby("policy", sort=False):
            low, high = group["capacity"].min(), group["capacity"].max()
            if low == high:
                continue
            low_mhr = group.loc[group["capacity"] == low, "mhr"].mean()
            high_mhr = group.loc[group["capacity"] == high, "mhr"].mean()
            if low_mhr > 0:
                rows.append({
                    "metric": f"mhr_ratio_{high}_vs_{low}",
                    "policy": policy,
                    "value": high_mhr / low_mhr,
                })
        return pd.DataFrame(rows, columns=["metric", "policy", "value"])

    @staticmethod
    def write_csv(frame: pd.DataFrame, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
        logger.info(f"Wrote {len(frame)} rows to {path}")

    @staticmethod
    def to_csv_text(frame: pd.DataFrame) -> str:
        return frame.to_csv(index=False)

    @staticmethod
    def describe(report: ExperimentReport) -> str:
        """One human-readable line per run"""
        warmup = "never" if report.warmup_step is None else f"step {report.warmup_step}"
        return (
            f"{report.label()}: MHR {report.mhr:.3f} (post-warm-up {report.mhr_post_warmup:.3f}), "
            f"MRA {report.mra:.3f}, RE {report.re:.3f}, RT {report.rt:.3f}, warm-up {warmup}"
        )
