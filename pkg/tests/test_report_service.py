import pandas as pd
import pytest

from app.models.experiment_schemas import ExperimentReport, MemoryMode
from app.models.policy_schemas import PolicyVariant
from app.services.report_service import CSV_COLUMNS, SWEEP_COLUMNS, ReportService


def make_report(policy=PolicyVariant.FIFO, capacity=10, seed=0, hits=30, tasks=100, window=None, main=None,
                memory=MemoryMode.FULL):
    return ExperimentReport(
        memory=memory,
        policy=policy,
        capacity=capacity,
        window=window,
        main=main,
        seed=seed,
        distribution="zipf1",
        mhr=hits / tasks,
        mhr_post_warmup=hits / tasks,
        mra=0.0,
        re=hits / tasks,
        rt=hits * 5 / (tasks * 6),
        warmup_step=None,
        hit_rate_series=[0.0, 0.5],
        occupancy_series=[0.1, 0.2],
        e_total=tasks,
        e_reduced=hits,
        t_total=tasks * 6.0,
        t_reduced=hits * 5.0,
        t_spent=tasks * 6.0 - hits * 5.0,
    )


def test_report_rejects_impossible_reductions():
    with pytest.raises(ValueError):
        make_report(hits=120, tasks=100)


def test_label():
    assert make_report().label() == "fifo[10]_zipf1_seed0"
    assert make_report(PolicyVariant.W_TINYLFU, window=9, main=1, seed=3).label() == "w_tinylfu[9,1]_zipf1_seed3"


def test_reports_frame_leaves_missing_values_blank():
    frame = ReportService.reports_frame([make_report()])
    assert list(frame.columns) == CSV_COLUMNS
    text = ReportService.to_csv_text(frame)
    assert text.splitlines()[1] == "fifo,10,,,0,0.3,0.0,0.3,0.25,"


def test_series_frame():
    frame = ReportService.series_frame(make_report())
    assert frame.to_dict("list") == {"step": [0, 1], "hit_rate": [0.0, 0.5], "occupancy": [0.1, 0.2]}


def test_summary_frame_groups_seeds():
    reports = [make_report(seed=s, hits=20 + s) for s in range(3)]
    reports += [make_report(PolicyVariant.W_TINYLFU, window=9, main=1, seed=s, hits=40) for s in range(3)]
    summary = ReportService.summary_frame(reports)
    assert len(summary) == 2
    assert summary["runs"].tolist() == [3, 3]
    assert summary.loc[0, "mean_mhr"] == pytest.approx(0.21)


def test_trends_frame():
    reports = [make_report(capacity=c, hits=h) for c, h in [(5, 10), (10, 25), (20, 50)]]
    trends = ReportService.trends_frame(reports).set_index("metric")["value"]
    assert trends["re_on_mhr_slope"] == pytest.approx(1.0)
    assert trends["re_on_mhr_r2"] == pytest.approx(1.0)
    assert trends["mhr_ratio_20_vs_5"] == pytest.approx(5.0)


def test_trends_frame_without_spread():
    trends = ReportService.trends_frame([make_report(), make_report(seed=1)])
    assert "re_on_mhr_slope" not in set(trends["metric"])


def test_write_csv_creates_parents(tmp_path):
    path = tmp_path / "nested" / "run.csv"
    ReportService.write_csv(ReportService.reports_frame([make_report()], SWEEP_COLUMNS), path)
    assert list(pd.read_csv(path).columns) == SWEEP_COLUMNS


def test_ablated_runs_are_summarised_apart_and_left_out_of_trends():
    full = [make_report(capacity=c, hits=h) for c, h in [(5, 10), (10, 25), (20, 50)]]
    ablated = [make_report(capacity=c, hits=0, memory=MemoryMode.NO_SHORT_TERM) for c in (5, 10, 40)]

    summary = ReportService.summary_frame(full + ablated)
    assert summary["memory"].tolist() == ["full"] * 3 + ["no_short_term"] * 3
    assert summary.loc[summary["memory"] == "no_short_term", "mean_re"].tolist() == [0.0] * 3

    trends = ReportService.trends_frame(full + ablated).set_index("metric")["value"]
    assert trends["mhr_ratio_20_vs_5"] == pytest.approx(5.0)
    assert "mhr_ratio_40_vs_5" not in trends.index
