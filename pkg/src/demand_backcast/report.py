"""Report tables, figures and the hashed artifact manifest for a back-forecast run.

All internal quantities are MW; the GW columns written here are MW / 1000.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .features import Season
from .metrics import grouped_stats, top_k_hours
from .pipeline import BackcastResult, save_models

log = logging.getLogger(__name__)

TOP_K = 20
DIST_SEASONS = (Season.SUMMER, Season.WINTER)
TIMING_COLUMNS = ("seconds",)


def _stamp(ts) -> np.ndarray:
    return np.datetime_as_string(np.asarray(ts, dtype="datetime64[h]"), unit="m")


def seasonal_distribution(predictions: pd.DataFrame) -> pd.DataFrame:
    """Per model, year and season: min, quartiles and max of hourly demand in GW."""
    rows = []
    years = predictions["timestamp"].to_numpy().astype("datetime64[Y]").astype(int) + 1970
    for (model, season, year), grp in predictions.assign(year=years).groupby(["model", "season", "year"], sort=True):
        if season not in {s.value for s in DIST_SEASONS}:
            continue
        gw = grp["demand_mw"].to_numpy() / 1000.0
        q = np.quantile(gw, [0.0, 0.25, 0.5, 0.75, 1.0])
        rows.append(
            {
                "model": model,
                "season": season,
                "year": int(year),
                "n_hours": len(gw),
                "min_gw": q[0],
                "q1_gw": q[1],
                "median_gw": q[2],
                "q3_gw": q[3],
                "max_gw": q[4],
            }
        )
    return pd.DataFrame(rows, columns=["model", "season", "year", "n_hours", "min_gw", "q1_gw", "median_gw", "q3_gw", "max_gw"])


def holdout_hourly(holdout: pd.DataFrame) -> pd.DataFrame:
    """Per model and season, 24 hour-of-day rows of max and mean +/- standard error."""
    rows = []
    for (model, season), grp in holdout.groupby(["model", "season"], sort=True):
        ts = grp["timestamp"].to_numpy()
        cols = {}
        for label, col in (("predicted", "predicted_mw"), ("actual", "actual_mw")):
            v = grp[col].to_numpy()
            for stat in ("max", "mean", "std_error"):
                cols[f"{label}_{stat}"] = grouped_stats(ts, v, "hour_of_day", stat)
        count = grouped_stats(ts, grp["actual_mw"].to_numpy(), "hour_of_day", "count")
        for h in range(24):
            row = {"model": model, "season": season, "hour": h, "n": int(count.get(h, 0))}
            for key, table in cols.items():
                row[f"{key}_gw"] = table.get(h, float("nan")) / 1000.0
            rows.append(row)
    return pd.DataFrame(rows)


def top_hours_by_year(predictions: pd.DataFrame, k: int = TOP_K) -> pd.DataFrame:
    rows = []
    for model, grp in predictions.groupby("model", sort=True):
        picked = top_k_hours(grp["timestamp"].to_numpy(), grp["demand_mw"].to_numpy(), k, per_year=True)
        rank, year = 0, None
        for ts, mw in picked:
            y = int(ts.astype("datetime64[Y]").astype(int)) + 1970
            rank = rank + 1 if y == year else 1
            year = y
            rows.append({"model": model, "year": y, "rank": rank, "timestamp": ts, "demand_gw": mw / 1000.0})
    return pd.DataFrame(rows, columns=["model", "year", "rank", "timestamp", "demand_gw"])


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    df = df.copy()
    for col in df.columns:
        if np.issubdtype(df[col].dtype, np.datetime64):
            df[col] = _stamp(df[col].to_numpy())
    df.to_csv(path, index=False, lineterminator="\n")


def _figures(dist: pd.DataFrame, hourly: pd.DataFrame, top: pd.DataFrame, outdir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.figure import Figure

    paths = []
    rc = {"svg.hashsalt": "demand-backcast", "svg.fonttype": "path"}
    with matplotlib.rc_context(rc):
        for model in sorted(dist["model"].unique()):
            fig = Figure(figsize=(10, 6))
            axes = fig.subplots(len(DIST_SEASONS), 1, sharex=True, squeeze=False)[:, 0]
            for ax, season in zip(axes, DIST_SEASONS):
                sub = dist[(dist["model"] == model) & (dist["season"] == season.value)]
                stats = [
                    {"label": str(r.year), "whislo": r.min_gw, "q1": r.q1_gw, "med": r.median_gw, "q3": r.q3_gw, "whishi": r.max_gw}
                    for r in sub.itertuples()
                ]
                if stats:
                    ax.bxp(stats, showfliers=False)
                ax.set_ylabel(f"{season.value} demand (GW)")
                ax.tick_params(axis="x", labelrotation=90)
            fig.suptitle(f"Back-forecast demand distribution ({model})")
            p = outdir / f"seasonal_distribution_{model}.svg"
            fig.savefig(p, format="svg", metadata={"Date": None})
            paths.append(p)

        for model in sorted(hourly["model"].unique()):
            sub = hourly[hourly["model"] == model]
            seasons = sorted(sub["season"].unique())
            fig = Figure(figsize=(10, 3 * len(seasons)))
            axes = fig.subplots(len(seasons), 1, squeeze=False)[:, 0]
            for ax, season in zip(axes, seasons):
                s = sub[sub["season"] == season]
                for label, style in (("actual", "-"), ("predicted", "--")):
                    ax.plot(s["hour"], s[f"{label}_max_gw"], style, label=f"{label} max")
                    ax.errorbar(s["hour"], s[f"{label}_mean_gw"], yerr=s[f"{label}_std_error_gw"], fmt=style, label=f"{label} mean")
                ax.set_title(season)
                ax.set_ylabel("GW")
                ax.legend(fontsize="small")
            axes[-1].set_xlabel("hour of day")
            p = outdir / f"holdout_hourly_{model}.svg"
            fig.savefig(p, format="svg", metadata={"Date": None})
            paths.append(p)

        for model in sorted(top["model"].unique()):
            sub = top[top["model"] == model]
            fig = Figure(figsize=(10, 4))
            ax = fig.subplots()
            ax.scatter(sub["year"], sub["demand_gw"], s=8)
            ax.set_xlabel("year")
            ax.set_ylabel(f"top {TOP_K} hourly demand (GW)")
            p = outdir / f"top20_by_year_{model}.svg"
            fig.savefig(p, format="svg", metadata={"Date": None})
            paths.append(p)
    return paths


def file_digest(path: Path) -> str:
    """sha256 of a file; wall-time columns of CSV traces are left out."""
    path = Path(path)
    if path.suffix == ".csv" and path.parent.name == "traces":
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        keep = [i for i, c in enumerate(rows[0]) if c not in TIMING_COLUMNS] if rows else []
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for r in rows:
            w.writerow([r[i] for i in keep])
        return hashlib.sha256(buf.getvalue().encode()).hexdigest()
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(outdir: Path, files: list[Path]) -> Path:
    outdir = Path(outdir)
    entries = {str(p.relative_to(outdir).as_posix()): file_digest(p) for p in sorted(files)}
    path = outdir / "manifest.json"
    path.write_text(json.dumps({"files": entries}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def metrics_document(result: BackcastResult) -> dict:
    return {
        "metrics": {k: v.to_dict() for k, v in result.metrics.items()},
        "clamped_predictions": dict(sorted(result.clamped.items())),
        "dropped_missing_demand_hours": result.dropped,
        "prediction_rows": {k: int(n) for k, n in result.predictions.groupby("model").size().items()},
        "best_epochs": {k: t.best_epoch for k, t in sorted(result.traces.items())},
    }


def emit_report(result: BackcastResult, outdir, figures: bool = True) -> dict[str, str]:
    """Write every table, figure and artifact under ``outdir``; returns the manifest entries."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []

    def table(df: pd.DataFrame, name: str) -> pd.DataFrame:
        p = outdir / name
        _write_csv(df, p)
        files.append(p)
        return df

    table(result.predictions[["timestamp", "model", "season", "demand_mw"]], "predictions.csv")
    table(result.holdout, "holdout_predictions.csv")
    dist = table(seasonal_distribution(result.predictions), "seasonal_distribution.csv")
    hourly = table(holdout_hourly(result.holdout), "holdout_hourly.csv")
    top = table(top_hours_by_year(result.predictions), "top20_by_year.csv")

    p = outdir / "metrics.json"
    p.write_text(json.dumps(metrics_document(result), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files.append(p)
    if result.config is not None:
        p = outdir / "config.json"
        cfg = {k: v for k, v in result.config.to_dict().items() if k != "output_dir"}
        p.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        files.append(p)

    files.extend(save_models(result.models, outdir / "models").values())
    if result.traces:
        (outdir / "traces").mkdir(exist_ok=True)
        for key, trace in sorted(result.traces.items()):
            p = outdir / "traces" / (key.replace("/", "_") + ".csv")
            trace.to_csv(p)
            files.append(p)
    if figures:
        files.extend(_figures(dist, hourly, top, outdir))
    manifest = write_manifest(outdir, files)
    log.info("wrote %d artifacts and %s", len(files), manifest)
    return json.loads(manifest.read_text())["files"]
