"""Export tools

CSV files start with a ``# schema_version=... generated_at=...`` line and are
written by pandas with 17 significant digits and LF line endings, so that
doubles survive a round trip bit for bit.
"""

import json
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas
from pydantic import BaseModel

from carnot_kit import settings
from carnot_kit.data_models.geodesics import ExtremalPath
from carnot_kit.data_models.probe import ProbeReport
from carnot_kit.utils import get_current_time_iso

FLOAT_FORMAT = "%.17g"


def csv_header(generated_at: str | None = None) -> str:
    stamp = generated_at or get_current_time_iso()
    return f"# schema_version={settings.SCHEMA_VERSION} generated_at={stamp}\n"


def write_csv(
    df: pandas.DataFrame,
    filepath: str | Path,
    generated_at: str | None = None,
) -> None:
    with open(filepath, mode="w", newline="") as file:
        file.write(csv_header(generated_at))
        df.to_csv(
            file, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )


def read_csv_table(filepath: str | Path) -> pandas.DataFrame:
    return pandas.read_csv(filepath, comment="#")


def extremal_path_frame(path: ExtremalPath) -> pandas.DataFrame:
    points = np.asarray(path.points)
    covectors = np.asarray(path.covectors)
    columns: dict[str, object] = {"t": path.times}
    for i in range(points.shape[1]):
        columns[f"p_{i + 1}"] = points[:, i]
    for i in range(covectors.shape[1]):
        columns[f"xi_{i + 1}"] = covectors[:, i]
    return pandas.DataFrame(columns)


def extremal_path_to_csv(path: ExtremalPath, filepath: str | Path) -> None:
    write_csv(extremal_path_frame(path), filepath)


def probe_report_frame(report: ProbeReport) -> pandas.DataFrame:
    rows = []
    for sample in report.samples:
        row: dict[str, float] = {"level": sample.level}
        for i, value in enumerate(sample.p):
            row[f"p_{i + 1}"] = value
        for i, value in enumerate(sample.h):
            row[f"h_{i + 1}"] = value
        row["second_diff"] = sample.second_diff
        row["quotient2"] = sample.quotient2
        row["quotient1"] = sample.quotient1
        rows.append(row)
    return pandas.DataFrame(rows)


def probe_report_to_csv(
    report: ProbeReport,
    filepath: str | Path,
    generated_at: str | None = None,
) -> None:
    write_csv(probe_report_frame(report), filepath, generated_at)


def figure_slice_frame(
    x_values: Iterable[float],
    z_values: Iterable[float],
    d0_squared: np.ndarray,
) -> pandas.DataFrame:
    """Long-format table of the plane y = 0: columns x, z, d0sq."""
    xs, zs = np.meshgrid(
        np.asarray(list(x_values)), np.asarray(list(z_values)), indexing="ij"
    )
    return pandas.DataFrame(
        {"x": xs.ravel(), "z": zs.ravel(), "d0sq": np.ravel(d0_squared)}
    )


def model_to_json_text(model: BaseModel) -> str:
    """Pretty JSON with sorted keys; one value per line."""
    data = model.model_dump(mode="json")
    return json.dumps(data, indent=4, sort_keys=True) + "\n"


def write_json(model: BaseModel, filepath: str | Path) -> None:
    Path(filepath).write_text(model_to_json_text(model))


def write_json_lines(
    models: Iterable[BaseModel], filepath: str | Path
) -> int:
    count = 0
    with open(filepath, mode="w", newline="") as file:
        for model in models:
            file.write(model.model_dump_json() + "\n")
            count += 1
    return count
