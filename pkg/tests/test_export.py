import json
from pathlib import Path

import numpy as np
import pandas
import pytest

from carnot_kit.data_models.report import ExperimentConfig
from carnot_kit.data_models.report import Report
from carnot_kit.export import csv_header
from carnot_kit.export import extremal_path_frame
from carnot_kit.export import figure_slice_frame
from carnot_kit.export import model_to_json_text
from carnot_kit.export import probe_report_to_csv
from carnot_kit.export import read_csv_table
from carnot_kit.export import write_csv
from carnot_kit.export import write_json
from carnot_kit.export import write_json_lines
from carnot_kit.fields import horizontal_norm_squared_field
from carnot_kit.geodesics import dump_path_csv
from carnot_kit.geodesics import flow_extremal
from carnot_kit.heisenberg import HEISENBERG
from carnot_kit.probe import semiconcavity_scan

STAMP = "2024-01-01T00:00:00+00:00"


class TestCsv:

    def test_header_line(self) -> None:
        assert csv_header(STAMP) == (
            f"# schema_version=1 generated_at={STAMP}\n"
        )

    def test_doubles_survive_the_file(self, tmp_path: Path) -> None:
        # Given values that need all 17 significant digits
        df = pandas.DataFrame({"a": [0.1, 1.0 / 3.0, np.pi]})
        path = tmp_path / "values.csv"

        # When writing and reading back
        write_csv(df, path, STAMP)
        loaded = read_csv_table(path)

        # Then the values are bit for bit the same
        assert loaded["a"].tolist() == df["a"].tolist()

    def test_line_endings_and_header(self, tmp_path: Path) -> None:
        path = tmp_path / "values.csv"
        write_csv(pandas.DataFrame({"a": [1.5]}), path, STAMP)
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        assert raw.decode().splitlines() == [
            f"# schema_version=1 generated_at={STAMP}",
            "a",
            "1.5",
        ]

    def test_probe_report_columns(self, tmp_path: Path) -> None:
        # Given a scan of the horizontal norm at one point
        report = semiconcavity_scan(
            horizontal_norm_squared_field(HEISENBERG),
            [[0.1, 0.2, 0.3]],
            dirs=[[1.0, 0.0]],
            ladder=[0.1, 0.01, 0.001],
        )
        path = tmp_path / "probe.csv"

        # When exporting
        probe_report_to_csv(report, path, STAMP)

        # Then one row per sample carries the quotients
        table = read_csv_table(path)
        assert list(table.columns) == [
            "level",
            "p_1",
            "p_2",
            "p_3",
            "h_1",
            "h_2",
            "second_diff",
            "quotient2",
            "quotient1",
        ]
        assert len(table) == 3
        assert table["quotient2"].tolist() == pytest.approx([2.0] * 3)


class TestFrames:

    def test_figure_slice_is_long_format(self) -> None:
        xs = [-1.0, 0.0, 1.0]
        zs = [0.0, 0.5]
        values = np.arange(6.0).reshape(3, 2)

        frame = figure_slice_frame(xs, zs, values)

        assert list(frame.columns) == ["x", "z", "d0sq"]
        assert frame["x"].tolist() == [-1.0, -1.0, 0.0, 0.0, 1.0, 1.0]
        assert frame["z"].tolist() == [0.0, 0.5] * 3
        assert frame["d0sq"].tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_extremal_path_frame(self) -> None:
        path = flow_extremal(HEISENBERG, [1.0, 0.0, 1.0], steps=16)
        frame = extremal_path_frame(path)
        assert list(frame.columns) == [
            "t",
            "p_1",
            "p_2",
            "p_3",
            "xi_1",
            "xi_2",
            "xi_3",
        ]
        assert len(frame) == 17
        assert frame["t"].iloc[-1] == pytest.approx(1.0)

    def test_dump_path_csv(self, tmp_path: Path) -> None:
        path = flow_extremal(HEISENBERG, [1.0, 0.5, 2.0], steps=32)
        filepath = tmp_path / "path.csv"
        dump_path_csv(path, str(filepath))
        table = read_csv_table(filepath)
        assert table["p_3"].iloc[-1] == path.points[-1][2]
        assert filepath.read_text().startswith("# schema_version=1 ")


class TestJson:

    def test_sorted_pretty_json(self) -> None:
        report = Report(
            generated_at=STAMP, config=ExperimentConfig(command="verify")
        )
        text = model_to_json_text(report)
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert list(data["config"]) == sorted(data["config"])
        assert data["schema_version"] == 1
        assert text.endswith("}\n")

    def test_json_lines(self, tmp_path: Path) -> None:
        configs = [
            ExperimentConfig(command="dist", seed=seed) for seed in range(3)
        ]
        path = tmp_path / "configs.jsonl"

        count = write_json_lines(configs, path)

        lines = path.read_text().splitlines()
        assert count == 3
        assert [json.loads(line)["seed"] for line in lines] == [0, 1, 2]

    def test_write_json(self, tmp_path: Path) -> None:
        config = ExperimentConfig(command="probe", params={"b": 1, "a": 2})
        path = tmp_path / "config.json"
        write_json(config, path)
        assert ExperimentConfig.model_validate_json(path.read_text()) == (
            config
        )
