import io
import json
import math
from pathlib import Path
from typing import Any

import pandas
import pytest

from carnot_kit import cli
from carnot_kit import settings
from carnot_kit.cli import CliContext
from carnot_kit.cli import build_parser
from carnot_kit.cli import main
from carnot_kit.cli import parse_direction
from carnot_kit.cli import parse_limit
from carnot_kit.data_models.hopf_lax import HopfLaxResult
from carnot_kit.enums import BackendEnum
from carnot_kit.enums import ExitCodeEnum
from carnot_kit.enums import SuiteEnum
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.heisenberg import HEISENBERG
from carnot_kit.verify import run_suite


def constant_problem(seed: int = 0) -> dict[str, Any]:
    return {
        "group": "heisenberg",
        "phi": {"kind": "quadratic"},
        "g": {"kind": "constant", "params": {"value": 3.0}},
        "t": 1.0,
        "points": [[0.5, 0.0, 0.0]],
        "options": {"samples": 16, "refine_seeds": 0, "seed": seed},
    }


class HopfLaxRecorder:
    """Stands in for hopf_lax_value and keeps the arguments it got."""

    def __init__(self) -> None:
        self.calls: list[tuple[Any, ...]] = []

    def __call__(self, *args: Any) -> HopfLaxResult:
        self.calls.append(args)
        return HopfLaxResult(
            value=0.0,
            argmin=[0.0] * len(args[4]),
            search_radius=1.0,
            evaluations=1,
            refinement_gap=0.0,
        )


class TestParsing:

    def test_parse_limit(self) -> None:
        expected = -8.0 * math.sqrt(math.pi)
        assert parse_limit("-8sqrt(pi)") == pytest.approx(expected)
        assert parse_limit("-8*sqrt(pi)") == pytest.approx(expected)
        assert parse_limit("sqrt(pi)") == pytest.approx(math.sqrt(math.pi))
        assert parse_limit("-14.18") == -14.18

    def test_parse_limit_rejects_garbage(self) -> None:
        with pytest.raises(ConfigurationError):
            parse_limit("minus eight")

    def test_parse_direction(self) -> None:
        assert parse_direction("e2", HEISENBERG) == [0.0, 1.0]
        assert parse_direction("3,4", HEISENBERG) == pytest.approx(
            [0.6, 0.8]
        )
        with pytest.raises(ConfigurationError):
            parse_direction("e3", HEISENBERG)


class TestDist:

    def test_exact_distance(self, capsys: pytest.CaptureFixture[str]) -> None:
        # Given the unit point of the center axis
        # When asking for its distance
        code = main(["dist", "--group", "heisenberg", "--point", "0,0,1"])

        # Then d^2 = 4 pi is printed as one JSON line
        assert code == ExitCodeEnum.OK
        line = json.loads(capsys.readouterr().out)
        assert line["backend"] == "exact"
        assert line["d2"] == pytest.approx(4 * math.pi)

    def test_unknown_group(self) -> None:
        code = main(["dist", "--group", "sl2", "--point", "0,0,1"])
        assert code == ExitCodeEnum.BAD_CONFIG

    def test_wrong_point_dimension(self) -> None:
        code = main(["dist", "--group", "heisenberg", "--point", "1,2"])
        assert code == ExitCodeEnum.BAD_CONFIG

    def test_output_file_and_config(self, tmp_path: Path) -> None:
        # Given a config file holding the point
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"point": "1,0,0", "group": "rxh"}))
        output = tmp_path / "out.json"

        # When flags override the group
        code = main(
            [
                "dist",
                "--group",
                "heisenberg",
                "--config",
                str(config),
                "--output",
                str(output),
            ]
        )

        # Then the result lands in the output file
        assert code == ExitCodeEnum.OK
        line = json.loads(output.read_text())
        assert line["group"] == "heisenberg"
        assert line["d"] == pytest.approx(1.0)

    def test_unreadable_config(self, tmp_path: Path) -> None:
        config = tmp_path / "config.json"
        config.write_text("[1, 2")
        code = main(["dist", "--config", str(config), "--point", "1,0,0"])
        assert code == ExitCodeEnum.BAD_CONFIG


class TestProbe:

    def test_first_order_limit_on_the_axis(
        self, capsys: pytest.CaptureFixture[str]
    ) -> None:
        code = main(
            [
                "probe",
                "--group",
                "heisenberg",
                "--order",
                "1",
                "--center-axis",
                "--dir",
                "e1",
                "--expect",
                "limit=-8sqrt(pi)",
            ]
        )
        assert code == ExitCodeEnum.OK
        assert '"value"' in capsys.readouterr().out

    def test_wrong_limit_is_contradicted(self) -> None:
        code = main(
            [
                "probe",
                "--order",
                "1",
                "--center-axis",
                "--expect",
                "limit=8sqrt(pi)",
            ]
        )
        assert code == ExitCodeEnum.EXPECTATION_CONTRADICTED

    def test_blowup_on_the_axis(self, tmp_path: Path) -> None:
        # Given -d0^2 at the center axis
        output = tmp_path / "probe.json"

        # When probing with a blow-up expectation
        code = main(
            [
                "probe",
                "--field",
                "neg_d0sq",
                "--center-axis",
                "--dir",
                "e1",
                "--expect",
                "blowup",
                "--output",
                str(output),
            ]
        )

        # Then the expectation holds and the report is written
        assert code == ExitCodeEnum.OK
        assert json.loads(output.read_text())["verdict"] == "blowup"

    def test_contradicted_verdict(self) -> None:
        code = main(
            [
                "probe",
                "--field",
                "neg_d0sq",
                "--center-axis",
                "--dir",
                "e1",
                "--expect",
                "bounded",
            ]
        )
        assert code == ExitCodeEnum.EXPECTATION_CONTRADICTED

    def test_csv_report(self, capsys: pytest.CaptureFixture[str]) -> None:
        code = main(
            [
                "probe",
                "--point",
                "0.5,0.1,0.2",
                "--random-directions",
                "0",
                "--format",
                "csv",
            ]
        )
        assert code == ExitCodeEnum.OK
        out = capsys.readouterr().out
        assert out.startswith("# schema_version=1 ")
        table = pandas.read_csv(io.StringIO(out), comment="#")
        assert len(table) == 2 * 5

    def test_bad_expectation(self) -> None:
        code = main(
            ["probe", "--point", "0.5,0.1,0.2", "--expect", "maybe"]
        )
        assert code == ExitCodeEnum.BAD_CONFIG


class TestFigureSlice:

    def test_grid(self, capsys: pytest.CaptureFixture[str]) -> None:
        # Given a 3 x 3 slice
        code = main(["figure-slice", "--resolution", "3"])

        # Then the table covers the grid in long format
        assert code == ExitCodeEnum.OK
        table = pandas.read_csv(
            io.StringIO(capsys.readouterr().out), comment="#"
        )
        assert list(table.columns) == ["x", "z", "d0sq"]
        assert len(table) == 9
        row = table[(table["x"] == 0.0) & (table["z"] == 2.0)]
        assert row["d0sq"].iloc[0] == pytest.approx(8 * math.pi)

    def test_only_heisenberg(self) -> None:
        code = main(["figure-slice", "--group", "engel"])
        assert code == ExitCodeEnum.BAD_CONFIG

    def test_bad_range(self) -> None:
        code = main(["figure-slice", "--x-range", "2,-2"])
        assert code == ExitCodeEnum.BAD_CONFIG


class TestHopfLax:

    def test_problem_document(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        # Given a constant datum evaluated at two times
        problem = tmp_path / "problem.json"
        problem.write_text(
            json.dumps(
                {
                    "group": "heisenberg",
                    "phi": {"kind": "quadratic"},
                    "g": {"kind": "constant", "params": {"value": 3.0}},
                    "t": [1.0, 2.0],
                    "points": [[0.5, 0.0, 0.0]],
                    "options": {"samples": 64, "refine_seeds": 0},
                }
            )
        )

        # When running the hopflax command
        code = main(["hopflax", str(problem)])

        # Then each time yields one JSON line holding the constant
        assert code == ExitCodeEnum.OK
        lines = capsys.readouterr().out.splitlines()
        results = [json.loads(line) for line in lines]
        assert [r["t"] for r in results] == [1.0, 2.0]
        assert all(r["value"] == 3.0 for r in results)
        assert all(r["probe_verdict"] is None for r in results)

    def test_default_backend_follows_the_group(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        # Given an rxh problem that names no backend
        problem = tmp_path / "problem.json"
        document = constant_problem()
        document["group"] = "rxh"
        document["points"] = [[0.0, 0.5, 0.0, 0.0]]
        problem.write_text(json.dumps(document))
        recorder = HopfLaxRecorder()
        monkeypatch.setattr(cli, "hopf_lax_value", recorder)

        # When running the hopflax command
        code = main(["hopflax", str(problem)])

        # Then the shooting backend serves the group
        assert code == ExitCodeEnum.OK
        backend = recorder.calls[0][5]
        assert backend.kind == BackendEnum.SHOOTING

    def test_options_keep_the_document_seed(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        # Given a problem document pinning its own seed
        problem = tmp_path / "problem.json"
        problem.write_text(json.dumps(constant_problem(seed=7)))
        recorder = HopfLaxRecorder()
        monkeypatch.setattr(cli, "hopf_lax_value", recorder)

        # When running without and then with --seed
        main(["hopflax", str(problem), "--threads", "2"])
        main(["hopflax", str(problem), "--seed", "5"])

        # Then only the flag overrides it and workers follow --threads
        first, second = (call[-1] for call in recorder.calls)
        assert first.seed == 7
        assert first.workers == 2
        assert second.seed == 5

    def test_missing_problem(self, tmp_path: Path) -> None:
        code = main(["hopflax", str(tmp_path / "absent.json")])
        assert code == ExitCodeEnum.BAD_CONFIG

    def test_invalid_phi(self, tmp_path: Path) -> None:
        problem = tmp_path / "problem.json"
        problem.write_text(
            json.dumps(
                {
                    "group": "heisenberg",
                    "phi": {"kind": "power", "params": {"alpha": 3.0}},
                    "g": {"kind": "constant"},
                    "t": 1.0,
                    "points": [[0.0, 0.0, 0.0]],
                }
            )
        )
        assert main(["hopflax", str(problem)]) == ExitCodeEnum.BAD_CONFIG


class TestVerify:

    def test_core_suite_passes(self, tmp_path: Path) -> None:
        # Given the core suite
        output = tmp_path / "report.json"

        # When verifying
        code = main(
            ["verify", "core", "--threads", "1", "--output", str(output)]
        )

        # Then every check passed and the config is echoed
        assert code == ExitCodeEnum.OK
        report = json.loads(output.read_text())
        assert report["config"]["command"] == "verify"
        assert report["config"]["params"] == {"suite": "core"}
        assert all(c["status"] != "fail" for c in report["checks"])

    def test_artifact_is_logged(self, tmp_path: Path) -> None:
        code = main(
            [
                "verify",
                "core",
                "--threads",
                "1",
                "--output",
                str(tmp_path / "report.json"),
                "--log-dir",
                str(tmp_path),
            ]
        )
        assert code == ExitCodeEnum.OK
        assert len(list(tmp_path.glob("*-verify-core.json"))) == 1

    def test_run_suite_results_carry_provenance(self) -> None:
        results = run_suite(SuiteEnum.CORE, seed=1)
        assert results
        assert all(r.provenance is not None for r in results)

    def test_unknown_suite(self) -> None:
        with pytest.raises(ConfigurationError):
            run_suite("everything")


def without_timestamp(path: Path) -> list[bytes]:
    return [
        line
        for line in path.read_bytes().splitlines(keepends=True)
        if b"generated_at" not in line
    ]


class TestReproducibility:

    def test_scan_report(self, tmp_path: Path) -> None:
        # Given two runs of the same scan
        outputs = [tmp_path / "first.json", tmp_path / "second.json"]
        for output in outputs:
            code = main(
                [
                    "probe",
                    "--point",
                    "0.5,0.1,0.2",
                    "--random-directions",
                    "2",
                    "--threads",
                    "2",
                    "--output",
                    str(output),
                ]
            )
            assert code == ExitCodeEnum.OK

        # Then the reports agree byte for byte
        assert outputs[0].read_bytes() == outputs[1].read_bytes()

    def test_scan_csv_differs_only_in_the_header(
        self, tmp_path: Path
    ) -> None:
        outputs = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for output in outputs:
            main(
                [
                    "probe",
                    "--point",
                    "0.5,0.1,0.2",
                    "--format",
                    "csv",
                    "--output",
                    str(output),
                ]
            )
        first, second = (without_timestamp(path) for path in outputs)
        assert first == second
        assert len(first) > 1

    @pytest.mark.slow
    def test_verify_report(self, tmp_path: Path) -> None:
        # Given two runs of the core suite with one config
        output = tmp_path / "report.json"
        runs = []
        for _ in range(2):
            code = main(
                ["verify", "core", "--threads", "2", "--output", str(output)]
            )
            assert code == ExitCodeEnum.OK
            runs.append(without_timestamp(output))

        # Then only the generated_at line differs
        assert runs[0] == runs[1]
        assert len(runs[0]) == len(output.read_bytes().splitlines()) - 1


class TestThreads:

    def test_environment_is_honoured(
        self, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        # Given the thread count in the environment
        monkeypatch.setenv(settings.THREADS_ENV_VAR, "3")

        # When no flag is given
        args = build_parser().parse_args(["figure-slice"])

        # Then the environment decides
        assert CliContext(args).threads == 3

    def test_flag_overrides_the_environment(
        self, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv(settings.THREADS_ENV_VAR, "3")
        args = build_parser().parse_args(["figure-slice", "--threads", "2"])
        assert CliContext(args).threads == 2

    def test_bad_environment_value(
        self, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.setenv(settings.THREADS_ENV_VAR, "many")
        code = main(["figure-slice", "--resolution", "3"])
        assert code == ExitCodeEnum.BAD_CONFIG

    def test_zero_threads(self) -> None:
        code = main(["figure-slice", "--resolution", "3", "--threads", "0"])
        assert code == ExitCodeEnum.BAD_CONFIG


class TestExitCodes:

    def test_codes_are_integers(self) -> None:
        assert [int(code) for code in ExitCodeEnum] == [0, 2, 3, 4]
        assert ExitCodeEnum(4) is ExitCodeEnum.BAD_CONFIG

    def test_main_returns_the_code(self) -> None:
        code = main(["figure-slice", "--group", "engel"])
        assert isinstance(code, int)
        assert code == 4
