import json
import math

import pytest

from geoentropy.cli import main
from geoentropy.experiment import read_csv
from geoentropy.graphs import Graph, gibbs_entropy, write_graph


@pytest.fixture
def triangle_file(tmp_path):
    path = tmp_path / "triangle.txt"
    write_graph(Graph(5, [(0, 1), (1, 2), (0, 2)]), path)
    return str(path)


class TestGibbsCommand:
    def test_prints_value(self, capsys):
        assert main(["gibbs", "--n", "4", "--k", "3"]) == 0
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(gibbs_entropy(4, 3), rel=1e-15)

    def test_bad_k_exits_2(self, capsys):
        assert main(["gibbs", "--n", "4", "--k", "99"]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_args_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["gibbs", "--n", "4"])
        assert exc.value.code == 2


class TestComponentsCommand:
    def test_triangle(self, triangle_file, capsys):
        assert main(["components", "--graph", triangle_file]) == 0
        assert capsys.readouterr().out.strip() == "3"

    def test_missing_file(self, capsys):
        assert main(["components", "--graph", "/does/not/exist.txt"]) == 1
        assert "exist.txt" in capsys.readouterr().err


class TestEntropyCommand:
    BASE = [
        "entropy", "--weight-model", "constant", "--r", "0.2",
        "--theta-min", "0.25", "--theta-max", "10", "--samples", "2000", "--seed", "5",
    ]

    def test_json_fields(self, triangle_file, capsys):
        assert main(self.BASE + ["--graph", triangle_file]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"log_volume", "s", "stderr", "excluded_fraction"}
        assert math.isfinite(payload["s"])
        assert payload["stderr"] >= 0

    def test_empty_graph_exact_zero(self, tmp_path, capsys):
        path = tmp_path / "empty.txt"
        write_graph(Graph(4), path)
        assert main(self.BASE + ["--graph", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["s"] == 0.0
        assert payload["excluded_fraction"] == 0.0

    def test_estimation_failure_exit_3(self, triangle_file, capsys):
        argv = self.BASE + ["--graph", triangle_file, "--log10-cap", "-50"]
        assert main(argv) == 3
        assert "estimation failed" in capsys.readouterr().err

    def test_deterministic_output(self, triangle_file, capsys):
        main(self.BASE + ["--graph", triangle_file])
        first = capsys.readouterr().out
        main(self.BASE + ["--graph", triangle_file])
        assert capsys.readouterr().out == first


class TestSweepCommand:
    def test_end_to_end(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        argv = [
            "sweep", "--n", "6", "--k-max", "6", "--k-step", "3",
            "--weight-model", "constant", "--r", "0.2",
            "--theta-min", "0.25", "--theta-max", "10",
            "--samples", "300", "--realizations", "2", "--seed", "11",
            "--out", str(out), "--threads", "2",
        ]
        assert main(argv) == 0
        curve, echo = read_csv(out)
        assert [r.k for r in curve.rows] == [0, 3, 6]
        assert echo["master_seed"] == "11"
        assert curve.rows[0].s_tilde_mean == 0.0

    def test_theta_coupled_model(self, tmp_path):
        out = tmp_path / "coupled.csv"
        argv = [
            "sweep", "--n", "5", "--k-max", "4", "--k-step", "2",
            "--weight-model", "theta-coupled", "--r", "0.2",
            "--theta-min", "0.25", "--theta-max", "10",
            "--samples", "300", "--realizations", "2", "--seed", "3",
            "--out", str(out),
        ]
        assert main(argv) == 0
        _, echo = read_csv(out)
        assert echo["weight_model"] == "theta_coupled"

    def test_invalid_model_exits_2(self, tmp_path):
        argv = [
            "sweep", "--n", "5", "--k-max", "4",
            "--weight-model", "bogus", "--r", "0.2",
            "--theta-min", "0.25", "--theta-max", "10",
            "--samples", "300", "--realizations", "2", "--seed", "3",
            "--out", str(tmp_path / "x.csv"),
        ]
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2

    def test_unwritable_out_exits_1(self):
        argv = [
            "sweep", "--n", "5", "--k-max", "2", "--k-step", "1",
            "--weight-model", "constant", "--r", "0.2",
            "--theta-min", "0.25", "--theta-max", "10",
            "--samples", "300", "--realizations", "1", "--seed", "3",
            "--out", "/no/such/dir/x.csv",
        ]
        assert main(argv) == 1
