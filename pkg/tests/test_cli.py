import io
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

from cskor import cli
from cskor.boundary import gamma
from cskor.cli import PlotSpec, RunConfig, execute, load_config, render_svg
from cskor.distributions import Uniform
from cskor.embedding import build_map, eval_map, read_map_csv
from cskor.errors import NumericalError, ValidationError

SVG = "{http://www.w3.org/2000/svg}"


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = execute(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def read_csv(path):
    rows = path.read_text().splitlines()
    return rows[0], np.array([[float(v) for v in r.split(",")] for r in rows[1:]])


class TestBuild:
    def test_uniform_first_row(self, tmp_path):
        code, out, _ = run(["build", "--dist", "kind=uniform a=-1 b=1", "--N", "4096", "--output-dir", str(tmp_path)])
        assert code == 0 and "map.csv" in out
        head, rows = read_csv(tmp_path / "map.csv")
        assert head.startswith("log_weight=2 ")
        n, re, im = rows[0]
        # rows hold Re and Im of a_n - i b_n
        assert n == 1 and abs(re) <= 1e-10 and -im == pytest.approx(-2 / math.pi, abs=1e-10)
        diag = json.loads((tmp_path / "diagnostic.json").read_text())
        assert diag["injectivity"]["verdict"] == "pass" and diag["catalog"] == "uniform_catenary"

    def test_roundtrip(self, tmp_path):
        code, _, _ = run(["build", "--dist", "kind=arcsine", "--N", "1024", "--output-dir", str(tmp_path)])
        assert code == 0
        back = read_map_csv(tmp_path / "map.csv")
        from cskor.distributions import Arcsine

        direct = build_map(Arcsine(-1, 1), 1024)
        rng = np.random.default_rng(1)
        z = 0.95 * np.sqrt(rng.uniform(size=100)) * np.exp(2j * math.pi * rng.uniform(size=100))
        assert np.max(np.abs(eval_map(back, z) - eval_map(direct, z))) <= 1e-12

    def test_formal_cauchy_is_labelled(self, tmp_path):
        code, _, _ = run(["build", "--dist", "kind=cauchy", "--variant", "formal_cauchy", "--N", "64",
                          "--output-dir", str(tmp_path)])
        diag = json.loads((tmp_path / "diagnostic.json").read_text())
        assert code == 0 and diag["theorematic"] is False and "note" in diag

    def test_atomic_lists_slits(self, tmp_path):
        code, _, _ = run(["build", "--dist", "kind=atomic points=-1:0.25,0:0.5,1:0.25", "--N", "1024",
                          "--output-dir", str(tmp_path)])
        diag = json.loads((tmp_path / "diagnostic.json").read_text())
        assert code == 0 and len(diag["slit_tips"]) == 1


class TestBoundary:
    def test_arcsine_with_plot(self, tmp_path):
        code, _, _ = run(["boundary", "--dist", "kind=arcsine", "--plot", "--output-dir", str(tmp_path)])
        assert code == 0
        head, rows = read_csv(tmp_path / "boundary.csv")
        assert head == "x,gamma(x)"
        assert PchipInterpolator(rows[:, 0], rows[:, 1])(0.0) == pytest.approx(-2 / math.pi, abs=1e-5)
        root = ET.parse(tmp_path / "plot.svg").getroot()
        assert root.tag == SVG + "svg" and root.get("version") == "1.1"
        assert root.find(f"{SVG}polyline") is not None and root.find(f"{SVG}circle") is not None

    def test_atomic_gives_slits(self, tmp_path):
        code, _, _ = run(["boundary", "--dist", "kind=atomic points=-1:0.5,1:0.5", "--output-dir", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "slits.csv").read_text() == "x,y_tip\n"
        assert json.loads((tmp_path / "boundary.json").read_text())["walls"] == [-1.0, 1.0]


class TestSimulationCommands:
    def test_rate(self, tmp_path):
        code, _, _ = run(["rate", "--dist", "kind=uniform a=-1 b=1", "--n-paths", "20000", "--seed", "7",
                          "--output-dir", str(tmp_path)])
        assert code == 0
        rep = json.loads((tmp_path / "rate.json").read_text())
        assert rep["formula_rate"] == pytest.approx(math.pi**2 / 8, rel=1e-15)
        # the constructed domain has the smallest rate, so the estimate cannot sit far below it
        assert rep["rate_fit"]["rate"] >= 0.9 * rep["formula_rate"]

    def test_verify(self, tmp_path):
        code, _, _ = run(["verify", "--dist", "kind=atomic points=-1:0.5,1:0.5", "--n-paths", "4000",
                          "--seed", "3", "--output-dir", str(tmp_path)])
        rep = json.loads((tmp_path / "verify.json").read_text())
        assert code == 0 and rep["n_paths"] == 4000 and rep["ks_p_value"] > 0.01
        assert (tmp_path / "survival.csv").exists()

    def test_consistency(self, tmp_path):
        code, _, _ = run(["consistency", "--dist", "kind=arcsine", "--n-paths", "50000", "--output-dir",
                          str(tmp_path)])
        rep = json.loads((tmp_path / "consistency.json").read_text())
        assert code == 0 and rep["mode"] == "consistency" and rep["ks_p_value"] > 0.01

    def test_report_is_byte_identical(self, tmp_path):
        argv = ["report", "--dist", "kind=uniform a=-1 b=1", "--N", "1024", "--n-paths", "2000", "--seed", "5"]
        assert run(argv + ["--output-dir", str(tmp_path / "a")])[0] == 0
        assert run(argv + ["--output-dir", str(tmp_path / "b")])[0] == 0
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
        assert {"map.csv", "boundary.csv", "verify.json", "rate.json", "plot.svg"} <= set(names)
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


class TestErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["build", "--dist", "kind=bogus"],
            ["build", "--dist", "kind=atomic points=0:1"],
            ["build"],
            ["frobnicate", "--dist", "kind=arcsine"],
            ["build", "--dist", "kind=arcsine", "--N", "8", "--M", "16"],
            ["verify", "--dist", "kind=arcsine", "--dt-max", "0.01"],
            ["build", "--dist", "kind=uniform a=0 b=2"],
        ],
    )
    def test_validation_status(self, tmp_path, argv):
        code, _, err = run(argv + ["--output-dir", str(tmp_path)] if argv[0] != "frobnicate" else argv)
        assert code == 2 and err.startswith("error:")

    def test_point_mass_message(self, tmp_path):
        code, _, err = run(["build", "--dist", "kind=point loc=0", "--output-dir", str(tmp_path)])
        assert code == 2 and "degenerate" in err

    def test_center_flag(self, tmp_path):
        code, _, _ = run(["build", "--dist", "kind=uniform a=0 b=2", "--center", "--N", "64",
                          "--output-dir", str(tmp_path)])
        assert code == 0

    def test_numerical_status(self, tmp_path, monkeypatch):
        def boom(*args):
            raise NumericalError("did not converge")

        monkeypatch.setitem(cli._HANDLERS, "build", boom)
        code, _, err = run(["build", "--dist", "kind=arcsine", "--output-dir", str(tmp_path)])
        assert code == 3 and "did not converge" in err


class TestConfig:
    def test_file_and_overrides(self, tmp_path, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# demo\ndist = kind=uniform a=-1 b=1\nN = 64\nn-paths = 0\np = 1, 2, 4\n")
        monkeypatch.chdir(tmp_path)
        assert load_config(cfg) == {"dist": "kind=uniform a=-1 b=1", "N": 64, "n_paths": 0, "p_list": (1.0, 2.0, 4.0)}
        code, _, _ = run(["build", "--config", str(cfg), "--N", "32", "--output-dir", "out"])
        assert code == 0
        _, rows = read_csv(tmp_path / "out" / "map.csv")
        assert rows.shape[0] == 32

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CSKOR_OUTPUT_DIR", str(tmp_path / "env"))
        assert run(["build", "--dist", "kind=arcsine", "--N", "16"])[0] == 0
        assert (tmp_path / "env" / "map.csv").exists()

    @pytest.mark.parametrize("text", ["N\n", "bogus = 1\n", "N = many\n"])
    def test_malformed(self, tmp_path, text):
        (tmp_path / "bad.cfg").write_text(text)
        with pytest.raises(ValidationError):
            load_config(tmp_path / "bad.cfg")
        code, _, _ = run(["build", "--config", str(tmp_path / "bad.cfg"), "--output-dir", str(tmp_path)])
        assert code == 2

    def test_seed_required_for_paths(self):
        with pytest.raises(ValidationError):
            RunConfig(dist="kind=arcsine", n_paths=10, seed=None).validate()


class TestSvg:
    def test_catenary_well_formed(self, uniform_curve):
        x = np.linspace(-0.95, 0.95, 201)
        svg = render_svg(PlotSpec.from_samples(x, gamma(uniform_curve, x), caption="catenary <test> & more"))
        root = ET.fromstring(svg.encode())
        assert root.find(f"{SVG}polyline").get("id") == "curve"
        assert "href" not in svg

    def test_empty_after_clipping(self):
        with pytest.raises(ValidationError):
            PlotSpec.from_samples([1.0, 2.0], [0.0, 0.0], x_range=(5.0, 6.0))

    def test_parabola_vertex(self, hypsech_curve):
        x = np.linspace(-3, 3, 601)
        spec = PlotSpec.from_samples(x, gamma(hypsech_curve, x))
        width, height, margin = 640, 480, 40
        root = ET.fromstring(render_svg(spec, width, height, margin).encode())
        pts = np.array([[float(v) for v in p.split(",")] for p in root.find(f"{SVG}polyline").get("points").split()])
        px, py = pts[np.argmax(pts[:, 1])]
        (x0, x1), (y0, y1) = spec.x_range, spec.y_range
        vx = x0 + (px - margin) * (x1 - x0) / (width - 2 * margin)
        vy = y0 + (height - margin - py) * (y1 - y0) / (height - 2 * margin)
        res_x = (x1 - x0) / (width - 2 * margin)
        res_y = (y1 - y0) / (height - 2 * margin)
        assert abs(vx) <= max(res_x, x[1] - x[0]) and abs(vy + 0.5) <= res_y

    def test_ranges_must_cover(self):
        spec = PlotSpec(np.array([0.0, 2.0]), np.array([0.0, 1.0]), (0.0, 1.0), (0.0, 1.0))
        with pytest.raises(ValidationError):
            render_svg(spec)
