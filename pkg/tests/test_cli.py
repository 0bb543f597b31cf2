import csv
import json

import numpy as np
import pytest

from nlospos.cli import main
from nlospos.pathio import import_paths
from nlospos.scenarios import UE_POSITION, street_scene
from nlospos.scene import scene_to_dict


def _report(text):
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["key", "value"]
    return dict(rows[1:])


def test_simulate_then_estimate(tmp_path, capsys):
    assert main(["simulate", "--scene", "builtin:street", "--out", str(tmp_path)]) == 0
    paths, bounces = import_paths(tmp_path / "paths.csv")
    assert len(paths) == 6 and bounces == [1, 1, 1, 2, 2, 3]
    capsys.readouterr()

    code = main(["estimate", "--paths", str(tmp_path / "paths.csv"), "--scene", "builtin:street",
                 "--out", str(tmp_path)])
    assert code == 0
    report = _report(capsys.readouterr().out)
    pos = np.array([float(report[k]) for k in ("x_m", "y_m", "z_m")])
    assert np.linalg.norm(pos - UE_POSITION) < 1e-6
    assert float(report["clock_bias_ns"]) == pytest.approx(330.0, abs=1e-4)
    assert report["paths_used"] == "3"
    assert report["used_bounce_counts"] == "1 1 1"
    assert _report((tmp_path / "estimate.csv").read_text()) == report


def test_calibrate_then_estimate(tmp_path, capsys):
    args = ["--scene", "builtin:street", "--sigma-angle", "0.01", "--sigma-range", "0.1", "--seed", "5",
            "--out", str(tmp_path)]
    assert main(["simulate", *args]) == 0
    assert main(["calibrate", *args, "--trials", "50"]) == 0
    cfg = json.loads((tmp_path / "detector.json").read_text())
    assert set(cfg) == {"baseline_mean", "baseline_sigma", "threshold", "min_post_samples"}
    capsys.readouterr()
    assert main(["estimate", "--paths", str(tmp_path / "paths.csv"), "--tx", "621,447,30",
                 "--detector", str(tmp_path / "detector.json")]) == 0
    report = _report(capsys.readouterr().out)
    assert float(report["threshold"]) == cfg["threshold"]


def test_montecarlo_outputs(tmp_path):
    out = tmp_path / "mc"
    code = main(["montecarlo", "--scene", "builtin:street", "--sigma-angle", "0.01,0.05",
                 "--sigma-range", "0.1,1", "--trials", "5", "--calibration-trials", "10",
                 "--seed", "7", "--detail", "--out", str(out)])
    assert code == 0
    metrics = list(csv.DictReader(open(out / "metrics.csv")))
    assert len(metrics) == 2 * 2 * 3
    assert {m["method"] for m in metrics} == {"proposed", "all-paths", "single-bounce-oracle"}
    details = (out / "trials.csv").read_text().splitlines()
    assert len(details) == 1 + 12 * 5


def test_scene_file(tmp_path):
    f = tmp_path / "scene.json"
    f.write_text(json.dumps(scene_to_dict(street_scene())))
    assert main(["simulate", "--scene", str(f), "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["estimate"],
        ["montecarlo", "--scene", "builtin:street", "--sigma-angle", "a,b"],
        ["estimate", "--paths", "x.csv", "--tx", "1,2"],
        ["montecarlo", "--scene", "builtin:street", "--ordering", "random"],
    ],
)
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


def test_data_errors_exit_2(tmp_path, capsys):
    assert main(["estimate", "--paths", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("gain,aod_az_rad,aod_el_rad,aoa_az_rad,aoa_el_rad,toa_s\n1,0,0,0,0,oops\n")
    assert main(["estimate", "--paths", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    bad.write_text("gain,aod_az_rad,aod_el_rad,aoa_az_rad,aoa_el_rad,toa_s\n1,0,0,0,0,1e-6\n")
    assert main(["estimate", "--paths", str(bad)]) == 2
    assert main(["simulate", "--scene", "builtin:none"]) == 2
    (tmp_path / "det.json").write_text('{"threshold": -1}')
    assert main(["montecarlo", "--scene", "builtin:street", "--detector", str(tmp_path / "det.json")]) == 2


def test_numerical_error_exit_3(tmp_path, monkeypatch, capsys):
    from nlospos import cli
    from nlospos.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("singular")

    monkeypatch.setattr(cli, "run", boom)
    main(["simulate", "--scene", "builtin:street", "--out", str(tmp_path)])
    assert main(["estimate", "--paths", str(tmp_path / "paths.csv")]) == 3
    assert "singular" in capsys.readouterr().err
