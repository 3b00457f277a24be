import json
import subprocess
import sys

import numpy as np
import pytest

from tclflex.cli import main
from tclflex.fleet import load_fleet


@pytest.fixture
def fleet_csv(tmp_path):
    path = tmp_path / "fleet.csv"
    assert main(["fleet-gen", "--n", "12", "--epsilon", "0.2", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_fleet_gen(fleet_csv):
    fleet = load_fleet(fleet_csv)
    assert len(fleet) == 12
    assert len({p.r_th for p in fleet}) == 12


def test_fleet_gen_homogeneous(tmp_path):
    path = tmp_path / "h.csv"
    assert main(["fleet-gen", "--n", "3", "--epsilon", "0", "--out", str(path)]) == 0
    assert len(set(load_fleet(path))) == 1


def test_fleet_gen_bad_epsilon(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["fleet-gen", "--epsilon", "1.5", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_characterize_is_deterministic(fleet_csv, tmp_path):
    for d in ("a", "b"):
        assert main(["characterize", "--fleet", str(fleet_csv), "--method", "optimal",
                     "--kind", "sufficient", "--m", "6", "--out", str(tmp_path / d)]) == 0
    ja = (tmp_path / "a" / "optimal_sufficient.json").read_bytes()
    assert ja == (tmp_path / "b" / "optimal_sufficient.json").read_bytes()
    assert json.loads(ja)["kind"] == "sufficient"
    assert (tmp_path / "a" / "optimal_sufficient_homothets.csv").exists()


def test_characterize_jobs_do_not_change_output(fleet_csv, tmp_path):
    for d, jobs in (("a", "1"), ("b", "2")):
        main(["characterize", "--fleet", str(fleet_csv), "--m", "4", "--jobs", jobs, "--out", str(tmp_path / d)])
    assert (tmp_path / "a" / "optimal_sufficient.json").read_bytes() == \
        (tmp_path / "b" / "optimal_sufficient.json").read_bytes()


def test_baseline_necessary_power_columns(fleet_csv, tmp_path):
    from tclflex.battery import derive_fleet
    from tclflex.fleet import default_ambient

    assert main(["characterize", "--fleet", str(fleet_csv), "--method", "baseline", "--kind", "necessary",
                 "--m", "5", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "baseline_necessary.json").read_text())
    devices = derive_fleet(load_fleet(fleet_csv), default_ambient(5))
    np.testing.assert_allclose(doc["d_plus_kw"], np.sum([d.u_plus for d in devices], axis=0))
    np.testing.assert_allclose(doc["d_minus_kw"], np.sum([d.u_minus for d in devices], axis=0))


def test_compare(fleet_csv, tmp_path, capsys):
    main(["characterize", "--fleet", str(fleet_csv), "--m", "4", "--out", str(tmp_path)])
    main(["characterize", "--fleet", str(fleet_csv), "--m", "4", "--method", "baseline", "--out", str(tmp_path)])
    capsys.readouterr()
    a = str(tmp_path / "optimal_sufficient.json")
    b = str(tmp_path / "baseline_sufficient.json")
    assert main(["compare", a, a]) == 0
    assert "= 0.0000 %" in capsys.readouterr().out
    assert main(["compare", a, b, "--out", str(tmp_path / "bands.csv")]) == 0
    rows = (tmp_path / "bands.csv").read_text().splitlines()
    assert len(rows) == 5


def test_compare_doubled(tmp_path, capsys):
    doc = {"a": 0.8, "delta_hours": 1.0, "x0_kwh": 0.0, "d_minus_kw": [1, 1], "d_plus_kw": [1, 1],
           "e_minus_kwh": [1, 1], "e_plus_kwh": [1, 1]}
    (tmp_path / "one.json").write_text(json.dumps(doc))
    doc.update({k: [2, 2] for k in ("d_minus_kw", "d_plus_kw", "e_minus_kwh", "e_plus_kwh")})
    (tmp_path / "two.json").write_text(json.dumps(doc))
    assert main(["compare", str(tmp_path / "two.json"), str(tmp_path / "one.json")]) == 0
    assert "= 100.0000 %" in capsys.readouterr().out


def test_track_and_signal(fleet_csv, tmp_path, capsys):
    main(["characterize", "--fleet", str(fleet_csv), "--out", str(tmp_path)])
    sig = tmp_path / "sig.csv"
    assert main(["signal-gen", "--duration", "600", "--seed", "1", "--out", str(sig)]) == 0
    assert main(["track", "--fleet", str(fleet_csv), "--battery", str(tmp_path / "optimal_sufficient.json"),
                 "--signal", str(sig), "--temps", "--out", str(tmp_path / "tr")]) == 0
    out = capsys.readouterr().out
    assert "comfort violations:   0" in out
    lines = (tmp_path / "tr" / "tracking.csv").read_text().splitlines()
    assert lines[0] == "t_seconds,r_kw,u_agg_kw,x_kwh,violations_cum"
    assert len(lines) == 151


def test_track_zero_signal(fleet_csv, tmp_path):
    main(["characterize", "--fleet", str(fleet_csv), "--out", str(tmp_path)])
    sig = tmp_path / "zero.csv"
    sig.write_text("t_seconds,r_kw\n" + "".join(f"{4 * k},0\n" for k in range(50)))
    assert main(["track", "--fleet", str(fleet_csv), "--battery", str(tmp_path / "optimal_sufficient.json"),
                 "--signal", str(sig), "--out", str(tmp_path)]) == 0
    u = np.loadtxt(tmp_path / "tracking.csv", delimiter=",", skiprows=1)[:, 2]
    assert np.all(np.abs(u) <= 5.6 * np.sqrt(12))


def test_verify(capsys):
    assert main(["verify", "--n", "3", "--m", "2"]) == 0
    assert "sandwich: PASS" in capsys.readouterr().out
    assert main(["verify", "--n", "2", "--m", "2", "--epsilon", "0"]) == 0
    out = capsys.readouterr().out
    gap = float(out.split("between batteries:")[1].split()[0])
    assert gap < 1e-8


def test_verify_dimension_guard(capsys):
    assert main(["verify", "--m", "4"]) == 2
    assert "oracle limited to m <= 3" in capsys.readouterr().err


def test_missing_file_is_io_error(tmp_path, capsys):
    assert main(["characterize", "--fleet", str(tmp_path / "nope.csv")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("r_th,c_th\n1,2\n")
    assert main(["characterize", "--fleet", str(bad)]) == 1


def test_infeasible_fleet_is_numeric_error(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("r_th,c_th,theta_r,delta,eta,theta_0,p_m\n2,2,40,0.25,2.5,40,5.6\n")
    assert main(["characterize", "--fleet", str(path)]) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tclflex", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "characterize" in out.stdout
