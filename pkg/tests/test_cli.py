import json
import subprocess
import sys

import numpy as np
import pytest

from monopush import box_calculus as bc
from monopush import monomial_core as mc
from monopush.cli import GridSpec, UsageError, main
from monopush.exponents import ExponentData


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def hat_atoms(tmp_path):
    e = ExponentData((1.0,), (0.0,))
    atoms = bc.approximate_by_boxes(lambda x: max(0.0, 1.0 - abs(x[0])), 32, e)
    path = tmp_path / "hat.jsonl"
    path.write_text(bc.dump_atoms(atoms))
    return path


@pytest.fixture
def mixed_atoms(tmp_path):
    path = tmp_path / "mixed.jsonl"
    path.write_text(
        '{"coeff": 1, "box": [[0, 1], [0, 1]], "A": [1, 1], "B": [0, 0]}\n'
        '{"coeff": 1, "box": [[0, 1], [0, 1]], "A": [1, 2], "B": [0, 0]}\n'
    )
    return path


@pytest.fixture
def corrupted_profile(tmp_path):
    # exact density of A=(2,2), B=(2,2) scaled by 1.3 on a fine grid
    e = ExponentData((2.0, 2.0), (2.0, 2.0))
    grid = np.linspace(0.0, 0.99, 100)
    vals, paths = mc.density_unit_interval_with_path(e, grid)
    path = tmp_path / "corrupted.csv"
    path.write_text(bc.DensityProfile(grid, 1.3 * vals, list(paths)).to_csv())
    return path


def test_grid_spec():
    assert np.allclose(GridSpec.parse("0:1:5").points(), [0, 0.25, 0.5, 0.75, 1])
    assert np.allclose(GridSpec.parse("0.01:1:3:log").points(), [0.01, 0.1, 1])
    for bad in ("0:1", "1:0:3", "0:1:3:lin", "0:1:x", "0:1:4:log"):
        with pytest.raises(UsageError):
            GridSpec.parse(bad)


def test_classify_examples(capsys):
    code, out, _ = run(["classify", "--A", "2,4", "--B", "3,5"], capsys)
    rec = json.loads(out)
    assert code == 0 and (rec["frs_case"], rec["parity"], rec["limit_at_zero"]) == ("Case1", "AllEven", 0.0)
    code, out, _ = run(["classify", "--A", "1,2", "--B", "0,3"], capsys)
    rec = json.loads(out)
    assert code == 0 and (rec["frs_case"], rec["parity"]) == ("Case2", "SomeOdd")
    assert rec["limit_at_zero"] == 0.5
    code, out, _ = run(["classify", "--A", "1,1", "--B", "0,0"], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["limit_at_zero"] == "inf" and "warning" in rec
    code, _, err = run(["classify", "--A", "0,0", "--B", "1,1"], capsys)
    assert code == 2 and "not all a_i equal to zero" in err


def test_classify_rejects_reals(capsys):
    code, _, err = run(["classify", "--A", "1.5", "--B", "0"], capsys)
    assert code == 2 and "integer" in err


def test_density_examples(capsys):
    code, out, _ = run(["density", "--A", "1,1", "--B", "0,1", "--grid", "0:0.9:10"], capsys)
    prof = bc.DensityProfile.from_csv(out)
    assert code == 0 and np.allclose(prof.values, 1 - prof.grid, rtol=1e-13)
    code, out, _ = run(["density", "--A", "1", "--B", "0", "--q", "0.5"], capsys)
    assert out.splitlines()[1] == "0.5,1.0,partial-fraction"
    code, out, _ = run(["density", "--A", "1,1", "--B", "0,0", "--q", "0"], capsys)
    assert out.splitlines()[1].split(",")[:2] == ["0.0", "inf"]


def test_density_signed_and_json(capsys):
    code, out, _ = run(["density", "--A", "2", "--B", "4", "--grid=-0.5:0.25:4", "--signed", "--format", "json"], capsys)
    rows = json.loads(out)
    assert code == 0 and rows[0]["density"] == 0.0 and rows[-1]["density"] == pytest.approx(0.125)


@pytest.mark.parametrize(
    "argv",
    [
        ["density", "--A", "1", "--B", "0", "--q", "1.0"],
        ["density", "--A", "1", "--B", "0", "--q", "-0.1"],
        ["density", "--A", "1", "--B", "0", "--q", "1.0", "--signed"],
        ["density", "--A", "1", "--B", "0"],
        ["density", "--A", "1", "--q", "0.2"],
        ["density", "--A", "1", "--B", "0", "--q", "0.2", "--grid", "0:1:3"],
        ["volume", "--A", "1", "--B", "0", "--q", "0"],
        ["compare", "--A", "1", "--B", "0", "--samples", "10"],
        ["compare", "--A", "1", "--B", "0", "--samples", "100", "--seed", "1", "--bins", "10"],
        ["compare", "--A", "1,1,1,1", "--B", "0,0,0,0", "--mode", "quadrature"],
        ["density", "--A", "1", "--B", "0", "--q", "0.2", "--plot"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and "error" in err


def test_volume(capsys):
    code, out, _ = run(["volume", "--A", "1", "--B", "0", "--q", "0.25"], capsys)
    assert code == 0 and out.splitlines() == ["q,volume,path", "0.25,0.75,partial-fraction"]


def test_compare_passes(capsys):
    code, out, _ = run(["compare", "--A", "1", "--B", "0", "--samples", "10000", "--seed", "7", "--bins", "16"], capsys)
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(["compare", "--A", "2,2", "--B", "2,2", "--samples", "1000000", "--seed", "42", "--bins", "64"], capsys)
    assert code == 0 and json.loads(out)["pass_fraction"] >= 0.95


def test_compare_quadrature_mode(capsys):
    code, out, _ = run(["compare", "--A", "2,1", "--B", "3,0", "--mode", "quadrature", "--grid", "0.1:0.9:5"], capsys)
    assert code == 0 and json.loads(out)["passed"]


def test_compare_corrupted_profile_fails(corrupted_profile, capsys):
    argv = ["compare", "--A", "2,2", "--B", "2,2", "--samples", "1000000", "--seed", "42", "--bins", "64",
            "--profile", str(corrupted_profile)]
    code, out, _ = run(argv, capsys)
    rec = json.loads(out)
    assert code == 1 and not rec["passed"] and rec["max_abs_z"] > 5


def test_assemble_matches_density(tmp_path, capsys):
    atoms = tmp_path / "unit.jsonl"
    atoms.write_text('{"coeff": 1, "box": [[0, 1], [0, 1]], "A": [1, 2], "B": [0, 3]}\n')
    _, direct, _ = run(["density", "--A", "1,2", "--B", "0,3", "--grid", "0.1:0.9:9"], capsys)
    _, assembled, _ = run(["assemble", "--atoms", str(atoms), "--grid", "0.1:0.9:9"], capsys)
    assert direct == assembled


def test_assemble_hat_profile(hat_atoms, tmp_path, capsys):
    out = tmp_path / "hat.csv"
    code, _, _ = run(["assemble", "--atoms", str(hat_atoms), "--grid=-0.9:0.9:19", "--out", str(out), "--plot"], capsys)
    prof = bc.DensityProfile.from_csv(out.read_text())
    assert code == 0 and np.max(np.abs(prof.values - (1 - np.abs(prof.grid)))) < 0.02
    script = out.with_suffix(".plot.py")
    assert script.exists() and str(out) in script.read_text()
    compile(script.read_text(), str(script), "exec")


def test_assemble_rejects_mixed_A(mixed_atoms, capsys):
    code, _, err = run(["assemble", "--atoms", str(mixed_atoms), "--q", "0.5"], capsys)
    assert code == 2 and "share" in err


def test_assemble_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"coeff": 1, "box": [[0, 1]], "A": [1], "B": [0]}\n{"coeff": 1, "box": [[0, 1]], "B": [0]}\n')
    code, _, err = run(["assemble", "--atoms", str(bad), "--q", "0.5"], capsys)
    assert code == 2 and f"{bad}:2" in err and "'A'" in err
    code, _, err = run(["assemble", "--atoms", str(tmp_path / "missing.jsonl"), "--q", "0.5"], capsys)
    assert code == 2


def test_round_trip_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["density", "--A", "3,1,2", "--B", "1,0,4", "--grid", "0:0.99:57"]
    run(argv + ["--out", str(a)], capsys)
    run(argv + ["--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()
    prof = bc.DensityProfile.from_csv(a.read_text())
    e = ExponentData((3.0, 1.0, 2.0), (1.0, 0.0, 4.0))
    values, _ = mc.density_unit_interval_with_path(e, prof.grid)
    assert np.array_equal(prof.grid, np.linspace(0, 0.99, 57)) and np.array_equal(prof.values, values)

    c, d = tmp_path / "c.json", tmp_path / "d.json"
    argv = ["compare", "--A", "1,2", "--B", "0,3", "--samples", "200000", "--seed", "5", "--bins", "20"]
    run(argv + ["--out", str(c)], capsys)
    run(argv + ["--out", str(d), "--workers", "3"], capsys)
    assert c.read_bytes() == d.read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "monopush", "classify", "--A", "1", "--B", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["frs_case"] == "Case2"
