import json
import subprocess
import sys

import numpy as np
import pytest

from polsar_regions import io
from polsar_regions.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from polsar_regions.distances import ALL_KINDS


@pytest.fixture(scope="module")
def default_scene(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--preset", "paper", "--seed", "42", "--out", str(out)]) == EXIT_OK
    return out


def test_simulate_default_preset(default_scene):
    raster, header = io.read_covariance_raster(default_scene / "raster.cov")
    assert raster.shape == (450, 450, 3, 3) and header["looks"] == 4
    truth, th = io.read_labels(default_scene / "truth.labels")
    assert truth.shape == (450, 450) and len(th["classes"]) == 9
    protos = io.read_prototypes(default_scene / "prototypes.json")
    assert len(protos) == 9 and {e.wishart.sample_size for e in protos} == {900}
    assert header["provenance"]["seed"] == 42 and header["provenance"]["tool"] == "polsar-regions"


def test_simulate_tiny_layout_and_determinism(tmp_path):
    args = ["simulate", "--layout", "River", "--tile", "2", "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    raster, _ = io.read_covariance_raster(tmp_path / "a" / "raster.cov")
    assert raster.shape == (2, 2, 3, 3)
    for name in ("raster.cov", "truth.labels", "prototypes.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_classify_and_assess_perfect_run(default_scene, tmp_path, capsys):
    out = tmp_path / "cls"
    rc = main(["classify", "--raster", str(default_scene / "raster.cov"),
               "--prototypes", str(default_scene / "prototypes.json"),
               "--stat", "bhattacharyya", "--grid", "15", "--out", str(out)])
    assert rc == EXIT_OK
    table = io.read_assignments(out / "assignments_bhattacharyya.csv")
    assert len(table["segment_id"]) == 900
    capsys.readouterr()
    rc = main(["assess", "--assignments", str(out / "assignments_bhattacharyya.csv"),
               "--segments", str(out / "segments.labels"), "--truth", str(default_scene / "truth.labels"),
               "--report", str(tmp_path / "rep.json")])
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "overall accuracy  1.000000" in text and "kappa             1.000000" in text
    report = json.loads((tmp_path / "rep.json").read_text())
    assert report["overall_accuracy"] == 1.0 and report["kappa"] == 1.0
    img = io.read_pnm(out / "classes_bhattacharyya.ppm")
    assert img.shape == (450, 450, 3)
    gray = io.read_pnm(out / "pvalues_bhattacharyya.pgm")
    assert set(np.unique(gray)) <= {0, 255}


def test_classify_all_fused_is_reproducible(tmp_path):
    sim = tmp_path / "sim"
    assert main(["simulate", "--tile", "20", "--seed", "3", "--out", str(sim),
                 "--prototype-pixels", "400"]) == EXIT_OK
    args = ["classify", "--raster", str(sim / "raster.cov"), "--prototypes", str(sim / "prototypes.json"),
            "--stat", "all", "--grid", "5", "--fuse", "--fuzzy-threshold", "0.05", "--figures"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    for kind in ALL_KINDS:
        assert f"classes_{kind.value}.ppm" in names
        assert f"classes_{kind.value}.png" in names
        assert f"fuzzy_{kind.value}.csv" in names
    assert "classes_fused.ppm" in names and "assignments_fused.csv" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_classify_renyi_with_segment_file(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--tile", "10", "--seed", "1", "--out", str(sim), "--prototype-pixels", "300"])
    seg = np.arange(30 * 30, dtype=np.int32).reshape(30, 30) // 450  # two halves
    io.write_labels(tmp_path / "seg.labels", seg)
    rc = main(["classify", "--raster", str(sim / "raster.cov"), "--prototypes", str(sim / "prototypes.json"),
               "--stat", "renyi", "--beta", "0.9", "--segments", str(tmp_path / "seg.labels"),
               "--out", str(tmp_path / "o")])
    assert rc == EXIT_OK
    assert len(io.read_assignments(tmp_path / "o" / "assignments_renyi.csv")["class"]) == 2


def test_assess_compare(tmp_path, capsys):
    for name, k, v in (("a", 0.8346, 1.253e-5), ("b", 0.6544, 2.081e-5)):
        (tmp_path / f"{name}.json").write_text(json.dumps(
            {"overall_accuracy": 0.9, "kappa": k, "kappa_variance": v}))
    assert main(["assess", "--compare", str(tmp_path / "a.json"), str(tmp_path / "b.json")]) == EXIT_OK
    assert "z = 31.2" in capsys.readouterr().out


def test_presets_command(tmp_path):
    assert main(["presets", "--out", str(tmp_path / "p.json")]) == EXIT_OK
    assert io.read_prototypes(tmp_path / "p.json").names[0] == "River"


def test_exit_codes(tmp_path, capsys):
    assert main(["simulate", "--layout", "Wheat", "--out", str(tmp_path)]) == EXIT_INVALID
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--raster", "x", "--prototypes", "y", "--grid", "2", "--beta", "1.5"])
    assert exc.value.code == EXIT_INVALID
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--seed", "-1"])
    assert exc.value.code == EXIT_INVALID
    assert main(["classify", "--raster", str(tmp_path / "none.cov"), "--prototypes", "p",
                 "--grid", "2", "--out", str(tmp_path)]) == EXIT_RUNTIME
    (tmp_path / "bad.cov").write_bytes(b"not a header\n")
    assert main(["classify", "--raster", str(tmp_path / "bad.cov"), "--prototypes", "p",
                 "--grid", "2", "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["assess", "--assignments", "a.csv"]) == EXIT_INVALID
    capsys.readouterr()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "polsar_regions", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("polsar-regions")


def test_reproduce_small(tmp_path):
    rc = main(["reproduce", "--seeds", "1", "--tiles", "30", "--stat", "kl", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert json.loads(rows[0][1:])["command"] == "reproduce"
    assert rows[1].startswith("kind,tile") and rows[2].startswith("kl,30")
    assert (tmp_path / "non_rejection.png").read_bytes()[:4] == b"\x89PNG"
    assert (tmp_path / "classes_kl_30x30.png").exists()
