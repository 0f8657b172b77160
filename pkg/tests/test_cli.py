import csv
import json

import pytest
import yaml

from fermigibbs.cli import main


def _write(path, data):
    path.write_text(json.dumps(data) if path.suffix == ".json" else yaml.safe_dump(data))
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_negative_beta_names_field(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", {"beta": -1})
    assert main(["gap", "--config", cfg, "--out", str(tmp_path / "o")]) != 0
    assert "beta" in capsys.readouterr().err


def test_syntax_error_reports_location(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "beta": ,\n}')
    assert main(["gap", "--config", str(p)]) == 2
    assert f"{p}:2:" in capsys.readouterr().err


def test_unknown_field_rejected(tmp_path, capsys):
    cfg = _write(tmp_path / "c.yaml", {"temperature": 1})
    assert main(["gap", "--config", cfg]) == 2
    assert "temperature" in capsys.readouterr().err


def test_capacity_error(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", {"model": {"kind": "chain", "sites": 8}})
    assert main(["build", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "maximum" in capsys.readouterr().err
    assert main(["build", "--config", cfg, "--max-modes", "4"]) == 2


def test_build_writes_spectra_and_report(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path / "c.yaml", {"model": {"kind": "hubbard", "dims": [1], "U": 0.2}, "beta": 0.5})
    assert main(["build", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "report.yaml").exists()
    rows = _rows(out / "spectra.csv")
    assert {r["operator"] for r in rows} == {"L_dagger", "parent"}
    report = yaml.safe_load((out / "report.yaml").read_text())
    assert report["passed"] and len(report["provenance"]["config_hash"]) == 64


def test_reports_are_byte_identical(tmp_path):
    cfg = _write(tmp_path / "c.json", {"model": {"kind": "chain", "sites": 2, "U": 0.1}, "seed": 7})
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["mix", "--config", cfg, "--out", str(out)]) == 0
        texts.append(((out / "report.json").read_bytes(), (out / "decay.csv").read_bytes()))
    assert texts[0] == texts[1]


def test_config_hash_tracks_content(tmp_path):
    hashes = []
    for beta in (1.0, 2.0):
        out = tmp_path / str(beta)
        cfg = _write(tmp_path / f"c{beta}.json", {"beta": beta})
        main(["gap", "--config", cfg, "--out", str(out)])
        hashes.append(json.loads((out / "report.json").read_text())["provenance"]["config_hash"])
    assert hashes[0] != hashes[1]


def test_single_point_sweep(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path / "c.json", {"model": {"kind": "hubbard", "dims": [1]}, "U_grid": [0.1]})
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert len(_rows(out / "sweep.csv")) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["result"]["fit"] is None and report["result"]["points"] == 1


def test_sweep_needs_lattice_family(tmp_path):
    cfg = _write(tmp_path / "c.json", {"model": {"kind": "single_mode"}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_method_both_adds_agreement_check(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path / "c.json", {"model": {"kind": "hubbard", "dims": [2], "U": 0.5, "mu": 0.3}})
    assert main(["gap", "--config", cfg, "--out", str(out), "--method", "both"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["method_agreement"]["passed"]


@pytest.mark.parametrize("sub", ["correlations", "kernels"])
def test_other_subcommands(tmp_path, sub):
    out = tmp_path / "o"
    cfg = _write(tmp_path / "c.json", {"model": {"kind": "chain", "sites": 3, "U": 0.1}})
    assert main([sub, "--config", cfg, "--out", str(out)]) == 0
    assert (out / "report.json").exists()


def test_validate_default_passes(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["validate", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.count("[PASS]") == 13
    assert (out / "sweep.csv").exists() and (out / "decay.csv").exists()
