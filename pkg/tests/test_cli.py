import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest
import yaml
from PIL import Image

from assayvision.cli import STAGE_FILES, main
from assayvision.config import Config, ConfigError, config_from_dict, config_to_dict, dump_config, load_config
from assayvision.imagecore import save_image
from assayvision.report import load_schema
from assayvision.synthgen import default_spec, render_scene


@pytest.fixture
def pair_dir(tmp_path):
    assert main(["gen", "--preset", "default", "--out", str(tmp_path / "pair")]) == 0
    return tmp_path / "pair"


def test_gen_writes_three_files(pair_dir):
    assert sorted(p.name for p in pair_dir.iterdir()) == ["base.png", "exposed.png", "gt.json"]
    gt = json.loads((pair_dir / "gt.json").read_text())
    assert len(gt["discs"]) == 4
    assert gt["discs"][0]["delta"] == {"blue": -30.0, "green": -40.0, "red": -5.0}


def test_gen_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["gen", "--preset", "default", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    for f in ("base.png", "exposed.png", "gt.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_gen_from_spec_file(tmp_path):
    spec = default_spec(noise_sigma=1.0).to_dict()
    (tmp_path / "s.yaml").write_text(yaml.safe_dump(spec))
    assert main(["gen", "--spec", str(tmp_path / "s.yaml"), "--out", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("text", ["discs: [{center: [60, 60], radius: 10}, {center: [65, 60], radius: 10}]", "bogus: 1", "{{"])
def test_gen_invalid_spec_exit_4(tmp_path, text):
    (tmp_path / "bad.yaml").write_text(text)
    assert main(["gen", "--spec", str(tmp_path / "bad.yaml"), "--out", str(tmp_path / "o")]) == 4


def test_analyze_valid_pair(pair_dir, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["analyze", str(pair_dir / "base.png"), str(pair_dir / "exposed.png"), "--out", str(out), "--overlay"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, load_schema())
    assert len(report["assays"]) == 4
    assert all(set(a["delta"]) == {"blue", "green", "red"} for a in report["assays"])
    assert report["inputs"]["base"]["path"].endswith("base.png")
    for name in ("channels.png", "overlay_base.png", "overlay_exposed.png"):
        assert (out / name).exists()
    table = capsys.readouterr().out
    assert "-30.00" in table and "-40.00" in table and "-5.00" in table


def test_analyze_csv(pair_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", str(pair_dir / "base.png"), str(pair_dir / "exposed.png"), "--out", str(out), "--format", "csv"]) == 0
    rows = (out / "report.csv").read_text().splitlines()
    assert rows[0] == "assay,channel,base,exposed,delta"
    assert len(rows) == 1 + 4 * 3
    assert rows[1] == "1,blue,40.0,10.0,-30.0"
    assert (out / "report.json").exists()


def test_analyze_same_file_zero_deltas(pair_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", str(pair_dir / "base.png"), str(pair_dir / "base.png"), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert all(v == 0.0 for a in report["assays"] for v in a["delta"].values())


def test_analyze_missing_disc_exit_2(pair_dir, tmp_path, capsys):
    spec = default_spec()
    three = render_scene(default_spec(discs=spec.discs[:3]), "exposed")
    save_image(three, tmp_path / "three.png")
    rc = main(["analyze", str(pair_dir / "base.png"), str(tmp_path / "three.png"), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "exposed" in err and "found 3" in err


def test_analyze_io_errors_exit_3(pair_dir, tmp_path):
    assert main(["analyze", str(tmp_path / "missing.png"), str(pair_dir / "base.png"), "--out", str(tmp_path)]) == 3
    Image.fromarray(np.zeros((4, 4), np.uint16)).save(tmp_path / "deep.png")
    assert main(["analyze", str(tmp_path / "deep.png"), str(pair_dir / "base.png"), "--out", str(tmp_path)]) == 3


def test_analyze_bad_config_exit_4(pair_dir, tmp_path):
    (tmp_path / "c.yaml").write_text("blob: {sigma1: 4.0}\n")
    args = ["analyze", str(pair_dir / "base.png"), str(pair_dir / "exposed.png"), "--out", str(tmp_path / "o")]
    assert main(args + ["--config", str(tmp_path / "c.yaml")]) == 4
    (tmp_path / "c.yaml").write_text("blob: {unknown: 1}\n")
    assert main(args + ["--config", str(tmp_path / "c.yaml")]) == 4
    assert main(args + ["--kernel-size", "4"]) == 4


def test_usage_error_is_not_confused_with_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == 4


def test_analyze_reports_identical_bytes(pair_dir, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["analyze", str(pair_dir / "base.png"), str(pair_dir / "exposed.png"), "--out", str(out), "--overlay", "--format", "csv"]) == 0
        outs.append(out)
    for f in ("report.json", "report.csv", "channels.png", "overlay_base.png", "overlay_exposed.png"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_config_env_fallback_and_precedence(pair_dir, tmp_path, monkeypatch):
    (tmp_path / "env.yaml").write_text("crop_margin: 3\noutput: {format: csv}\n")
    monkeypatch.setenv("ASSAYVISION_CONFIG", str(tmp_path / "env.yaml"))
    out = tmp_path / "o1"
    assert main(["analyze", str(pair_dir / "base.png"), str(pair_dir / "exposed.png"), "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["params"]["crop_margin"] == 3
    assert (out / "report.csv").exists()

    (tmp_path / "explicit.yaml").write_text("crop_margin: 5\n")
    out = tmp_path / "o2"
    args = ["analyze", str(pair_dir / "base.png"), str(pair_dir / "exposed.png"), "--out", str(out)]
    assert main(args + ["--config", str(tmp_path / "explicit.yaml")]) == 0
    assert json.loads((out / "report.json").read_text())["params"]["crop_margin"] == 5
    assert main(args + ["--config", str(tmp_path / "explicit.yaml"), "--margin", "7"]) == 0
    assert json.loads((out / "report.json").read_text())["params"]["crop_margin"] == 7


def test_detect_table(pair_dir, capsys):
    assert main(["detect", str(pair_dir / "base.png")]) == 0
    out = capsys.readouterr().out
    rows = [line for line in out.splitlines()[2:] if line.strip()]
    assert len(rows) == 4


def test_detect_black_image(tmp_path, capsys):
    save_image(np.zeros((50, 50, 3), np.uint8), tmp_path / "black.png")
    assert main(["detect", str(tmp_path / "black.png")]) == 0
    assert capsys.readouterr().out.startswith("0 region(s)")


def test_detect_dump_stages(pair_dir, tmp_path):
    out = tmp_path / "stages"
    assert main(["detect", str(pair_dir / "base.png"), "--dump-stages", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == sorted(STAGE_FILES)


def test_detect_missing_file_exit_3(tmp_path):
    assert main(["detect", str(tmp_path / "nothing.png")]) == 3


def test_config_defaults_and_round_trip(tmp_path):
    cfg = load_config(None)
    assert cfg == Config()
    text = dump_config(cfg)
    (tmp_path / "c.yaml").write_text(text)
    assert load_config(tmp_path / "c.yaml") == cfg
    custom = config_from_dict({"segmentation": {"kernel_size": 3}, "blob": {"t_blob": 80}, "output": {"overlay": True}})
    assert config_from_dict(config_to_dict(custom)) == custom


@pytest.mark.parametrize(
    "data", [{"colour": 1}, {"segmentation": {"lower": [0, 0, 0]}}, {"output": {"format": "xml"}}, {"blob": {"sigma1": "a"}}, {"crop_margin": -1}]
)
def test_config_rejects(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "assayvision", "gen", "--out", str(tmp_path / "g")], capture_output=True)
    assert proc.returncode == 0
    assert (tmp_path / "g" / "gt.json").exists()


def test_sweep_writes_table_and_figure(tmp_path, capsys):
    out = tmp_path / "sw"
    assert main(["sweep", "--radius", "5", "10", "--blur", "2", "--seeds", "3", "--out", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0].split(",")[:3] == ["radius", "blur_sigma", "noise_sigma"]
    small, large = (float(r.split(",")[5]) for r in rows[1:])
    assert small > large
    assert (out / "sweep.png").stat().st_size > 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_sweep_rejects_zero_seeds(tmp_path):
    assert main(["sweep", "--seeds", "0", "--out", str(tmp_path)]) == 4
