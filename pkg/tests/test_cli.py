import argparse
from pathlib import Path

import pytest

from src.cli.commands import load_mask, main, parse_depths, parse_region, parse_size
from src.evaluation.metrics import IDENTICAL
from src.utils.file_utils import load_json, load_pfm, load_png, save_json, sidecar_path

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


def test_argument_parsers():
    assert parse_size("128x156") == (128, 156)
    assert parse_depths("30,5") == [30.0, 5.0]
    assert parse_region("0:10,5:20") == (slice(0, 10), slice(5, 20))
    with pytest.raises(argparse.ArgumentTypeError):
        parse_size("128")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_size("1x8")


def test_end_to_end_commands(tmp_path, capsys):
    mask = str(tmp_path / "mask.pfm")
    assert main(["mask", "gen", "--kind", "star", "--sections", "20", "--size", "48x64", "--out", mask]) == 0
    assert load_json(sidecar_path(mask))["tool"] == "radialens"

    measurement = str(tmp_path / "b.pfm")
    truth = str(tmp_path / "truth.pfm")
    assert main(["capture", "--mask", mask, "--size", "48x64", "--out", measurement, "--truth", truth]) == 0
    assert load_pfm(measurement).shape == (3, 48, 64)

    psf = str(tmp_path / "psf.pfm")
    assert main(["psf", "--mask", mask, "--depth", "30", "--out", psf]) == 0
    assert load_json(sidecar_path(psf))["depth_cm"] == 30.0

    profiles = str(tmp_path / "mtf.csv")
    assert main(["mtf", "--inputs", mask, psf, "--labels", "mask", "psf", "--bins", "8", "--out", profiles]) == 0
    assert Path(profiles).read_text().startswith("freq_over_nyquist,mask,psf")

    recon = str(tmp_path / "recon.png")
    trace = str(tmp_path / "res.csv")
    assert main(["recon", "admm", "--measurement", measurement, "--psf", psf, "--iters", "3",
                 "--out", recon, "--trace", trace]) == 0
    assert (tmp_path / "res_c0.csv").exists()

    report = str(tmp_path / "report.json")
    assert main(["metrics", "--ref", truth, "--test", recon, "--out", report]) == 0
    assert set(load_json(report)) == {"psnr_db", "ssim", "mae"}
    assert "PSNR" in capsys.readouterr().out

    out_dir = tmp_path / "refocus"
    assert main(["refocus", "--measurement", measurement, "--mask", mask, "--depths", "30,5",
                 "--iters", "2", "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "refocus_30cm.png").exists()
    assert (out_dir / "refocus_5cm.png").exists()


def test_mask_optimize_command(tmp_path, capsys):
    params = str(tmp_path / "params.json")
    trace = str(tmp_path / "trace.csv")
    assert main(["mask", "optimize", "--sections", "8", "--size", "32x32", "--epochs", "3",
                 "--out", params, "--trace", trace, "--baselines"]) == 0
    assert load_json(params)["n_sections"] == 8
    out = capsys.readouterr().out
    assert "Mean MTF" in out and "star20" in out

    mask = str(tmp_path / "radial.png")
    assert main(["mask", "gen", "--kind", "radial", "--params", params, "--size", "32x32", "--out", mask]) == 0


def test_experiment_run_prints_tables(tmp_path, capsys):
    assert main(["experiment", "run", str(EXPERIMENTS / "impulse.json"), "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "Experiment: impulse" in out
    psnr_db = load_json(str(tmp_path / "summary.json"))["masks"]["impulse"]["metrics"]["full"]["psnr_db"]
    assert psnr_db == IDENTICAL or psnr_db >= 120.0


def test_mask_png_keeps_transmittance_scale(tmp_path):
    params = tmp_path / "half.json"
    save_json({"n_sections": 4, "raw_values": [0.0, 0.0, 0.0, 0.0]}, str(params))
    mask = str(tmp_path / "half.png")
    assert main(["mask", "gen", "--kind", "radial", "--params", str(params), "--size", "32x32",
                 "--out", mask]) == 0
    assert load_png(mask).max() == pytest.approx(128 / 255)
    assert load_json(sidecar_path(mask))["normalization"] == 1.0
    assert load_mask(mask).grid.max() == pytest.approx(0.5, abs=1 / 255)


def test_reruns_write_identical_bytes(tmp_path):
    params = str(tmp_path / "params.json")
    trace = str(tmp_path / "trace.csv")
    mask = str(tmp_path / "mask.pfm")
    psf = str(tmp_path / "psf.pfm")
    profiles = str(tmp_path / "mtf.csv")
    measurement = str(tmp_path / "b.pfm")
    recon = str(tmp_path / "recon.pfm")
    residuals = str(tmp_path / "res.csv")
    report = str(tmp_path / "report.json")
    commands = [
        ["mask", "optimize", "--sections", "8", "--size", "32x32", "--epochs", "5", "--seed", "3",
         "--out", params, "--trace", trace],
        ["mask", "gen", "--kind", "radial", "--params", params, "--size", "32x40", "--out", mask],
        ["psf", "--mask", mask, "--depth", "30", "--out", psf],
        ["mtf", "--inputs", mask, psf, "--bins", "8", "--out", profiles],
        ["capture", "--mask", mask, "--size", "32x40", "--noise-sigma", "0.01", "--seed", "5",
         "--out", measurement],
        ["recon", "admm", "--measurement", measurement, "--psf", psf, "--iters", "3",
         "--out", recon, "--trace", residuals],
        ["refocus", "--measurement", measurement, "--mask", mask, "--depths", "30,5", "--iters", "2",
         "--format", "pfm", "--out-dir", str(tmp_path / "refocus")],
        ["metrics", "--ref", measurement, "--test", recon, "--out", report],
    ]

    def snapshot():
        return {path: path.read_bytes() for path in sorted(tmp_path.rglob("*"))
                if path.suffix in (".pfm", ".csv", ".json")}

    for command in commands:
        assert main(command) == 0, command
    first = snapshot()
    for command in commands:
        assert main(command) == 0, command
    assert snapshot() == first
    assert len(first) >= 15


def test_domain_errors_exit_with_one(tmp_path):
    out = str(tmp_path / "m.pfm")
    assert main(["mask", "gen", "--kind", "radial", "--out", out]) == 1
    assert main(["mask", "gen", "--kind", "star", "--sections", "3", "--out", out]) == 1


def test_usage_errors_exit_with_two():
    with pytest.raises(SystemExit) as excinfo:
        main(["mask", "gen", "--kind", "hexagon", "--out", "x.pfm"])
    assert excinfo.value.code == 2
