import csv

import numpy as np
import pytest

from mps_rescale import fixtures
from mps_rescale.cli import (
    main,
    parse_block,
    parse_cutoffs,
    parse_lag_pair,
    parse_lags,
    UsageError,
)
from mps_rescale.grid import load_field, load_grid, load_samples, save_grid


@pytest.fixture()
def grid_file(tmp_path):
    path = tmp_path / "grid.txt"
    save_grid(fixtures.disk(30, 30, radius=9.0), path)
    return path


# ---------------------------------------------------------------------------
# Value parsers
# ---------------------------------------------------------------------------

def test_parse_lags_forms():
    assert parse_lags("12") == [12]
    assert parse_lags("1:5") == [1, 2, 3, 4, 5]
    assert parse_lags("1:10:3") == [1, 4, 7, 10]
    assert parse_lags("2,7,3") == [2, 7, 3]
    for bad in ("", "5:1", "1:9:0", "a", "1:2:3:4"):
        with pytest.raises(UsageError):
            parse_lags(bad)


def test_parse_lag_pair():
    assert parse_lag_pair("2,3") == (2, 3)
    with pytest.raises(UsageError, match="two lags"):
        parse_lag_pair("1,2,3")


def test_parse_block_forms():
    assert (parse_block("10").bx, parse_block("10").by) == (10, 10)
    assert (parse_block("4x6").bx, parse_block("4x6").by) == (4, 6)
    assert (parse_block("4,6").bx, parse_block("4,6").by) == (4, 6)
    with pytest.raises(UsageError):
        parse_block("4x")


def test_parse_cutoffs_forms():
    assert parse_cutoffs("0:1:0.5") == pytest.approx([0.0, 0.5, 1.0])
    assert parse_cutoffs("0.1,0.9") == [0.1, 0.9]
    assert len(parse_cutoffs("0:1:0.05")) == 21
    with pytest.raises(UsageError):
        parse_cutoffs("1:0:0.1")


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

def test_version_exits_cleanly(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.strip()


def test_missing_command_is_usage_error(capsys):
    assert main([]) == 2


def test_unknown_flag_is_usage_error(grid_file, capsys):
    assert main(["fop", "--in", str(grid_file), "--k", "2", "--lags", "1",
                 "--out", "x", "--frobnicate"]) == 2


def test_missing_input_file_is_runtime_error(tmp_path, capsys):
    code = main(["fop", "--in", str(tmp_path / "nope.txt"), "--k", "2",
                 "--lags", "1", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_category_above_k_is_runtime_error(tmp_path, capsys):
    path = tmp_path / "g3.txt"
    rng = np.random.default_rng(0)
    from mps_rescale.grid import CategoricalGrid, GridGeometry

    save_grid(CategoricalGrid(GridGeometry(5, 5), 3, rng.integers(0, 3, (5, 5))), path)
    assert main(["fop", "--in", str(path), "--k", "2", "--lags", "1",
                 "--out", str(tmp_path / "o")]) == 1


def test_bad_lag_spec_is_usage_error(grid_file, tmp_path, capsys):
    assert main(["fop", "--in", str(grid_file), "--k", "2", "--lags", "9:1",
                 "--out", str(tmp_path / "o")]) == 2
    assert "usage error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def test_fop_writes_both_tables(grid_file, tmp_path):
    out = tmp_path / "disk"
    assert main(["fop", "--in", str(grid_file), "--k", "2",
                 "--lags", "1:3", "--out", str(out)]) == 0
    with open(f"{out}_fop.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 * 16  # three lags, 2^4 codes
    assert {"lag", "pattern_code", "count", "fop"} <= set(rows[0])
    with open(f"{out}_order.csv", newline="") as fh:
        orders = list(csv.DictReader(fh))
    assert len(orders) == 3


def test_extrapolate_writes_prediction(grid_file, tmp_path):
    out = tmp_path / "pred.csv"
    assert main(["extrapolate", "--in", str(grid_file), "--k", "2",
                 "--from-lags", "2,3", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "pattern_code,predicted_log_fop,actual_log_fop,flag"
    assert lines[-1].startswith("#") and "mae=" in lines[-1]


def test_extrapolate_rejects_triple(grid_file, tmp_path):
    assert main(["extrapolate", "--in", str(grid_file), "--k", "2",
                 "--from-lags", "1,2,3", "--out", str(tmp_path / "p.csv")]) == 2


def test_upscale_majority(grid_file, tmp_path):
    out = tmp_path / "maj.txt"
    assert main(["upscale", "--in", str(grid_file), "--k", "2",
                 "--block", "5", "--out", str(out)]) == 0
    coarse = load_grid(out, 2)
    assert (coarse.geometry.nx, coarse.geometry.ny) == (6, 6)


def test_upscale_proportion_with_curve(grid_file, tmp_path):
    out = tmp_path / "prop.txt"
    binary = tmp_path / "bin.txt"
    mixed = tmp_path / "mixed.csv"
    assert main(["upscale", "--in", str(grid_file), "--k", "2",
                 "--block", "5", "--mode", "proportion",
                 "--cutoff", "0.5", "--binary-out", str(binary),
                 "--mixed-out", str(mixed), "--out", str(out)]) == 0
    prop = load_field(out)
    assert prop.values.min() >= 0.0 and prop.values.max() <= 1.0
    thresholded = load_grid(binary, 2)
    assert set(np.unique(thresholded.values)) <= {0, 1}
    text = mixed.read_text()
    assert text.splitlines()[0] == "series,cutoff,mixed_fraction"
    assert "\nmean," in text


def test_binary_out_requires_cutoff(grid_file, tmp_path):
    assert main(["upscale", "--in", str(grid_file), "--k", "2",
                 "--block", "5", "--mode", "proportion",
                 "--binary-out", str(tmp_path / "b.txt"),
                 "--out", str(tmp_path / "p.txt")]) == 2


def test_enhance_then_decimate_restores_grid(grid_file, tmp_path):
    fine = tmp_path / "fine.txt"
    back = tmp_path / "back.txt"
    assert main(["enhance", "--in", str(grid_file), "--k", "2",
                 "--method", "nearest", "--factor", "4", "--out", str(fine)]) == 0
    assert main(["decimate", "--in", str(fine), "--k", "2",
                 "--step", "4", "--out", str(back)]) == 0
    original = load_grid(grid_file, 2)
    restored = load_grid(back, 2)
    assert np.array_equal(restored.values, original.values)
    assert restored.geometry == original.geometry


def test_sample_random_deterministic(grid_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sample", "--in", str(grid_file), "--k", "2",
                     "--n", "10", "--seed", "5", "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()
    assert len(load_samples(a)) == 10


def test_sample_regular(grid_file, tmp_path):
    out = tmp_path / "reg.csv"
    assert main(["sample", "--in", str(grid_file), "--k", "2",
                 "--n", "9", "--mode", "regular", "--out", str(out)]) == 0
    samples = load_samples(out)
    assert len(samples) == 9
    assert len(set(samples.x.tolist())) == 3


def test_simulate_outputs_and_determinism(tmp_path):
    ti_path = tmp_path / "ti.txt"
    save_grid(fixtures.stripes_random(25, 25, seed=2), ti_path)
    out1, out2 = tmp_path / "runA", tmp_path / "runB"
    for out in (out1, out2):
        assert main(["simulate", "--ti", str(ti_path), "--k", "2",
                     "--n", "2", "--seed", "9", "--template-size", "6",
                     "--out", str(out)]) == 0
    for suffix in ("_r000.txt", "_r001.txt", "_ensemble.csv"):
        assert (tmp_path / f"runA{suffix}").exists()
        assert (tmp_path / f"runA{suffix}").read_text() == (
            tmp_path / f"runB{suffix}"
        ).read_text()
    real = load_grid(f"{out1}_r000.txt", 2)
    assert (real.geometry.nx, real.geometry.ny) == (25, 25)


def test_simulate_conditioning_and_dims(tmp_path):
    ti_path = tmp_path / "ti.txt"
    save_grid(fixtures.stripes_random(30, 30, seed=1), ti_path)
    samples_path = tmp_path / "cond.csv"
    samples_path.write_text(
        "x,y,category\n2,3,1\n14,7,0\n27,15,1\n5,19,0\n"
    )
    out = tmp_path / "cond_run"
    assert main(["simulate", "--ti", str(ti_path), "--k", "2",
                 "--samples", str(samples_path), "--nx", "30", "--ny", "20",
                 "--template-size", "6", "--out", str(out)]) == 0
    real = load_grid(f"{out}_r000.txt", 2)
    assert (real.geometry.nx, real.geometry.ny) == (30, 20)
    for x, y, cat in load_samples(samples_path):
        ix, iy = real.geometry.cell_of(x, y)
        assert real.values2d[iy, ix] == cat


def test_simulate_nx_without_ny(tmp_path):
    ti_path = tmp_path / "ti.txt"
    save_grid(fixtures.stripes_random(20, 20, seed=1), ti_path)
    assert main(["simulate", "--ti", str(ti_path), "--k", "2",
                 "--nx", "10", "--out", str(tmp_path / "x")]) == 2


def test_pipeline_validate_end_to_end(tmp_path):
    ref_path = tmp_path / "ref.txt"
    save_grid(fixtures.channels(40, 40, target=0.3, seed=1), ref_path)
    out_dir = tmp_path / "run"
    assert main(["pipeline-validate", "--reference", str(ref_path), "--k", "2",
                 "--factor", "2", "--samples", "9", "--realizations", "2",
                 "--block", "5", "--methods", "nearest",
                 "--template-size", "6", "--min-replicates", "2",
                 "--seed", "3", "--out-dir", str(out_dir)]) == 0
    manifest = (out_dir / "manifest.txt").read_text()
    assert "completed=distances" in manifest
    assert "l1:reference:nearest=" in manifest
    assert (out_dir / "curves_nearest.csv").exists()


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

def test_config_supplies_required_flags(grid_file, tmp_path):
    cfg = tmp_path / "fop.cfg"
    out = tmp_path / "cfg_run"
    cfg.write_text(f"lags=1:2\nout={out}\n# comment line\n\n")
    assert main(["fop", "--config", str(cfg), "--in", str(grid_file),
                 "--k", "2"]) == 0
    with open(f"{out}_fop.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2 * 16


def test_explicit_flag_beats_config(grid_file, tmp_path):
    cfg = tmp_path / "fop.cfg"
    out = tmp_path / "over"
    cfg.write_text("lags=1:3\n")
    assert main(["fop", "--config", str(cfg), "--in", str(grid_file),
                 "--k", "2", "--lags", "1", "--out", str(out)]) == 0
    with open(f"{out}_fop.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 16


def test_unknown_config_key(grid_file, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("wavelength=7\n")
    assert main(["fop", "--config", str(cfg), "--in", str(grid_file),
                 "--k", "2", "--lags", "1", "--out", str(tmp_path / "o")]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_malformed_config_line(grid_file, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("just a line without equals\n")
    assert main(["fop", "--config", str(cfg), "--in", str(grid_file),
                 "--k", "2", "--lags", "1", "--out", str(tmp_path / "o")]) == 2


def test_config_type_coercion(tmp_path):
    ti_path = tmp_path / "ti.txt"
    save_grid(fixtures.stripes_random(20, 20, seed=4), ti_path)
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("template-size=6\nseed=4\nn=2\n")
    out = tmp_path / "sim"
    assert main(["simulate", "--ti", str(ti_path), "--k", "2",
                 "--config", str(cfg), "--out", str(out)]) == 0
    assert (tmp_path / "sim_r001.txt").exists()
