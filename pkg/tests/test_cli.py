import csv
import json

import pytest

from backend.cli import main

CANONICAL = [
    "d_f_m,f_number,c_max_px,pixel_um,focal_mm,sigma_max_px,mae_max",
    "1,1.4,3,5.6,14.4400,4.4600,0.0094",
    "1,1,1,5.6,7.0700,1.4900,0.0006",
    "1,1,1,8,8.0000,1.5000,0.0010",
    "10,4,7,4,150.0000,3.0000,0.0050",
    "10,2,2,2,50.0000,0.9000,0.0010",
    "10,2,3,4,60.0000,2.0000,0.0200",
    "10,2.8,3,4,70.0000,2.5000,0.0050",
    "100,1,1,5.6,70.9700,nan,nan",
]

TINY_GRID = ["--f-numbers", "2.8", "--focus-distances", "10m", "--c-max", "1", "--pixels", "5.6um"]


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture
def canonical_table(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("\n".join(CANONICAL) + "\n")
    return path


def test_otf_mono_in_focus(tmp_path):
    out = tmp_path / "mono.csv"
    assert main(["otf-mono", "--ar-over-lambda", "0", "--samples", "11", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 11
    assert all(row["h_transfer"] == "1" for row in rows)
    assert rows[-1]["h_o"] == "0"


def test_otf_mono_to_stdout(capsys):
    assert main(["otf-mono", "--ar-over-lambda", "1.5", "--samples", "5"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "s,h_def_o,h_o,h_transfer,h_approx"
    assert len(out) == 6


def test_bare_number_length_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["otf-spectral", "--f", "15", "--fn", "1.4", "--df", "1m", "--pixel", "5.6um",
              "--coc-px", "1", "--out", str(tmp_path / "s.csv")])
    assert info.value.code == 1


def test_focus_inside_focal_length_is_usage_error(tmp_path):
    code = main(["otf-spectral", "--f", "50mm", "--fn", "2", "--df", "40mm", "--pixel", "5.6um",
                 "--coc-px", "1", "--out", str(tmp_path / "s.csv")])
    assert code == 1


def test_otf_spectral_in_focus(tmp_path, coarse_config_file):
    out = tmp_path / "s.csv"
    code = main(["--config", coarse_config_file, "otf-spectral", "--f", "15mm", "--fn", "1.4",
                 "--df", "1m", "--pixel", "5.6um", "--coc-px", "0", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 33
    assert all(float(row["mtf"]) == pytest.approx(1.0, abs=1e-12) for row in rows)
    sidecar = json.loads(out.with_suffix(".json").read_text())
    assert sidecar["sigma_px"] == pytest.approx(0.0, abs=1e-6)
    assert sidecar["mae"] <= sidecar["rmse"] + 1e-15
    assert sidecar["camera"]["focal_length"] == pytest.approx(0.015)


def test_otf_spectral_depth_offset(tmp_path, coarse_config_file):
    out = tmp_path / "s.csv"
    code = main(["--config", coarse_config_file, "otf-spectral", "--f", "15mm", "--fn", "1.4",
                 "--df", "1m", "--pixel", "5.6um", "--depth-offset=-0.1m", "--out", str(out)])
    assert code == 0
    sidecar = json.loads(out.with_suffix(".json").read_text())
    assert sidecar["coc_px"] == pytest.approx(-3.24, abs=5e-3)
    assert sidecar["sigma_px"] > 0


def test_otf_spectral_to_stdout_writes_no_sidecar(tmp_path, coarse_config_file, capsys):
    code = main(["--config", coarse_config_file, "otf-spectral", "--f", "15mm", "--fn", "1.4",
                 "--df", "1m", "--pixel", "5.6um", "--coc-px", "2", "--out", "-"])
    assert code == 0
    captured = capsys.readouterr()
    lines = captured.out.splitlines()
    assert lines[0] == "u_cpp,h_def,mtf,gauss_fit"
    assert len(lines) == 34
    assert "sigma=" in captured.err
    assert list(tmp_path.glob("*.json")) == []


def test_filter_canonical_table(tmp_path, canonical_table, capsys):
    out = tmp_path / "kept.csv"
    assert main(["filter", "--in", str(canonical_table), "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "3"
    rows = read_csv(out)
    assert [(r["d_f_m"], r["f_number"]) for r in rows] == [("1", "1.4"), ("1", "1"), ("10", "2.8")]
    stats = read_csv(tmp_path / "kept_stats.csv")
    assert [(r["d_f_m"], r["count"]) for r in stats] == [("1", "2"), ("10", "1")]
    assert stats[0]["focal_mm_min"] == "7.07"
    assert stats[0]["focal_mm_max"] == "14.44"


def test_filter_exact_pixel(tmp_path, canonical_table, capsys):
    out = tmp_path / "kept.csv"
    assert main(["filter", "--in", str(canonical_table), "--out", str(out), "--pixel-exact", "5.6um"]) == 0
    assert capsys.readouterr().out.strip() == "2"


def test_noop_filter_reproduces_table(tmp_path):
    source = tmp_path / "clean.csv"
    source.write_text("\n".join(CANONICAL[:-1]) + "\n")
    out = tmp_path / "same.csv"
    code = main(["filter", "--in", str(source), "--out", str(out), "--mae-max", "1",
                 "--sigma-min", "0.1", "--sigma-max", "100", "--pixel-max", "1m", "--focal-max", "10m"])
    assert code == 0
    assert out.read_bytes() == source.read_bytes()


def test_filter_schema_mismatch_is_io_failure(tmp_path):
    source = tmp_path / "odd.csv"
    source.write_text("f_number,c_max_px,pixel_um,blur\n1,1,5.6,2\n")
    assert main(["filter", "--in", str(source), "--out", str(tmp_path / "o.csv")]) == 3


def test_filter_missing_input_is_io_failure(tmp_path):
    assert main(["filter", "--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.csv")]) == 3


def test_filter_bad_sigma_bounds(tmp_path, canonical_table):
    code = main(["filter", "--in", str(canonical_table), "--out", str(tmp_path / "o.csv"),
                 "--sigma-min", "5", "--sigma-max", "1"])
    assert code == 1


def test_plot_empty_table(tmp_path):
    source = tmp_path / "empty.csv"
    source.write_text("u_cpp,mtf\n")
    out = tmp_path / "empty.svg"
    assert main(["plot", "--in", str(source), "--out", str(out)]) == 3
    assert not out.exists()


def test_plot(tmp_path):
    source = tmp_path / "curve.csv"
    source.write_text("u_cpp,mtf,gauss_fit\n0,1,1\n0.5,0.5,0.6\n1,0.1,0.2\n")
    out = tmp_path / "curve.svg"
    assert main(["plot", "--in", str(source), "--out", str(out), "--title", "fit"]) == 0
    assert out.read_text().count("<polyline") == 2


def test_sweep_with_starved_quadrature_is_partial(tmp_path, starved_config_file):
    out = tmp_path / "table.csv"
    code = main(["--config", starved_config_file, "sweep", *TINY_GRID, "--out", str(out)])
    assert code == 2
    rows = read_csv(out)
    assert len(rows) == 1
    assert rows[0]["sigma_max_px"] == "nan"


def test_sweep_output_independent_of_jobs(tmp_path, coarse_config_file):
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    grid = [*TINY_GRID[:-1], "5.6um,8um", "--full"]
    assert main(["--config", coarse_config_file, "sweep", *grid, "--jobs", "1", "--out", str(serial)]) == 0
    assert main(["--config", coarse_config_file, "sweep", *grid, "--jobs", "8", "--out", str(parallel)]) == 0
    assert serial.read_bytes() == parallel.read_bytes()
    rows = read_csv(serial)
    assert [r["pixel_um"] for r in rows] == ["5.6", "8"]
    assert all(r["d_f_m"] == "10" for r in rows)


def test_sweep_full_writes_statistics(tmp_path, coarse_config_file):
    out = tmp_path / "table.json"
    stats = tmp_path / "stats.csv"
    code = main(["--config", coarse_config_file, "sweep", *TINY_GRID, "--full", "--format", "json",
                 "--out", str(out), "--stats", str(stats)])
    assert code == 0
    document = json.loads(out.read_text())
    assert document["schema"] == "full"
    assert len(document["records"]) == 1
    assert stats.read_text().splitlines()[0].startswith("d_f_m,count")
