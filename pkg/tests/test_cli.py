"""Command-line front end: grid parsing, exit codes, report provenance,
matrix validation/generation, comparison modes, and word dumps."""

import json

import numpy as np
import pytest

from ngdbf.channel import gaussian_unit_sixteenths
from ngdbf.cli import CliInputError, main, parse_snr_grid
from ngdbf.code import build_rs_ldpc, parse_alist, serialize_alist
from ngdbf.defaults import NOISE_REGISTER_COUNT
from ngdbf.hardware import read_noise_file

pytestmark = pytest.mark.usefixtures("clean_env")


@pytest.fixture
def clean_env(monkeypatch):
    monkeypatch.delenv("NGDBF_MATRIX", raising=False)


@pytest.fixture(scope="module")
def small_alist(tmp_path_factory):
    H = build_rs_ldpc(row_blocks=3, col_blocks=5, field_bits=4,
                      primitive_poly=0b10011)
    path = tmp_path_factory.mktemp("mat") / "small.alist"
    path.write_text(serialize_alist(H))
    return str(path)


# ---------------------------------------------------------------------------
# Grid syntax


def test_snr_grid_forms():
    assert parse_snr_grid("4.0") == [4.0]
    assert parse_snr_grid("3,4,4.5") == [3.0, 4.0, 4.5]
    grid = parse_snr_grid("3.0:4.5:0.25")
    assert grid == [3.0, 3.25, 3.5, 3.75, 4.0, 4.25, 4.5]
    # The endpoint is kept when it lands within half a step.
    assert parse_snr_grid("3.0:4.0:0.5") == [3.0, 3.5, 4.0]
    assert parse_snr_grid("3.0:4.0:0.3") == [3.0, 3.3, 3.6, 3.9]


@pytest.mark.parametrize("bad", ["abc", "3:4", "4:3:0.5", "3:4:0", "3:4:-1"])
def test_snr_grid_rejects(bad):
    with pytest.raises(CliInputError):
        parse_snr_grid(bad)


# ---------------------------------------------------------------------------
# Matrix commands


def test_code_validate_builtin_expectations(capsys, tmp_path):
    out = tmp_path / "profile.json"
    assert main(["code-validate", "--expect-802.3an", "--json", str(out)]) == 0
    text = capsys.readouterr().out
    assert "384 checks x 2048 symbols" in text
    assert "4-cycles: 0" in text
    assert "gf2 rank: 325" in text
    assert "rate 0.841" in text
    assert "802.3an-class expectations: pass" in text
    doc = json.loads(out.read_text())
    assert doc["rank"] == 325
    assert doc["four_cycles"] == 0


def test_code_validate_small_matrix_fails_strict_profile(small_alist, capsys):
    assert main(["code-validate", "--matrix", small_alist,
                 "--dv", "3", "--dc", "5"]) == 0
    assert main(["code-validate", "--matrix", small_alist,
                 "--expect-802.3an"]) == 2


def test_code_validate_bad_inputs(tmp_path, capsys):
    assert main(["code-validate", "--matrix", str(tmp_path / "missing")]) == 2
    bad = tmp_path / "bad.alist"
    bad.write_text("2 1\nnot numbers\n")
    assert main(["code-validate", "--matrix", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_code_gen_round_trips(tmp_path, capsys):
    out = tmp_path / "code.alist"
    assert main(["code-gen", "-o", str(out)]) == 0
    with open(out) as f:
        H = parse_alist(f)
    ref = build_rs_ldpc()
    assert (H.m, H.n) == (ref.m, ref.n)
    np.testing.assert_array_equal(H.col_flat, ref.col_flat)
    assert main(["code-validate", "--matrix", str(out),
                 "--expect-802.3an"]) == 0


# ---------------------------------------------------------------------------
# Simulation commands


def test_simulate_prints_provenance_header(small_alist, capsys):
    rc = main(["simulate", "--matrix", small_alist, "--snr", "2.0",
               "--eta", "0", "--t-max", "5", "--min-errors", "0",
               "--max-frames", "8", "--block-frames", "4"])
    assert rc == 0
    text = capsys.readouterr().out
    assert ("# defaults: w=0.166666667 theta=-0.55 theta_q=-0.5625 "
            "T=600 f_clock=133330000Hz") in text
    assert "# run: decoder=reference" in text
    assert "seed=0" in text
    assert "# uncoded bpsk ber at 2.00 dB" in text
    assert "ebn0_db" in text


def test_env_var_supplies_default_matrix(small_alist, monkeypatch, capsys):
    monkeypatch.setenv("NGDBF_MATRIX", small_alist)
    rc = main(["simulate", "--snr", "1.0", "--noiseless", "--min-errors", "0",
               "--max-frames", "4"])
    assert rc == 0
    assert f"matrix={small_alist}" in capsys.readouterr().out


def test_sweep_grid_rows_and_byte_identical_csv(small_alist, tmp_path, capsys):
    csvs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        rc = main(["sweep", "--matrix", small_alist, "--snr", "3.0:4.5:0.25",
                   "--noiseless", "--min-errors", "0", "--max-frames", "6",
                   "--block-frames", "3", "--csv", str(out)])
        assert rc == 0
        csvs.append(out.read_bytes())
    assert csvs[0] == csvs[1]
    lines = csvs[0].decode().strip().split("\n")
    assert len(lines) == 1 + 7
    assert lines[1].startswith("3,") and lines[-1].startswith("4.5,")


def test_sweep_rejects_bad_flags(small_alist, capsys):
    base = ["sweep", "--matrix", small_alist]
    assert main(base + ["--snr", "oops"]) == 2
    assert main(base + ["--snr", "4.0", "--eta", "1.5"]) == 2
    assert main(base + ["--snr", "4.0", "--min-errors", "0"]) == 2


def test_unwritable_csv_is_a_runtime_failure(small_alist, capsys):
    rc = main(["simulate", "--matrix", small_alist, "--snr", "1.0",
               "--noiseless", "--min-errors", "0", "--max-frames", "2",
               "--csv", "/nonexistent-dir/out.csv"])
    assert rc == 1
    assert "i/o failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Fixed/float comparison


def test_compare_emulation_mode_agrees(tmp_path, capsys):
    out = tmp_path / "cmp.json"
    rc = main(["compare", "--frames", "3", "--snr", "4.25",
               "--json", str(out)])
    assert rc == 0
    assert "trajectory equality: 3/3" in capsys.readouterr().out
    doc = json.loads(out.read_text())
    assert doc["equal_trajectories"] == 3
    assert doc["mode"] == "emulation"


def test_compare_shared_file_mode(capsys):
    rc = main(["compare", "--frames", "2", "--snr", "4.25", "--shared-file"])
    assert rc == 0
    assert "trajectory equality: 2/2" in capsys.readouterr().out


def test_compare_float_mode_reports_both_rates(small_alist, tmp_path, capsys):
    out = tmp_path / "cmp.json"
    rc = main(["compare", "--matrix", small_alist, "--mode", "float",
               "--frames", "20", "--snr", "3.0", "--t-max", "25",
               "--json", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"hw_ber", "float_ber", "hw_bit_errors",
                        "float_bit_errors"}
    assert doc["hw_ber"] >= 0.0 and doc["float_ber"] >= 0.0


def test_compare_frame_count_validation(capsys):
    assert main(["compare", "--frames", "0"]) == 0
    assert main(["compare", "--frames", "-1"]) == 2


# ---------------------------------------------------------------------------
# Word dumps


def test_noise_dump_raw_samples(tmp_path):
    out = tmp_path / "raw.txt"
    assert main(["noise-dump", "--raw", "--seed", "5", "-o", str(out)]) == 0
    with open(out) as f:
        vals = read_noise_file(f, max_mag=63)
    expect = gaussian_unit_sixteenths(NOISE_REGISTER_COUNT,
                                      np.random.default_rng(5))
    np.testing.assert_array_equal(vals, expect)


def test_noise_dump_processed_words(tmp_path, capsys):
    out = tmp_path / "words.txt"
    assert main(["noise-dump", "--seed", "5", "--snr", "4.0",
                 "-o", str(out)]) == 0
    assert "# msb drops:" in capsys.readouterr().err
    with open(out) as f:
        vals = read_noise_file(f, max_mag=31)
    assert vals.size == NOISE_REGISTER_COUNT
    assert main(["noise-dump", "--seed", "5"]) == 2   # no scale given
