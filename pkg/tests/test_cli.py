import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity1d.cli import main
from cavity1d.config import KINDS, eval_expression, parse_config, to_text
from cavity1d.errors import ConfigError
from cavity1d.runner import format_table, read_table, write_table


@pytest.mark.parametrize("kind", KINDS)
def test_config_roundtrip(kind):
    cfg = parse_config(f"[experiment]\nkind = {kind}\n")
    assert parse_config(to_text(cfg)) == cfg


def test_minimal_decay_defaults():
    cfg = parse_config("[experiment]\nkind = decay\n")
    assert cfg.length == 2 * math.pi and cfg.cutoff == 200.0
    assert cfg.frequency == 100.0 and cfg.coupling_sq == 0.5
    assert cfg.position == math.pi and cfg.count == 1


@settings(max_examples=40, deadline=None)
@given(
    freq=st.floats(10.0, 150.0),
    g2=st.floats(0.01, 2.0),
    frac=st.floats(0.01, 0.99),
    seed=st.integers(0, 2**64 - 1),
)
def test_config_roundtrip_property(freq, g2, frac, seed):
    text = f"[atom]\nfrequency = {freq!r}\ncoupling_sq = {g2!r}\nposition = {frac!r} * L\n[ensemble]\nseed = {seed}\n"
    cfg = parse_config(text)
    assert parse_config(to_text(cfg)) == cfg


def test_expressions():
    names = {"L": 2 * math.pi, "lambda": 0.1, "pi": math.pi}
    assert eval_expression("L/2 + lambda/8", names) == math.pi + 0.0125
    assert eval_expression("2^3", names) == 8.0
    with pytest.raises(ConfigError):
        eval_expression("__import__('os')", names)
    with pytest.raises(ConfigError):
        eval_expression("1/0", names)
    with pytest.raises(ConfigError):
        eval_expression("x + 1", names)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="'colour'"):
        parse_config("[atom]\ncolour = red\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[atoms]\nposition = 1\n")


def test_atom_at_mirror():
    with pytest.raises(ConfigError, match="atom at mirror"):
        parse_config("[atom]\nposition = 0\n")


def test_table_roundtrip(tmp_path):
    cols = {"t": np.array([0.0, 0.1, 1 / 3]), "P_e": np.array([1.0, math.pi, 1e-300])}
    path = write_table(tmp_path / "x.csv", cols, {"kind": "decay"})
    back, meta = read_table(path)
    assert meta["kind"] == "decay"
    for k in cols:
        np.testing.assert_array_equal(back[k], cols[k])
    with pytest.raises(ValueError):
        format_table({"a": [1, 2], "b": [1]})


def _run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_decay_and_manifest_rerun(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[time]\nt_max = 1\nn_samples = 11\n")
    code, out, _ = _run(["decay", "--config", str(cfg), "--out", str(tmp_path / "a")], capsys)
    assert code == 0 and "decay.csv" in out
    cols, meta = read_table(tmp_path / "a" / "decay.csv")
    assert list(cols) == ["t", "P_e"] and meta["kind"] == "decay"
    np.testing.assert_allclose(cols["P_e"], np.exp(-math.pi * cols["t"]), atol=0.02)
    code, _, _ = _run(["run", "--config", str(tmp_path / "a" / "manifest.ini"), "--out", str(tmp_path / "b")], capsys)
    assert code == 0
    assert (tmp_path / "a" / "decay.csv").read_bytes() == (tmp_path / "b" / "decay.csv").read_bytes()


def test_master_eq_columns(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[time]\nt_max = 1\nn_samples = 101\n")
    code, _, _ = _run(["master-eq", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 0
    cols, _ = read_table(tmp_path / "master_eq.csv")
    assert list(cols) == ["t", "Gamma", "delta", "valid"]
    assert np.all(cols["valid"] == 1.0)


def test_ensemble_deterministic_and_thread_invariant(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[ensemble]\nn_configs = 2\n[crystal]\ncount = 11\n[time]\nt_max = 1\nn_samples = 21\n")
    for name, threads in [("a", "1"), ("b", "1"), ("c", "8")]:
        assert _run(["ensemble", "--config", str(cfg), "--seed", "9", "--threads", threads, "--out", str(tmp_path / name)], capsys)[0] == 0
    data = [(tmp_path / n / "ensemble.csv").read_bytes() for n in "abc"]
    assert data[0] == data[1] == data[2]
    seeds, meta = read_table(tmp_path / "a" / "ensemble_seeds.csv")
    assert meta["master_seed"] == "9" and len(seeds["seed"]) == 2


@pytest.mark.parametrize(
    "text, code",
    [
        ("[atom]\nposition = 0\n", 2),
        ("[atom]\nfoo = 1\n", 2),
        ("[backend]\nname = rk\ndt = 1\n[time]\nt_max = 1\nn_samples = 2\n", 3),
        ("not an ini file", 2),
    ],
)
def test_exit_codes(tmp_path, capsys, text, code):
    cfg = tmp_path / "c.ini"
    cfg.write_text(text)
    got, _, err = _run(["decay", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert got == code
    record = json.loads(err.strip().splitlines()[-1])
    assert record["exit_code"] == code and record["message"]


def test_missing_config_is_io_error(tmp_path, capsys):
    code, _, err = _run(["decay", "--config", str(tmp_path / "nope.ini")], capsys)
    assert code == 4 and json.loads(err)["error"] == "FileNotFoundError"


def test_unwritable_output_is_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = tmp_path / "c.ini"
    cfg.write_text("[time]\nt_max = 0.1\nn_samples = 2\n")
    code, _, _ = _run(["decay", "--config", str(cfg), "--out", str(blocker / "sub")], capsys)
    assert code == 4


def test_reproduce_figure_7(tmp_path, capsys):
    code, out, _ = _run(["reproduce-figure", "7", "--out", str(tmp_path)], capsys)
    assert code == 0
    cols, _ = read_table(tmp_path / "fig7_spectrum.csv")
    assert np.all(cols["S(t=3)"][1::2] == 0.0)
    assert "manifest.ini" in out
