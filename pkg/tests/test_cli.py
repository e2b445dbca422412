import json
import math
import os

import numpy as np
import pytest

from rnddpm import load_model
from rnddpm.cli import (
    ExperimentConfig,
    atomic_write,
    build_parser,
    fmt,
    load_config_file,
    main,
    resolve_config,
)


def test_fmt_significant_digits_and_nan():
    assert fmt(2.5100049) == "2.51"
    assert fmt(0.000123456789) == "0.000123457"
    assert fmt(float("nan")) == "NaN"
    assert fmt(None) == "NaN"
    assert fmt(100.0) == "100"


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "file.csv"
    atomic_write(str(target), "a,b\n1,2\n")
    assert target.read_text() == "a,b\n1,2\n"
    leftovers = [f for f in os.listdir(tmp_path / "sub") if f.startswith(".tmp")]
    assert leftovers == []


def test_config_file_parsing(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        "# a comment\n"
        "mu = 0.12   # trailing comment\n"
        "horizon=10\n"
        "strikes=0.9,1.0,1.1\n"
        "\n"
    )
    values = load_config_file(str(cfg_path))
    assert values == {"mu": 0.12, "horizon": 10, "strikes": (0.9, 1.0, 1.1)}


def test_config_file_rejects_unknown_key(tmp_path):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("volatility=0.2\n")
    with pytest.raises(ValueError, match="unknown key"):
        load_config_file(str(cfg_path))


def test_config_file_rejects_bad_line(tmp_path):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("mu 0.12\n")
    with pytest.raises(ValueError, match="key=value"):
        load_config_file(str(cfg_path))


def test_flag_overrides_file_overrides_default(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text("mu=0.12\nsigma=0.3\n")
    parser = build_parser()
    args = parser.parse_args(
        ["diagnose", "--config", str(cfg_path), "--sigma", "0.25"])
    cfg = resolve_config(args)
    assert cfg.mu == 0.12          # from the file
    assert cfg.sigma == 0.25       # flag wins over the file
    assert cfg.s0 == 100.0         # untouched default


def test_paths_flag_aliases_n_paths():
    parser = build_parser()
    cfg = resolve_config(parser.parse_args(["smile", "--paths", "123"]))
    assert cfg.n_paths == 123


def test_default_baseline_rate_prices_atm():
    from rnddpm import bs_call_price

    cfg = ExperimentConfig()
    assert bs_call_price(100, 100, cfg.r, 0.2, 21 / 252) == pytest.approx(2.51, abs=1e-6)


FAST = ["--T", "500", "--horizon", "5", "--paths", "2000", "--seed", "7"]


def test_train_and_load_round_trip(tmp_path):
    out = tmp_path / "m"
    code = main(["train", "--n_samples", "8000", "--epochs", "40",
                 "--hidden_width", "32", "--out", str(out)])
    assert code == 0
    model = load_model(str(out / "model.npz"))
    summary = json.loads((out / "train_summary.json").read_text())
    assert summary["pass"] is True
    assert model.schedule.T == 500
    assert model.norm_scale == pytest.approx(0.2 * math.sqrt(1 / 252), rel=0.05)


def test_diagnose_outputs_and_exit_code(tmp_path):
    out = tmp_path / "d"
    code = main(["diagnose", *FAST, "--out", str(out)])
    assert code == 0
    for name in ("diagnostics.csv", "martingale.csv", "martingale.svg",
                 "diagnose_summary.json"):
        assert (out / name).exists()
    mart = (out / "martingale.csv").read_text().splitlines()
    assert mart[0] == "h,t_years,M_rn,SE_rn,M_noshift,SE_noshift"
    assert len(mart) == 1 + 5 + 1  # header + H rows + t=0 row
    svg = (out / "martingale.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_reruns_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    strikes = ["--strikes", "0.95,1.0,1.05"]
    assert main(["smile", *FAST, *strikes, "--out", str(out1)]) == 0
    assert main(["smile", *FAST, *strikes, "--out", str(out2)]) == 0
    for name in ("smile.csv", "smile.svg"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_smile_csv_renders_nan_vols(tmp_path):
    out = tmp_path / "s"
    # A far-ITM strike prices below the no-arbitrage floor at MC noise level,
    # so its implied vol column must carry the NaN sentinel as text.
    assert main(["smile", *FAST, "--strikes", "0.2,1.0", "--out", str(out)]) == 0
    body = (out / "smile.csv").read_text()
    assert "NaN" in body


def test_summary_json_structure(tmp_path):
    out = tmp_path / "j"
    main(["diagnose", *FAST, "--out", str(out)])
    payload = json.loads((out / "diagnose_summary.json").read_text())
    assert payload["command"] == "diagnose"
    assert payload["config"]["n_paths"] == 2000
    assert set(payload["gates"]) == {
        "martingale_within_3se", "atm_within_3se_of_bs", "ks_below_5pct_critical"}
    assert payload["pass"] == all(payload["gates"].values())


def test_stress_defaults_differ_from_baseline():
    parser = build_parser()
    args = parser.parse_args(["stress"])
    # resolve_config applies shared defaults; main() layers the stress ones.
    cfg = resolve_config(args)
    assert cfg.mu == 0.10
    from rnddpm.cli import STRESS_HORIZON, STRESS_MU, STRESS_R

    assert (STRESS_MU, STRESS_R, STRESS_HORIZON) == (0.15, 0.01, 63)
