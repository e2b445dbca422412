"""Command-line front end: train a model and reproduce the experiment
tables (diagnostics, smile, stress, Asian grid) as CSV/SVG artifacts.

Every command reads an optional flat key=value config file, applies
command-line overrides, writes its outputs atomically into --out, and exits
0 only if its internal validation gates pass.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile

from . import market as mkt
from .diagnostics import diagnostics_report, martingale_curve, martingale_passes
from .market import MarketParams, bs_call_price, gbm_paths, sample_returns_exact
from .predictor import OraclePredictor, TrainingConfig, TrainingError, load_model, save_model, train
from .pricing import price_asian_arithmetic, price_european, price_strip
from .sampler import PHYSICAL, SamplerConfig, ddpm_paths, risk_neutral_config
from .schedule import build_schedule
from .svg import LinePlot

DEFAULT_STRIKES = (0.8, 0.867, 0.933, 1.0, 1.067, 1.133, 1.2)


@dataclasses.dataclass
class ExperimentConfig:
    # market
    s0: float = 100.0
    mu: float = 0.10
    r: float = dataclasses.field(default_factory=mkt.baseline_rate)
    sigma: float = 0.2
    dt: float = 1.0 / 252
    horizon: int = 21
    # schedule
    T: int = 500
    beta_start: float = 1e-5
    beta_end: float = 0.025
    # training
    n_samples: int = 50_000
    epochs: int = 400
    batch_size: int = 256
    learning_rate: float = 3e-3
    hidden_width: int = 64
    train_seed: int = 0
    # sampling
    n_paths: int = 20_000
    seed: int = 7
    strikes: tuple = DEFAULT_STRIKES
    asian_horizons: tuple = (21, 63, 126)
    asian_strikes: tuple = (0.9, 1.0, 1.1)
    # predictor source: oracle | train | load:PATH
    predictor: str = "oracle"
    out: str = "out"

    def market_params(self) -> MarketParams:
        return MarketParams(s0=self.s0, mu=self.mu, r=self.r, sigma=self.sigma,
                            dt=self.dt, horizon=self.horizon)

    def schedule(self):
        return build_schedule(self.T, self.beta_start, self.beta_end)

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(
            n_samples=self.n_samples, epochs=self.epochs,
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            hidden_width=self.hidden_width, seed=self.train_seed,
        )


_FLOAT_KEYS = {"s0", "mu", "r", "sigma", "dt", "beta_start", "beta_end", "learning_rate"}
_INT_KEYS = {"horizon", "T", "n_samples", "epochs", "batch_size", "hidden_width",
             "train_seed", "n_paths", "seed"}
_LIST_KEYS = {"strikes": float, "asian_horizons": int, "asian_strikes": float}


def _coerce(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _LIST_KEYS:
        cast = _LIST_KEYS[key]
        return tuple(cast(tok) for tok in raw.split(",") if tok.strip())
    return raw


def load_config_file(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment."""
    values = {}
    valid = {f.name for f in dataclasses.fields(ExperimentConfig)}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in valid:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw.strip())
    return values


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        for key, value in load_config_file(args.config).items():
            setattr(cfg, key, value)
    for field in dataclasses.fields(ExperimentConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            if field.name in _LIST_KEYS and isinstance(value, str):
                value = _coerce(field.name, value)
            setattr(cfg, field.name, value)
    if args.paths is not None:
        cfg.n_paths = args.paths
    return cfg


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    """6 significant digits; NaN rendered literally."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NaN"
    return f"{x:.6g}"


def make_predictor(cfg: ExperimentConfig, params: MarketParams):
    """Build the noise predictor from the configured source."""
    sched = cfg.schedule()
    if cfg.predictor == "oracle":
        # Analytic oracle in standardized coordinates: N(0, 1) clean data
        # with the exact normalization of the physical return law.
        return OraclePredictor(sched, mean=0.0, var=1.0,
                               norm_shift=params.m_p,
                               norm_scale=math.sqrt(params.v0))
    if cfg.predictor == "train":
        data = sample_returns_exact(params, "P", cfg.n_samples, cfg.train_seed)
        return train(data, sched, cfg.training_config())
    if cfg.predictor.startswith("load:"):
        return load_model(cfg.predictor[len("load:"):])
    raise ValueError(f"predictor must be oracle|train|load:PATH, got {cfg.predictor!r}")


def write_summary(cfg: ExperimentConfig, command: str, gates: dict, extra: dict = None) -> bool:
    passed = all(gates.values())
    payload = {
        "command": command,
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in dataclasses.asdict(cfg).items()},
        "gates": gates,
        "pass": passed,
    }
    if extra:
        payload.update(extra)
    atomic_write(os.path.join(cfg.out, f"{command}_summary.json"),
                 json.dumps(payload, indent=2) + "\n")
    return passed


def cmd_train(cfg: ExperimentConfig) -> int:
    params = cfg.market_params()
    try:
        predictor = make_predictor(cfg, params)
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return 1
    model_path = os.path.join(cfg.out, "model.npz")
    os.makedirs(cfg.out, exist_ok=True)
    save_model(model_path, predictor)
    gates = {"model_saved": os.path.exists(model_path)}
    if hasattr(predictor, "heldout_mse"):
        ratio = predictor.heldout_mse / predictor.oracle_floor_mse
        print(f"held-out MSE {predictor.heldout_mse:.6f} "
              f"(analytic floor {predictor.oracle_floor_mse:.6f}, ratio {ratio:.4f})")
        gates["heldout_within_5pct_of_floor"] = bool(ratio <= 1.05)
    else:
        print("analytic predictor persisted (no training required)")
    print(f"model written to {model_path}")
    ok = write_summary(cfg, "train", gates)
    return 0 if ok else 1


def _sampler_pair(cfg: ExperimentConfig, params: MarketParams):
    predictor = make_predictor(cfg, params)
    rn = risk_neutral_config(predictor, params)
    noshift = SamplerConfig(mode=PHYSICAL, predictor=predictor)
    return rn, noshift


def cmd_diagnose(cfg: ExperimentConfig) -> int:
    params = cfg.market_params()
    rn_cfg, ns_cfg = _sampler_pair(cfg, params)
    paths_rn = ddpm_paths(rn_cfg, params, cfg.n_paths, cfg.seed)
    paths_ns = ddpm_paths(ns_cfg, params, cfg.n_paths, cfg.seed)

    report = diagnostics_report(paths_rn, params)
    curve_rn = report.martingale_curve
    curve_ns = martingale_curve(paths_ns, params.r, dt=params.dt)

    atm = price_european(paths_rn, params.s0, params.r, dt=params.dt)
    bs = bs_call_price(params.s0, params.s0, params.r, params.sigma, params.maturity)
    ks_n = min(1000, cfg.n_paths)
    ks_critical = 1.358 / math.sqrt(ks_n)

    sqrt_v0 = math.sqrt(params.v0)
    rows = [
        ("mean_one_step_return", report.mean_return, params.m_q),
        ("std_one_step_returns", report.std_return, sqrt_v0),
        ("discounted_terminal_mean", report.discounted_terminal_mean, params.s0),
        ("ks_statistic_terminal_log_price", report.ks_statistic, ks_critical),
        ("ks_p_value", report.ks_p_value, 0.05),
        ("atm_call_price", atm.value, bs),
        ("atm_call_std_error", atm.std_error, math.nan),
        ("abs_pricing_error", abs(atm.value - bs), 3 * atm.std_error),
    ]
    csv = "quantity,rn_ddpm,reference\n" + "".join(
        f"{name},{fmt(a)},{fmt(b)}\n" for name, a, b in rows)
    atomic_write(os.path.join(cfg.out, "diagnostics.csv"), csv)

    mart = "h,t_years,M_rn,SE_rn,M_noshift,SE_noshift\n"
    for h in range(params.horizon + 1):
        mart += (f"{h},{fmt(curve_rn[h, 0])},{fmt(curve_rn[h, 1])},{fmt(curve_rn[h, 2])},"
                 f"{fmt(curve_ns[h, 1])},{fmt(curve_ns[h, 2])}\n")
    atomic_write(os.path.join(cfg.out, "martingale.csv"), mart)

    plot = LinePlot("Discounted mean price", "t (years)", "M_t")
    plot.add_line(curve_rn[:, 0], curve_rn[:, 1], "#1f77b4", "risk-neutral")
    plot.add_line(curve_ns[:, 0], curve_ns[:, 1], "#ff7f0e", "no shift")
    plot.add_dashed([curve_rn[0, 0], curve_rn[-1, 0]], [params.s0, params.s0], "#444444", "S0")
    atomic_write(os.path.join(cfg.out, "martingale.svg"), plot.render())

    gates = {
        "martingale_within_3se": martingale_passes(curve_rn, params.s0),
        "atm_within_3se_of_bs": bool(abs(atm.value - bs) <= 3 * atm.std_error),
        "ks_below_5pct_critical": bool(report.ks_statistic < ks_critical),
    }
    for name, value, ref in rows:
        print(f"{name}: {fmt(value)} (reference {fmt(ref)})")
    ok = write_summary(cfg, "diagnose", gates)
    print("PASS" if ok else "FAIL", "-", gates)
    return 0 if ok else 1


def cmd_smile(cfg: ExperimentConfig) -> int:
    params = cfg.market_params()
    rn_cfg, _ = _sampler_pair(cfg, params)
    paths_ddpm = ddpm_paths(rn_cfg, params, cfg.n_paths, cfg.seed)
    paths_gbm = gbm_paths(params, "Q", cfg.n_paths, cfg.seed + 1)
    strikes = [m * params.s0 for m in cfg.strikes]
    strip_ddpm = price_strip(paths_ddpm, strikes, params.r, dt=params.dt)
    strip_gbm = price_strip(paths_gbm, strikes, params.r, dt=params.dt)

    csv = "K_over_s0,C_ddpm,SE_ddpm,C_gbm,SE_gbm,C_bs,iv_ddpm,iv_gbm,iv_bs\n"
    gates_all = []
    for (m, (K, est_d, iv_d), (_, est_g, iv_g)) in zip(cfg.strikes, strip_ddpm, strip_gbm):
        bs = bs_call_price(params.s0, K, params.r, params.sigma, params.maturity)
        iv_bs = mkt.implied_vol(bs, params.s0, K, params.r, params.maturity)
        csv += (f"{fmt(m)},{fmt(est_d.value)},{fmt(est_d.std_error)},"
                f"{fmt(est_g.value)},{fmt(est_g.std_error)},{fmt(bs)},"
                f"{fmt(iv_d)},{fmt(iv_g)},{fmt(iv_bs)}\n")
        gates_all.append(abs(est_d.value - bs) <= 3 * max(est_d.std_error, 1e-12))
    atomic_write(os.path.join(cfg.out, "smile.csv"), csv)

    plot = LinePlot("Implied volatility smile", "K / S0", "implied vol")
    plot.add_line(list(cfg.strikes), [params.sigma] * len(cfg.strikes), "#2ca02c", "BS flat vol")
    plot.add_markers(list(cfg.strikes), [row[2] for row in strip_gbm], "#ff7f0e", "GBM MC")
    plot.add_markers(list(cfg.strikes), [row[2] for row in strip_ddpm], "#1f77b4", "RN-DDPM")
    atomic_write(os.path.join(cfg.out, "smile.svg"), plot.render())

    gates = {"ddpm_within_3se_of_bs_all_strikes": bool(all(gates_all))}
    ok = write_summary(cfg, "smile", gates)
    print("PASS" if ok else "FAIL", "-", gates)
    return 0 if ok else 1


STRESS_MU = 0.15
STRESS_R = 0.01
STRESS_HORIZON = 63


def cmd_stress(cfg: ExperimentConfig) -> int:
    params = cfg.market_params()
    rn_cfg, ns_cfg = _sampler_pair(cfg, params)
    paths_rn = ddpm_paths(rn_cfg, params, cfg.n_paths, cfg.seed)
    paths_ns = ddpm_paths(ns_cfg, params, cfg.n_paths, cfg.seed)

    csv = "K_over_s0,C_bs,C_rn,SE_rn,C_noshift,SE_noshift\n"
    within = []
    atm_ratio = None
    for m in cfg.strikes:
        K = m * params.s0
        bs = bs_call_price(params.s0, K, params.r, params.sigma, params.maturity)
        est_rn = price_european(paths_rn, K, params.r, dt=params.dt)
        est_ns = price_european(paths_ns, K, params.r, dt=params.dt)
        csv += (f"{fmt(m)},{fmt(bs)},{fmt(est_rn.value)},{fmt(est_rn.std_error)},"
                f"{fmt(est_ns.value)},{fmt(est_ns.std_error)}\n")
        within.append(abs(est_rn.value - bs) <= 3 * max(est_rn.std_error, 1e-12))
        if abs(m - 1.0) < 1e-9:
            atm_ratio = est_ns.value / bs
    atomic_write(os.path.join(cfg.out, "stress.csv"), csv)

    gates = {
        "rn_within_3se_of_bs_all_strikes": bool(all(within)),
        "noshift_atm_overprices_40pct": bool(atm_ratio is not None and atm_ratio >= 1.4),
    }
    print(f"no-shift / BS at the money: {fmt(atm_ratio)}")
    ok = write_summary(cfg, "stress", gates)
    print("PASS" if ok else "FAIL", "-", gates)
    return 0 if ok else 1


def cmd_asian(cfg: ExperimentConfig) -> int:
    base = cfg.market_params()
    predictor = make_predictor(cfg, base)
    csv = "H,K_over_s0,C_ddpm,SE_ddpm,C_gbm,SE_gbm,err\n"
    cells_within = 0
    n_cells = 0
    for H in cfg.asian_horizons:
        params = MarketParams(s0=cfg.s0, mu=cfg.mu, r=cfg.r, sigma=cfg.sigma,
                              dt=cfg.dt, horizon=int(H))
        rn_cfg = risk_neutral_config(predictor, params)
        paths_ddpm = ddpm_paths(rn_cfg, params, cfg.n_paths, cfg.seed + H)
        paths_gbm = gbm_paths(params, "Q", cfg.n_paths, cfg.seed + 10_000 + H)
        for m in cfg.asian_strikes:
            K = m * params.s0
            est_d = price_asian_arithmetic(paths_ddpm, K, params.r, dt=params.dt)
            est_g = price_asian_arithmetic(paths_gbm, K, params.r, dt=params.dt)
            err = abs(est_d.value - est_g.value)
            combined_se = math.hypot(est_d.std_error, est_g.std_error)
            csv += (f"{H},{fmt(m)},{fmt(est_d.value)},{fmt(est_d.std_error)},"
                    f"{fmt(est_g.value)},{fmt(est_g.std_error)},{fmt(err)}\n")
            n_cells += 1
            cells_within += int(err <= 3 * max(combined_se, 1e-12))
    atomic_write(os.path.join(cfg.out, "asian.csv"), csv)

    gates = {"at_least_8_of_9_within_3se": bool(cells_within >= n_cells - 1)}
    print(f"{cells_within}/{n_cells} cells within 3 combined SE")
    ok = write_summary(cfg, "asian", gates)
    print("PASS" if ok else "FAIL", "-", gates)
    return 0 if ok else 1


COMMANDS = {
    "train": cmd_train,
    "diagnose": cmd_diagnose,
    "smile": cmd_smile,
    "stress": cmd_stress,
    "asian": cmd_asian,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnddpm",
        description="Risk-neutral diffusion pricer: experiment reproduction commands.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "train": "train (or persist) a noise predictor and save the model file",
        "diagnose": "one-step moments, KS test, ATM price, martingale curves",
        "smile": "multi-strike prices and implied-volatility smile",
        "stress": "large drift-gap stress table (RN vs no-shift vs BS)",
        "asian": "arithmetic Asian price grid vs GBM benchmark",
    }
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=descriptions[name])
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--paths", type=int, help="number of Monte Carlo paths")
        for field in dataclasses.fields(ExperimentConfig):
            if field.name in _LIST_KEYS:
                p.add_argument(f"--{field.name}", type=str,
                               help=f"comma-separated override for {field.name}")
            elif field.name in _FLOAT_KEYS:
                p.add_argument(f"--{field.name}", type=float)
            elif field.name in _INT_KEYS:
                p.add_argument(f"--{field.name}", type=int)
            else:
                p.add_argument(f"--{field.name}", type=str)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve_config(args)
    if args.command == "train" and args.predictor is None and "predictor" not in _config_file_keys(args):
        cfg.predictor = "train"
    if args.command == "stress":
        # Stress defaults differ from the baseline; explicit flags still win.
        if args.mu is None and "mu" not in _config_file_keys(args):
            cfg.mu = STRESS_MU
        if args.r is None and "r" not in _config_file_keys(args):
            cfg.r = STRESS_R
        if args.horizon is None and "horizon" not in _config_file_keys(args):
            cfg.horizon = STRESS_HORIZON
    return COMMANDS[args.command](cfg)


def _config_file_keys(args) -> set:
    if getattr(args, "config", None):
        return set(load_config_file(args.config))
    return set()


if __name__ == "__main__":
    sys.exit(main())
