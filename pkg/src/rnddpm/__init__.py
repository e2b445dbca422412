"""Risk-neutral diffusion pricer: a DDPM trained on physical-measure
log-returns, shifted in closed form at sampling time to the risk-neutral
drift, with Monte Carlo pricing and GBM / Black-Scholes diagnostics."""

from .schedule import DiffusionSchedule, ShiftConstants, build_schedule, shift_constants
from .market import (
    MarketParams,
    OptionKind,
    OptionSpec,
    baseline_rate,
    bs_call_price,
    bs_put_price,
    gbm_paths,
    implied_rate,
    implied_vol,
    sample_returns_exact,
)
from .paths import PricePaths
from .predictor import (
    MLPPredictor,
    OraclePredictor,
    TrainingConfig,
    TrainingError,
    load_model,
    oracle_predict,
    save_model,
    train,
)
from .sampler import (
    PHYSICAL,
    RISK_NEUTRAL,
    SamplerConfig,
    build_paths,
    ddpm_paths,
    reverse_sample,
    risk_neutral_config,
)
from .pricing import PriceEstimate, price_asian_arithmetic, price_european, price_strip
from .diagnostics import (
    DiagnosticsReport,
    MomentReport,
    diagnostics_report,
    ks_gaussian,
    ks_terminal,
    martingale_curve,
    martingale_passes,
    moment_report,
)

__version__ = "0.1.0"
