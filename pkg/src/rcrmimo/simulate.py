"""Monte-Carlo trials of the RCR detector on i.i.d. complex Gaussian channels."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .constellation import Constellation, ConfigurationError
from .detector import SolverSettings, detect
from .predictor import Prediction, PredictorParams, predict
from .relaxation import RelaxationSet

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    return splitmix64((master_seed & MASK64) ^ splitmix64(trial_index & MASK64))


@dataclass(frozen=True)
class ScenarioParams:
    constellation: Constellation
    relaxation: RelaxationSet
    kappa: float = 2.0
    snr_db: float = 10.0
    zeta: float = 0.0
    n: int = 128
    trials: int = 50
    master_seed: int = 0
    settings: SolverSettings = SolverSettings()

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.m < 1:
            raise ConfigurationError("m = round(kappa n) must be >= 1")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.zeta >= 0:
            raise ConfigurationError("zeta must be nonnegative")
        self.relaxation.check_covers(self.constellation)

    @property
    def m(self) -> int:
        return int(math.floor(self.kappa * self.n + 0.5))

    @property
    def kappa_realized(self) -> float:
        return self.m / self.n

    @property
    def sigma_sq(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    def predictor_params(self, **kw) -> PredictorParams:
        return PredictorParams(self.kappa, self.sigma_sq, self.zeta, self.constellation, self.relaxation, **kw)


@dataclass(frozen=True)
class TrialResult:
    mse: float
    ser: float
    solver_iterations: int
    converged: bool


@dataclass(frozen=True)
class AggregateResult:
    mse_mean: float
    mse_stderr: float
    ser_mean: float
    ser_stderr: float
    trials_used: int
    nonconverged_trials: int
    params: ScenarioParams = field(repr=False)


def gen_channel(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """m x n matrix with i.i.d. CN(0, 1/n) entries."""
    scale = math.sqrt(0.5 / n)
    return scale * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))


def gen_noise(rng: np.random.Generator, m: int, sigma_sq: float) -> np.ndarray:
    """Length-m vector with i.i.d. CN(0, sigma_sq) entries."""
    if not sigma_sq > 0:
        raise ConfigurationError("sigma_sq must be positive")
    scale = math.sqrt(0.5 * sigma_sq)
    return scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m))


def run_trial(p: ScenarioParams, trial_index: int) -> TrialResult:
    rng = np.random.default_rng(trial_seed(p.master_seed, trial_index))
    s0 = p.constellation.sample(rng, p.n)
    H = gen_channel(rng, p.m, p.n)
    v = gen_noise(rng, p.m, p.sigma_sq)
    out = detect(H, H @ s0 + v, p.zeta, p.relaxation, p.constellation, p.settings)
    err = s0 - out.s_hat
    mse = float(np.vdot(err, err).real) / p.n
    ser = float(np.count_nonzero(out.s_star != s0)) / p.n
    return TrialResult(mse, ser, out.iterations, out.converged)


def _mean_stderr(xs):
    k = len(xs)
    mean = math.fsum(xs) / k
    if k < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in xs) / (k - 1)
    return mean, math.sqrt(var / k)


def aggregate(results, p: ScenarioParams) -> AggregateResult:
    if not results:
        raise RuntimeError("no trial completed")
    mse_mean, mse_se = _mean_stderr([t.mse for t in results])
    ser_mean, ser_se = _mean_stderr([t.ser for t in results])
    bad = sum(not t.converged for t in results)
    return AggregateResult(mse_mean, mse_se, ser_mean, ser_se, len(results), bad, p)


def run_scenario(p: ScenarioParams, threads: int = 1) -> AggregateResult:
    """Run ``p.trials`` independent trials and aggregate them.

    Each trial owns its random stream, and the sums are exactly rounded
    (``math.fsum``), so the result does not depend on ``threads``.
    """
    idx = range(p.trials)
    if threads <= 1:
        results = [run_trial(p, i) for i in idx]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda i: run_trial(p, i), idx))
    return aggregate(results, p)


@dataclass
class SweepPoint:
    value: float
    params: ScenarioParams
    aggregate: AggregateResult | None
    prediction: Prediction | None
    error: str | None = None


def sweep(base: ScenarioParams, axis: str, values, threads: int = 1, predictor_kw=None,
          sep_method: str = "auto") -> list[SweepPoint]:
    """Simulate and predict along one axis (``snr_db`` or ``zeta``).

    Failures at a point are recorded on that point and the sweep goes on.
    """
    if axis not in ("snr_db", "zeta"):
        raise ConfigurationError(f"sweep axis must be snr_db or zeta, got {axis!r}")
    values = list(values)
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    out = []
    for val in values:
        p = replace(base, **{axis: float(val)})
        agg = pred = None
        errors = []
        try:
            agg = run_scenario(p, threads)
        except Exception as e:  # recorded per point
            errors.append(f"simulate: {e}")
        try:
            pred = predict(p.predictor_params(**(predictor_kw or {})), sep_method)
        except Exception as e:
            errors.append(f"predict: {e}")
        out.append(SweepPoint(float(val), p, agg, pred, "; ".join(errors) or None))
    return out
