"""Asymptotic MSE / SEP of the RCR detector from a scalar min-max problem.

The high-dimensional behaviour of the detector is summarized by the saddle
point ``(alpha*, beta*)`` of

    F(a, b) = k a b + s2 b / (2a) - b^2/2 - a b^2 / (b + 2 z a)
              + b/(2a) - b^2 / (2 a b + 4 z a^2)
              + (b/(2a) + z) E[ D^2( theta (S0 - a Gc); V ) ],   theta = b / (b + 2 z a)

with ``Gc`` complex Gaussian with independent standard-normal real and
imaginary parts.  ``2 k alpha*^2 - s2`` is the limiting MSE, and the limiting
SEP is the probability that the projected scalar estimate leaves the
decision cell of ``S0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.stats import norm, qmc

from .constellation import Constellation, ConfigurationError
from .golden import golden_section
from .relaxation import RelaxationSet

ALPHA_LO = 1e-6
BETA_LO = 1e-6
MAX_BRACKET_GROWTH = 6
EDGE_FRACTION = 0.01
QMC_LOG2_POINTS = 20


class SaddleError(RuntimeError):
    """The saddle-point search failed; ``best`` holds the last iterate."""

    def __init__(self, message: str, best: "SaddleSolution | None" = None, zeta: float | None = None):
        super().__init__(message)
        self.best = best
        self.zeta = zeta


@dataclass(frozen=True)
class PredictorParams:
    kappa: float
    sigma_sq: float
    zeta: float
    constellation: Constellation
    relaxation: RelaxationSet
    quadrature_nodes: int = 64
    inner_tol: float = 1e-10
    outer_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigurationError("kappa must be positive")
        if not self.sigma_sq > 0:
            raise ConfigurationError("sigma_sq must be positive")
        if not self.zeta >= 0:
            raise ConfigurationError("zeta must be nonnegative")
        if self.quadrature_nodes < 8:
            raise ConfigurationError("quadrature_nodes must be >= 8")

    @classmethod
    def from_snr_db(cls, kappa, snr_db, zeta, constellation, relaxation, **kw):
        return cls(kappa, 10.0 ** (-snr_db / 10.0), zeta, constellation, relaxation, **kw)


@dataclass(frozen=True)
class SaddleSolution:
    alpha_star: float
    beta_star: float
    objective: float
    converged: bool
    outer_iterations: int
    inner_iterations: int
    grad_alpha: float = math.nan
    grad_beta: float = math.nan

    def theta(self, zeta: float) -> float:
        return self.beta_star / (self.beta_star + 2.0 * zeta * self.alpha_star)


@dataclass(frozen=True)
class Prediction:
    mse: float
    sep: float
    solution: SaddleSolution
    sep_method: str
    mse_clamped: bool = False


@dataclass(frozen=True)
class ZetaOptimum:
    zeta: float
    value: float
    interior: bool
    metric: str
    probes: dict = field(default_factory=dict, repr=False)


# --------------------------------------------------------------------------
# expectation of the squared distance


def _gauss_pos_part_sq(mu, s, c):
    """E[(X - c)_+^2] for X ~ N(mu, s^2), elementwise."""
    d = mu - c
    if s == 0.0:
        return np.maximum(d, 0.0) ** 2
    t = d / s
    return (d * d + s * s) * special.ndtr(t) + d * s * norm.pdf(t)


def _box_expectation(points, theta, alpha, c):
    s = theta * alpha
    tot = 0.0
    for coord in (points.real, points.imag):
        mu = theta * coord
        tot = tot + _gauss_pos_part_sq(mu, s, c) + _gauss_pos_part_sq(-mu, s, c)
    return float(np.mean(tot))


def _rice_tail_moment(nu: float, s: float, r: float) -> float:
    """E[(R - r)_+^2] for R = |nu + s Gc| (Rice distributed)."""
    if s == 0.0:
        return max(nu - r, 0.0) ** 2
    upper = max(r, nu) + 40.0 * s
    if upper <= r:
        return 0.0
    inv = 1.0 / (s * s)

    def f(rho):
        return (rho - r) ** 2 * rho * inv * math.exp(-0.5 * (rho - nu) ** 2 * inv) * special.i0e(rho * nu * inv)

    pts = [nu] if r < nu < upper else None
    val, _ = integrate.quad(f, r, upper, points=pts, epsabs=1e-15, epsrel=1e-12, limit=200)
    return max(val, 0.0)


def _disk_expectation(points, theta, alpha, radius):
    mods, counts = np.unique(np.round(np.abs(points), 14), return_counts=True)
    s = theta * alpha
    vals = [_rice_tail_moment(theta * m, s, radius) for m in mods]
    return float(np.dot(vals, counts) / counts.sum())


@lru_cache(maxsize=16)
def _hermite_grid(nodes: int):
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    return x[:, None] + 1j * x[None, :], w[:, None] * w[None, :]


def _gauss_hermite_expectation(points, theta, alpha, relaxation, nodes):
    grid, weights = _hermite_grid(nodes)
    tot = 0.0
    for s0 in points:
        tot += float(np.sum(weights * relaxation.dist_sq(theta * (s0 - alpha * grid))))
    return tot / len(points)


def expectation_dist_sq(p: PredictorParams, theta: float, alpha: float, method: str = "auto") -> float:
    """E over S0 uniform on the alphabet and Gc of D^2(theta (S0 - alpha Gc); V).

    ``method="auto"`` uses exact one-dimensional reductions for the shipped
    sets (closed-form Gaussian moments for the box, a radial Rice integral
    for the disk); ``"gauss_hermite"`` forces the tensor-product rule with
    ``p.quadrature_nodes`` nodes per axis.
    """
    v = p.relaxation
    pts = p.constellation.points
    if method == "gauss_hermite":
        return _gauss_hermite_expectation(pts, theta, alpha, v, p.quadrature_nodes)
    if method != "auto":
        raise ValueError(f"unknown expectation method {method!r}")
    if v.kind == "none":
        return 0.0
    if v.kind == "box":
        return _box_expectation(pts, theta, alpha, v.halfwidth)
    if v.kind == "disk":
        return _disk_expectation(pts, theta, alpha, v.radius)
    return _gauss_hermite_expectation(pts, theta, alpha, v, p.quadrature_nodes)


# --------------------------------------------------------------------------
# objective and saddle point


def _objective(p: PredictorParams, alpha: float, beta: float, expect) -> float:
    k, s2, z = p.kappa, p.sigma_sq, p.zeta
    den = beta + 2.0 * z * alpha
    theta = beta / den
    val = (k * alpha * beta + s2 * beta / (2.0 * alpha) - 0.5 * beta * beta
           - alpha * beta * beta / den
           + (beta / (2.0 * alpha) - beta * beta / (2.0 * alpha * den)))
    ed = expect(theta, alpha)
    return val + (beta / (2.0 * alpha) + z) * ed


def objective(p: PredictorParams, alpha: float, beta: float) -> float:
    """Value of the scalar min-max objective at ``(alpha, beta)``."""
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    with np.errstate(over="raise", invalid="raise"):
        return _objective(p, alpha, beta, lambda th, a: expectation_dist_sq(p, th, a))


def _make_cached_expectation(p):
    cache: dict = {}

    def expect(theta, alpha):
        key = (theta, alpha)
        v = cache.get(key)
        if v is None:
            v = expectation_dist_sq(p, theta, alpha)
            if len(cache) > 4096:
                cache.clear()
            cache[key] = v
        return v

    return expect


def _safe(fun):
    def wrapped(*args):
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                return fun(*args)
        except (FloatingPointError, OverflowError, ZeroDivisionError):
            return math.nan
    return wrapped


def solve_saddle(p: PredictorParams) -> SaddleSolution:
    """Nested golden-section search: min over alpha of max over beta.

    Brackets start at ``[1e-6, 10 (1 + sigma)]`` for alpha and
    ``[1e-6, 10 (1 + sigma)(1 + kappa)]`` for beta and are doubled (at most
    six times) while the optimum sits within 1% of the upper edge.
    """
    sigma = math.sqrt(p.sigma_sq)
    alpha_hi = 10.0 * (1.0 + sigma)
    beta_hi0 = 10.0 * (1.0 + sigma) * (1.0 + p.kappa)
    expect = _make_cached_expectation(p)
    F = _safe(lambda a, b: _objective(p, a, b, expect))
    inner_count = 0

    def inner(alpha):
        nonlocal inner_count
        hi = beta_hi0
        for _ in range(MAX_BRACKET_GROWTH + 1):
            res = golden_section(lambda b: F(alpha, b), BETA_LO, hi, p.inner_tol, p.max_iter, maximize=True)
            inner_count += res.iterations
            if res.x < (1.0 - EDGE_FRACTION) * hi:
                return res, False
            hi *= 2.0
        return res, True

    outer_count = 0
    for _ in range(MAX_BRACKET_GROWTH + 1):
        out = golden_section(lambda a: inner(a)[0].fx, ALPHA_LO, alpha_hi, p.outer_tol, p.max_iter)
        outer_count += out.iterations
        if out.x < (1.0 - EDGE_FRACTION) * alpha_hi:
            break
        alpha_hi *= 2.0
    alpha = out.x
    res, at_edge = inner(alpha)
    beta = res.x
    ga, gb = _gradient(F, alpha, beta)
    sol = SaddleSolution(alpha, beta, res.fx, out.converged and res.converged and not at_edge,
                         outer_count, inner_count, ga, gb)
    if alpha >= (1.0 - EDGE_FRACTION) * alpha_hi:
        raise SaddleError(f"alpha optimum stuck at bracket edge {alpha_hi:g}; grow the alpha bracket", sol)
    if at_edge:
        raise SaddleError("beta optimum stuck at bracket edge after 6 doublings; grow the beta bracket", sol)
    if not sol.converged or not math.isfinite(sol.objective):
        raise SaddleError("saddle search did not converge within the iteration budget", sol)
    return sol


def _gradient(F, alpha, beta):
    ha = 1e-5 * max(alpha, 1e-3)
    hb = 1e-5 * max(beta, 1e-3)
    ga = (F(alpha + ha, beta) - F(alpha - ha, beta)) / (2 * ha)
    gb = (F(alpha, beta + hb) - F(alpha, beta - hb)) / (2 * hb)
    return ga, gb


# --------------------------------------------------------------------------
# MSE and SEP


def predict_mse(s: SaddleSolution, p: PredictorParams) -> float:
    raw = 2.0 * p.kappa * s.alpha_star ** 2 - p.sigma_sq
    if raw < -1e-9:
        warnings.warn(f"predicted MSE {raw:.3e} clamped to zero", RuntimeWarning, stacklevel=2)
    return max(raw, 0.0)


def predict_sep_psk(alpha_star: float, M: int) -> float:
    """P[ |Z / (G - 1/alpha)| >= tan(pi/M) ] for independent standard normals Z, G.

    Conditional on G the event has probability ``2 Q(tan(pi/M) |G - 1/alpha|)``;
    the remaining integral over G is done numerically.
    """
    if not alpha_star > 0:
        raise ValueError("alpha_star must be positive")
    if M < 4:
        raise ValueError("M must be >= 4")
    t = math.tan(math.pi / M)
    u = 1.0 / alpha_star

    def f(g):
        return norm.pdf(g) * 2.0 * special.ndtr(-t * abs(g - u))

    left, _ = integrate.quad(f, -np.inf, u, epsabs=1e-14, epsrel=1e-12, limit=200)
    right, _ = integrate.quad(f, u, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return min(max(left + right, 0.0), 1.0)


def _sep_psk_sector(alpha: float, M: int) -> float:
    # error iff the angle of (1 - alpha Gc) leaves (-pi/M, pi/M); projection onto a
    # disk or the identity keeps the angle and theta > 0 only rescales
    t = math.tan(math.pi / M)
    u = 1.0 / alpha

    def f(g):
        return norm.pdf(g) * 2.0 * special.ndtr(-t * (u - g))

    inside, _ = integrate.quad(f, -np.inf, u, epsabs=1e-14, epsrel=1e-12, limit=200)
    return min(max(special.ndtr(-u) + inside, 0.0), 1.0)


def _pam_cells(levels):
    mids = 0.5 * (levels[1:] + levels[:-1])
    lo = np.concatenate(([-np.inf], mids))
    hi = np.concatenate((mids, [np.inf]))
    return lo, hi


def _sep_qam_separable(levels, theta, alpha, halfwidth):
    lo, hi = _pam_cells(levels)
    c = halfwidth
    p_ok = np.zeros(len(levels))
    for i, a in enumerate(levels):
        if c <= lo[i] or -c >= hi[i]:
            continue
        L = -np.inf if -c > lo[i] else lo[i]
        H = np.inf if c < hi[i] else hi[i]
        mu, s = theta * a, theta * alpha
        p_ok[i] = special.ndtr((mu - L) / s) - special.ndtr((mu - H) / s)
    ok = float(np.mean(p_ok))
    return min(max(1.0 - ok * ok, 0.0), 1.0)


def _sep_qmc(p: PredictorParams, theta: float, alpha: float, log2_points: int = QMC_LOG2_POINTS) -> float:
    c, v = p.constellation, p.relaxation
    u = qmc.Sobol(d=2, scramble=True, seed=12345).random_base2(log2_points)
    u = np.clip(u, 1e-16, 1 - 1e-16)
    g = special.ndtri(u[:, 0]) + 1j * special.ndtri(u[:, 1])
    errors = 0
    chunk = 1 << 15
    for k, s0 in enumerate(c.points):
        for start in range(0, g.size, chunk):
            z = v.project(theta * (s0 - alpha * g[start:start + chunk]))
            d = np.abs(z[:, None] - c.points)
            own = d[:, k].copy()
            d[:, k] = np.inf
            errors += int(np.count_nonzero(~(own < d.min(axis=1))))
    return errors / (g.size * c.M)


def sep_method_for(p: PredictorParams) -> str:
    c, v = p.constellation, p.relaxation
    if (c.kind == "psk" and v.preserves_phase) or (c.kind == "qam" and v.separable):
        return "quadrature"
    return "monte_carlo"


def predict_sep_generic(s: SaddleSolution, p: PredictorParams, method: str = "auto") -> float:
    """Limiting SEP: probability the projected scalar estimate leaves its cell.

    Exact one-dimensional reductions are used where the geometry allows
    (phase-preserving relaxation with PSK, coordinatewise relaxation with
    QAM); otherwise a scrambled Sobol estimate with 2^20 points per symbol.
    """
    theta = s.theta(p.zeta)
    alpha = s.alpha_star
    if method == "auto":
        method = sep_method_for(p)
    c, v = p.constellation, p.relaxation
    if method == "quadrature":
        if c.kind == "psk" and v.preserves_phase:
            return _sep_psk_sector(alpha, c.M)
        if c.kind == "qam" and v.separable:
            hw = v.halfwidth if v.kind == "box" else np.inf
            return _sep_qam_separable(c.pam_levels, theta, alpha, hw)
        raise ValueError(f"no quadrature reduction for {c.name} with {v.kind} relaxation")
    if method == "monte_carlo":
        return _sep_qmc(p, theta, alpha)
    raise ValueError(f"unknown SEP method {method!r}")


def predict(p: PredictorParams, sep_method: str = "auto") -> Prediction:
    """Solve the saddle problem and evaluate both limiting metrics.

    ``sep_method`` is ``"auto"``, ``"quadrature"``, ``"monte_carlo"`` or
    ``"closed_form_psk"``.
    """
    sol = solve_saddle(p)
    raw = 2.0 * p.kappa * sol.alpha_star ** 2 - p.sigma_sq
    mse = predict_mse(sol, p)
    if sep_method == "closed_form_psk":
        if p.constellation.kind != "psk":
            raise ConfigurationError("closed_form_psk SEP needs a PSK constellation")
        sep = predict_sep_psk(sol.alpha_star, p.constellation.M)
        used = "closed_form_psk"
    else:
        used = sep_method_for(p) if sep_method == "auto" else sep_method
        sep = predict_sep_generic(sol, p, used)
    return Prediction(mse, sep, sol, used, mse_clamped=raw < 0)


def _metric(p: PredictorParams, metric: str) -> float:
    sol = solve_saddle(p)
    if metric == "mse":
        return predict_mse(sol, p)
    if metric == "sep":
        return predict_sep_generic(sol, p)
    raise ValueError(f"metric must be 'mse' or 'sep', got {metric!r}")


def optimal_zeta(p: PredictorParams, metric: str = "mse", zeta_range=(0.0, 2.0),
                 rel_tol: float = 1e-4) -> ZetaOptimum:
    """Minimize the predicted metric over the regularizer on ``zeta_range``.

    Golden-section over the range, compared against both endpoints.  The
    minimum is called interior when it lies more than 1% of the range
    away from both ends.
    """
    lo, hi = float(zeta_range[0]), float(zeta_range[1])
    if lo < 0 or hi < lo:
        raise ConfigurationError("zeta_range must satisfy 0 <= lo <= hi")
    probes: dict = {}

    def f(z):
        if z not in probes:
            try:
                probes[z] = _metric(replace(p, zeta=z), metric)
            except SaddleError as e:
                e.zeta = z
                raise SaddleError(f"{e} (at zeta={z:g})", e.best, z) from e
        return probes[z]

    if hi == lo:
        return ZetaOptimum(lo, f(lo), False, metric, probes)
    width = hi - lo
    res = golden_section(f, lo, hi, rel_tol * width)
    cands = [(f(lo), lo), (f(hi), hi), (res.fx, res.x)]
    val, z = min(cands)
    interior = (z - lo) > EDGE_FRACTION * width and (hi - z) > EDGE_FRACTION * width
    return ZetaOptimum(z, val, interior, metric, probes)
