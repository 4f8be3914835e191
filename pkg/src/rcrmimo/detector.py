"""RCR estimation step, hard decisions, and the unconstrained RLS baseline.

The estimate minimizes ``0.5 ||H s - r||^2 + 0.5 zeta ||s||^2`` over the
product set V^n with a fixed-step projected gradient method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .constellation import Constellation, InputError
from .relaxation import RelaxationSet


class DetectorError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSettings:
    max_iters: int = 10000
    rel_tol: float = 1e-9
    power_iters: int = 50
    step_fraction: float = 0.99
    track_objective: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class DetectionOutcome:
    s_hat: np.ndarray
    iterations: int
    final_objective: float
    kkt_residual: float
    converged: bool
    s_star: np.ndarray | None = None
    objective_trace: list = field(default_factory=list, repr=False)


def rcr_objective(H, r, zeta, s) -> float:
    res = H @ s - r
    return 0.5 * float(np.vdot(res, res).real) + 0.5 * zeta * float(np.vdot(s, s).real)


def _check_inputs(H, r, zeta):
    H = np.asarray(H, dtype=complex)
    r = np.asarray(r, dtype=complex)
    if H.ndim != 2 or r.ndim != 1 or H.shape[0] != r.shape[0]:
        raise InputError(f"dimension mismatch: H {H.shape}, r {r.shape}")
    if not zeta >= 0:
        raise InputError("zeta must be nonnegative")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(r))):
        raise InputError("H and r must be finite")
    return H, r


def lipschitz_constant(H: np.ndarray, iters: int = 50) -> float:
    """Largest eigenvalue of H^H H by power iteration from a fixed start."""
    x = np.ones(H.shape[1], dtype=complex) / math.sqrt(H.shape[1])
    lam = 0.0
    for _ in range(iters):
        y = H.conj().T @ (H @ x)
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
    return lam


def rcr_solve(H, r, zeta: float, v: RelaxationSet, settings: SolverSettings = SolverSettings()) -> DetectionOutcome:
    """Projected gradient on the regularized least-squares cost over V^n.

    Starts at zero; stops once the iterate change relative to the iterate
    norm drops below ``settings.rel_tol``.
    """
    H, r = _check_inputs(H, r, zeta)
    m, n = H.shape
    if zeta == 0 and v.kind == "none" and m < n:
        raise InputError("unregularized unconstrained problem needs m >= n")
    L = lipschitz_constant(H, settings.power_iters) + zeta
    mu = settings.step_fraction / L if L > 0 else 1.0
    Hh = H.conj().T
    Hr = Hh @ r
    s = np.zeros(n, dtype=complex)
    trace = []
    if settings.track_objective:
        trace.append(rcr_objective(H, r, zeta, s))
    converged = False
    it = 0
    while it < settings.max_iters:
        it += 1
        grad = Hh @ (H @ s) - Hr + zeta * s
        s_new = v.project(s - mu * grad)
        step = np.linalg.norm(s_new - s)
        s = s_new
        if settings.track_objective:
            trace.append(rcr_objective(H, r, zeta, s))
        if step <= settings.rel_tol * np.linalg.norm(s):
            converged = True
            break
    grad = Hh @ (H @ s) - Hr + zeta * s
    kkt = float(np.linalg.norm(s - v.project(s - mu * grad)) / math.sqrt(n))
    return DetectionOutcome(s, it, rcr_objective(H, r, zeta, s), kkt, converged, objective_trace=trace)


def rls_solve(H, r, zeta: float, settings: SolverSettings = SolverSettings()) -> DetectionOutcome:
    """Regularized least squares via the normal equations (no constraint set)."""
    H, r = _check_inputs(H, r, zeta)
    m, n = H.shape
    if zeta == 0 and m < n:
        raise DetectorError("RLS with zeta = 0 needs m >= n")
    A = H.conj().T @ H + zeta * np.eye(n)
    b = H.conj().T @ r
    try:
        s = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), b)
    except np.linalg.LinAlgError as e:
        raise DetectorError("normal equations are singular") from e
    if not np.all(np.isfinite(s)):
        raise DetectorError("normal equations are singular")
    grad = A @ s - b
    kkt = float(np.linalg.norm(grad) / math.sqrt(n))
    return DetectionOutcome(s, 1, rcr_objective(H, r, zeta, s), kkt, True)


def detect(H, r, zeta: float, v: RelaxationSet, c: Constellation,
           settings: SolverSettings = SolverSettings()) -> DetectionOutcome:
    """Relaxed estimate followed by per-entry nearest-symbol decisions."""
    out = rls_solve(H, r, zeta, settings) if v.kind == "none" else rcr_solve(H, r, zeta, v, settings)
    out.s_star = c.hard_decide(out.s_hat)
    return out
