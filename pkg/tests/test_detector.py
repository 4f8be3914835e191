import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcrmimo.constellation import Constellation, InputError
from rcrmimo.detector import (
    DetectorError,
    SolverSettings,
    detect,
    lipschitz_constant,
    rcr_solve,
    rls_solve,
)
from rcrmimo.relaxation import RelaxationSet, default_for
from rcrmimo.simulate import gen_channel

PSK16 = Constellation.from_name("psk16")
QAM16 = Constellation.from_name("qam16")


def instance(rng, c, m, n, sigma=0.0):
    H = gen_channel(rng, m, n)
    s0 = c.sample(rng, n)
    v = math.sqrt(sigma / 2) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return H, s0, H @ s0 + v


@pytest.mark.parametrize("c", [PSK16, QAM16])
def test_noiseless_recovery(c):
    rng = np.random.default_rng(1)
    H, s0, r = instance(rng, c, 64, 32)
    out = detect(H, r, 0.0, default_for(c), c)
    assert out.converged
    assert np.max(np.abs(out.s_hat - s0)) < 1e-6
    assert np.array_equal(out.s_star, s0)


def test_huge_regularizer_gives_zero_and_tie_rule():
    rng = np.random.default_rng(2)
    H, s0, r = instance(rng, QAM16, 40, 20, 0.1)
    out = detect(H, r, 1e6, default_for(QAM16), QAM16)
    assert np.max(np.abs(out.s_hat)) < 1e-4
    inner = QAM16.points[np.abs(QAM16.points) < 0.5]
    assert np.all(np.isin(out.s_star, inner))
    # an exact tie at the origin goes to the lowest index
    z = QAM16.hard_decide(np.zeros(3, dtype=complex))
    assert np.all(z == QAM16.points[min(QAM16.index_of(p) for p in inner)])
    assert np.all(PSK16.hard_decide(np.zeros(3, dtype=complex)) == PSK16.points[0])


def test_rcr_matches_rls_without_constraint():
    rng = np.random.default_rng(3)
    H, _, r = instance(rng, QAM16, 60, 30, 0.2)
    a = rcr_solve(H, r, 0.3, RelaxationSet.unconstrained(), SolverSettings(rel_tol=1e-12, max_iters=100000))
    b = rls_solve(H, r, 0.3)
    assert np.max(np.abs(a.s_hat - b.s_hat)) < 1e-8


def test_rls_square_channel_inverts():
    rng = np.random.default_rng(4)
    H, _, r = instance(rng, PSK16, 12, 12, 0.1)
    out = rls_solve(H, r, 0.0)
    assert np.allclose(out.s_hat, np.linalg.solve(H, r), atol=1e-8)


def test_rls_requires_tall_channel():
    rng = np.random.default_rng(5)
    H, _, r = instance(rng, PSK16, 5, 8, 0.1)
    with pytest.raises(DetectorError):
        rls_solve(H, r, 0.0)
    with pytest.raises(InputError):
        rcr_solve(H, r, 0.0, RelaxationSet.unconstrained())
    assert rls_solve(H, r, 0.1).converged


@pytest.mark.parametrize("c", [PSK16, QAM16])
def test_monotone_descent_and_feasibility(c):
    rng = np.random.default_rng(6)
    H, _, r = instance(rng, c, 50, 40, 0.3)
    v = default_for(c)
    out = rcr_solve(H, r, 0.05, v, SolverSettings(track_objective=True))
    tr = np.array(out.objective_trace)
    assert np.all(np.diff(tr) <= 1e-12 * (1 + np.abs(tr[1:])))
    assert np.all(v.contains(out.s_hat))
    assert out.converged
    assert out.kkt_residual < 10 * 1e-9 * (1 + np.linalg.norm(out.s_hat))


def test_lipschitz_estimate():
    rng = np.random.default_rng(7)
    H = gen_channel(rng, 30, 20)
    top = np.linalg.eigvalsh(H.conj().T @ H)[-1]
    assert lipschitz_constant(H) == pytest.approx(top, rel=1e-6)


def test_scaling_consistency():
    # scaling H and r by c and zeta by c^2 leaves the minimizer unchanged
    rng = np.random.default_rng(8)
    H, _, r = instance(rng, QAM16, 40, 20, 0.2)
    v = default_for(QAM16)
    s = SolverSettings(rel_tol=1e-12, max_iters=100000)
    a = rcr_solve(H, r, 0.1, v, s).s_hat
    b = rcr_solve(3 * H, 3 * r, 0.9, v, s).s_hat
    assert np.max(np.abs(a - b)) < 1e-8


@pytest.mark.parametrize("bad", [
    lambda H, r: (H[:, :, None], r),
    lambda H, r: (H, r[:-1]),
    lambda H, r: (H, np.where(np.arange(r.size) == 0, np.nan, r)),
])
def test_input_validation(bad):
    rng = np.random.default_rng(9)
    H, _, r = instance(rng, PSK16, 8, 4)
    H2, r2 = bad(H, r)
    with pytest.raises(InputError):
        rcr_solve(H2, r2, 0.1, RelaxationSet.disk())


def test_negative_zeta_rejected():
    rng = np.random.default_rng(10)
    H, _, r = instance(rng, PSK16, 8, 4)
    with pytest.raises(InputError):
        rcr_solve(H, r, -1.0, RelaxationSet.disk())


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), zeta=st.floats(0.0, 2.0))
def test_fixed_point_property(seed, zeta):
    rng = np.random.default_rng(seed)
    H, _, r = instance(rng, PSK16, 16, 8, 0.5)
    v = RelaxationSet.disk()
    out = rcr_solve(H, r, zeta, v)
    # no feasible point nearby does better
    for _ in range(5):
        d = 1e-3 * (rng.standard_normal(8) + 1j * rng.standard_normal(8))
        t = v.project(out.s_hat + d)
        res = H @ t - r
        f = 0.5 * np.vdot(res, res).real + 0.5 * zeta * np.vdot(t, t).real
        assert f >= out.final_objective - 1e-9
