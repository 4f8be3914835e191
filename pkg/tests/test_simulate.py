import math
from dataclasses import replace

import numpy as np
import pytest

from rcrmimo.constellation import ConfigurationError, Constellation
from rcrmimo.relaxation import RelaxationSet, default_for
from rcrmimo.simulate import (
    ScenarioParams,
    gen_channel,
    gen_noise,
    run_scenario,
    run_trial,
    splitmix64,
    sweep,
    trial_seed,
)

PSK16 = Constellation.from_name("psk16")
QAM16 = Constellation.from_name("qam16")


def scenario(c=PSK16, **kw):
    kw.setdefault("n", 32)
    kw.setdefault("trials", 6)
    return ScenarioParams(c, default_for(c), **kw)


def test_splitmix_reference_values():
    # first outputs of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4
    assert trial_seed(5, 1) != trial_seed(5, 2)


def test_channel_moments():
    rng = np.random.default_rng(0)
    n = 10
    H = gen_channel(rng, 10**5, n).ravel()
    N = H.size
    assert abs(np.mean(np.abs(H) ** 2) * n - 1) < 4 * math.sqrt(2 / N) + 1e-3
    assert abs(H.mean()) < 4 / math.sqrt(n * N)
    assert abs(np.mean(H.real * H.imag)) * n < 4 * 0.5 / math.sqrt(N)
    assert abs(np.mean(H.real ** 2) - np.mean(H.imag ** 2)) * n < 4 * math.sqrt(2 / N)


def test_noise_moments():
    rng = np.random.default_rng(1)
    v = gen_noise(rng, 10**6, 0.25)
    assert abs(np.mean(np.abs(v) ** 2) - 0.25) < 4 * 0.25 / math.sqrt(10**6)
    assert abs(np.mean(v.real * v.imag)) < 4 * 0.125 / math.sqrt(10**6)
    with pytest.raises(ConfigurationError):
        gen_noise(rng, 3, 0.0)


def test_trial_reproducible():
    p = scenario()
    assert run_trial(p, 3) == run_trial(p, 3)
    assert run_trial(p, 3) != run_trial(p, 4)
    assert run_trial(replace(p, master_seed=1), 3) != run_trial(p, 3)


@pytest.mark.parametrize("c", [PSK16, QAM16])
def test_near_noiseless_trial(c):
    p = scenario(c, snr_db=120.0, n=64)
    t = run_trial(p, 0)
    assert t.mse < 1e-9 and t.ser == 0.0 and t.converged


def test_single_trial_stderr_zero():
    agg = run_scenario(scenario(trials=1))
    assert agg.mse_stderr == 0.0 and agg.ser_stderr == 0.0 and agg.trials_used == 1


def test_thread_count_independent():
    p = scenario(QAM16, snr_db=5.0, zeta=0.1, trials=8)
    a = run_scenario(p, threads=1)
    b = run_scenario(p, threads=4)
    assert (a.mse_mean, a.mse_stderr, a.ser_mean, a.ser_stderr) == (b.mse_mean, b.mse_stderr, b.ser_mean, b.ser_stderr)


def test_received_energy():
    rng = np.random.default_rng(2)
    n, m = 64, 128
    e = []
    for _ in range(200):
        H = gen_channel(rng, m, n)
        s0 = QAM16.sample(rng, n)
        e.append(np.linalg.norm(H @ s0) ** 2 / m)
    assert abs(np.mean(e) - 1) < 4 * np.std(e) / math.sqrt(len(e))


def test_scenario_validation():
    with pytest.raises(ConfigurationError):
        scenario(n=0)
    with pytest.raises(ConfigurationError):
        scenario(zeta=-1.0)
    with pytest.raises(ConfigurationError):
        scenario(kappa=0.001, n=4)
    with pytest.raises(ConfigurationError):
        ScenarioParams(QAM16, RelaxationSet.disk(0.5))


def test_realized_kappa():
    p = scenario(kappa=1.5, n=3)
    assert p.m == 5 and p.kappa_realized == pytest.approx(5 / 3)


def test_sweep_matches_single_points():
    base = scenario(trials=4)
    pts = sweep(base, "snr_db", [0.0, 10.0])
    assert [p.value for p in pts] == [0.0, 10.0]
    for pt in pts:
        assert pt.error is None
        assert pt.aggregate.mse_mean == run_scenario(replace(base, snr_db=pt.value)).mse_mean
        assert 0 <= pt.aggregate.ser_mean <= 1
        assert pt.prediction.mse > 0
    with pytest.raises(ConfigurationError):
        sweep(base, "kappa", [1.0])


def test_sweep_records_point_errors(monkeypatch):
    import rcrmimo.simulate as sim

    def boom(*a, **k):
        raise RuntimeError("nope")

    monkeypatch.setattr(sim, "predict", boom)
    pts = sweep(scenario(trials=2), "zeta", [0.0, 0.1])
    assert all("predict: nope" in p.error and p.aggregate is not None for p in pts)
