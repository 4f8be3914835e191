"""
Choosing the ridge weight
=========================

The predicted error is cheap to evaluate, so the ridge weight can be
tuned on the scalar problem instead of by simulation.
"""

# %%
import numpy as np

from rcrmimo import Constellation, PredictorParams, RelaxationSet, default_for, optimal_zeta, predict

qam = Constellation.from_name("qam16")

# %%
# Without a constraint set the best weight is the noise variance.
p = PredictorParams.from_snr_db(2.0, 7.0, 0.0, qam, RelaxationSet.unconstrained())
res = optimal_zeta(p, "mse", (0.0, 1.0))
print(f"RLS: zeta* = {res.zeta:.4f}, noise variance = {p.sigma_sq:.4f}")

# %%
# With the box the picture depends on the operating point.  At low SNR
# the curve has an interior minimum; at high SNR it is smallest at zero.
for kappa, snr in [(1.5, 5.0), (1.5, 15.0)]:
    p = PredictorParams.from_snr_db(kappa, snr, 0.0, qam, default_for(qam))
    res = optimal_zeta(p, "mse", (0.0, 1.0), rel_tol=1e-3)
    print(f"kappa={kappa} snr={snr}: zeta*={res.zeta:.4f} mse={res.value:.5f} interior={res.interior}")

# %%
# A coarse look at the whole curve.
p = PredictorParams.from_snr_db(1.5, 5.0, 0.0, qam, default_for(qam))
for z in np.linspace(0.0, 0.5, 6):
    q = PredictorParams(p.kappa, p.sigma_sq, float(z), qam, p.relaxation)
    print(f"  zeta={z:.2f}  mse={predict(q).mse:.5f}")
