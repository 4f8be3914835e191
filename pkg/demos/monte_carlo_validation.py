"""
Monte-Carlo check of the prediction
===================================

Run the detector on random channels at n = 128 and set the empirical
MSE and symbol error rate next to the prediction.
"""

# %%
from rcrmimo import Constellation, ScenarioParams, default_for, predict, run_scenario

qam = Constellation.from_name("qam16")

# %%
# 20 trials per point keeps this fast; the acceptance suite uses 50.
for snr in (0.0, 5.0, 10.0):
    p = ScenarioParams(qam, default_for(qam), kappa=2.0, snr_db=snr, zeta=0.0, n=128, trials=20)
    agg = run_scenario(p)
    pr = predict(p.predictor_params())
    print(f"snr {snr:4.1f}: mse {agg.mse_mean:.4f} +- {agg.mse_stderr:.4f} (pred {pr.mse:.4f}), "
          f"ser {agg.ser_mean:.4f} +- {agg.ser_stderr:.4f} (pred {pr.sep:.4f})")

# %%
# The same seed always gives the same numbers, whatever the thread count.
a = run_scenario(p, threads=1)
b = run_scenario(p, threads=2)
print("identical across threads:", a.mse_mean == b.mse_mean)
