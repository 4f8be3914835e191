"""
Asymptotic error prediction across SNR
======================================

Solve the scalar saddle problem at each SNR and read off the predicted
MSE and symbol error probability.
"""

# %%
from rcrmimo import Constellation, PredictorParams, default_for, predict

psk = Constellation.from_name("psk16")
qam = Constellation.from_name("qam16")

# %%
# kappa = m / n = 2, no ridge term.
print(" snr   psk16 mse  psk16 sep   qam16 mse  qam16 sep")
for snr in range(-5, 16, 5):
    row = []
    for c in (psk, qam):
        pr = predict(PredictorParams.from_snr_db(2.0, snr, 0.0, c, default_for(c)))
        row += [pr.mse, pr.sep]
    print(f"{snr:4d}  " + "  ".join(f"{x:9.5f}" for x in row))

# %%
# The saddle point itself is available too.  theta is the effective
# shrinkage applied by the ridge term.
p = PredictorParams.from_snr_db(2.0, 10.0, 0.1, qam, default_for(qam))
sol = predict(p).solution
print(f"alpha*={sol.alpha_star:.5f} beta*={sol.beta_star:.5f} theta={sol.theta(p.zeta):.5f}")
