"""
Constellations, relaxation sets and hard decisions
==================================================

A short tour of the symbol alphabets and the convex sets the detector
optimizes over.
"""

# %%
# Alphabets are normalized to unit average energy.
import numpy as np

from rcrmimo import Constellation, RelaxationSet, default_for

for name in ("psk4", "psk16", "qam16", "qam64"):
    c = Constellation.from_name(name)
    print(f"{name:6s} M={c.M:3d}  mean |x|^2 = {np.mean(np.abs(c.points) ** 2):.3f}")

# %%
# Each alphabet has a natural relaxation: the unit disk for PSK and the
# smallest square box for QAM.
qam = Constellation.from_name("qam16")
box = default_for(qam)
print(box, "covers qam16:", bool(np.all(box.contains(qam.points))))

# %%
# Projection onto the set is what the detector iterates.  Points inside
# are left alone.
z = np.array([0.1 + 0.2j, 2.0 - 3.0j, -5.0 + 0.5j])
print("box  :", box.project(z))
print("disk :", RelaxationSet.disk().project(z))

# %%
# Hard decisions map each relaxed estimate to its nearest symbol.
rng = np.random.default_rng(0)
s = qam.sample(rng, 5)
noisy = s + 0.1 * (rng.standard_normal(5) + 1j * rng.standard_normal(5))
print("sent    :", s)
print("decided :", qam.hard_decide(noisy))
