"""
Qubit transfer between two emitters through a unidirectional channel.

Constant couplings leave most of the excitation behind; mirrored pulse
shapes push the fidelity close to one.
"""

import math

from chiralwg import protocols

t, p = protocols.peak_transfer(1.0, 10.0)
print(f"constant rates: best transfer probability {p:.4f} at t = {t:.3f} (4/e^2 = {4 * math.exp(-2):.4f})")

pulse = protocols.optimize_pulse(t_final=30.0, cap=1.0)
print(f"optimized pulse: kappa={pulse.kappa:.4f} t_center={pulse.t_center:.3f} delay={pulse.delay:.4f}")

c_g, c_e = math.sqrt(0.5), math.sqrt(0.5)
for loss in (0.0, 0.01, 0.05):
    r = protocols.state_transfer(c_g, c_e, pulse, t_final=30.0, loss=loss)
    print(f"loss {loss:5.2f}: fidelity {r.fidelity:.6f}  transfer probability {r.transfer_probability:.6f}")
