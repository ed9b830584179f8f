"""
Driven cascaded pair: a pure, non-radiating steady state.

When the second emitter's drive matches the light arriving from the first,
the pair settles into a pure dimer state and no photons leave the channel.
Adding backward coupling (ratio > 0) destroys the effect.
"""

import numpy as np

from chiralwg import protocols

m = protocols.match_dimer_drive(rabi=0.5, positions=(0.0, 0.25))
print(f"matched drive phase {m.phase:.4f}, purity {m.purity:.8f}, alpha {m.alpha:.4f}")

phases = np.linspace(0, 2 * np.pi, 16, endpoint=False)
scan = protocols.dimer_scan([0.5], phases, [0.0, 0.25, 1.0], positions=(0.0, 0.25))
for j, ratio in enumerate(scan.axes["ratio"]):
    col = scan.purity[0, :, j]
    print(f"gamma_L/gamma_R = {ratio:4.2f}: max purity {np.nanmax(col):.5f}")
