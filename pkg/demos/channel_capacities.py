"""Capacities of the channel families, closed form against Blahut-Arimoto.

Run: python3 demos/channel_capacities.py
"""
import numpy as np

from subclass_kd.capacity import blahut_arimoto, capacity_z, closed_form_capacity
from subclass_kd.entropy_channel import (
    ChannelMatrix,
    classify_channel,
    make_bac,
    make_qary_symmetric,
    make_z,
    random_symmetric_channel,
)

# A teacher's confusion matrix is a channel from true labels to predictions.
# Each family below has a closed-form capacity; the iterative maximizer is the
# independent check.
channels = {
    "noisy Z (class 0 never missed)": make_z(0.94),
    "asymmetric binary": make_bac(0.94, 0.89),
    "4-way symmetric": make_qary_symmetric(4, 0.86),
    "random strongly symmetric": random_symmetric_channel(5, np.random.default_rng(0)),
    "no structure": ChannelMatrix(np.array([[0.2, 0.5, 0.3], [0.1, 0.1, 0.8], [0.6, 0.3, 0.1]])),
}

print(f"{'channel':<32} {'kind':<26} {'closed form':>12} {'iterative':>12}")
for name, m in channels.items():
    kind = classify_channel(m)
    closed = closed_form_capacity(m, kind)
    it = blahut_arimoto(m)
    cf = f"{closed.capacity:.6f}" if closed else "-"
    print(f"{name:<32} {str(kind):<26} {cf:>12} {it.capacity:>12.6f}")

# For the Z-channel the optimal share of the error-prone input never exceeds
# one half and sinks towards 1/e as that input becomes unreliable.
print()
print("Z-channel optimal input on the unreliable class:")
for p1 in (1.0, 0.9, 0.5, 0.2, 0.1, 0.01, 1e-6):
    print(f"  p1 = {p1:<8g} alpha* = {capacity_z(p1).alpha_star:.6f}")
print(f"  limit 1/e = {np.exp(-1):.6f}")
