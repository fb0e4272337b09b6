"""The torus walk, its mixing behaviour, and the time scale s_L.

Each ancestral line's label performs a rate-1 simple random walk on the
torus [-L, L]^2 (each neighbour at rate 1/4). The coalescence analysis runs
on the time scale s_L = (2L+1)^2 log(2L+1): walks mix well before typical
meetings, which is what makes distant lines exchangeable.
"""

import math

import numpy as np

from toruscoal import TorusSpec, transient_distribution

for L in (1, 2, 5, 49):
    spec = TorusSpec(L)
    print(f"L = {L:3d}: side {spec.side:4d}, sites {spec.n_sites:6d}, "
          f"s_L = {spec.time_scale():12.1f}")

print("\nsup-norm distance from uniform at t = loglog(side) * side^2:")
for L in (1, 2, 5, 10):
    spec = TorusSpec(L)
    side = spec.side
    t = math.log(math.log(side + 1)) * side**2
    dist = transient_distribution(spec, (0, 0), t)
    dev = np.abs(dist - 1 / spec.n_sites).max() * spec.n_sites
    print(f"  L = {L:3d}: t = {t:10.1f}, relative deviation {dev:.3e}")

# short-time picture: the walk spreads diffusively from its start
spec = TorusSpec(3)
for t in (0.0, 0.5, 2.0, 10.0):
    dist = transient_distribution(spec, (0, 0), t)
    print(f"\nP(site) at t = {t} (rows x = -3..3, columns y = -3..3):")
    for row in dist:
        print("  " + " ".join(f"{p:6.3f}" for p in row))
