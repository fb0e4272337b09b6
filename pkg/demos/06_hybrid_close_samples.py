"""Clustered samples and the hybrid Kingman continuation.

Individuals sampled close together coalesce rapidly while their lines are
still clustered (the scattering phase). Once the survivors are mutually
farther apart than a handoff distance, the slow collecting phase is
well approximated by a non-spatial Kingman coalescent with pair rate pi/s_L,
which is orders of magnitude cheaper to simulate.
"""

import time

import numpy as np

from toruscoal import (
    CoalescentState,
    LabeledPartition,
    TorusSpec,
    default_mutation_rate,
    hybrid_run,
    run_until,
)
from toruscoal.mutation import Spectrum, mean_spectrum

torus = TorusSpec(49)
theta = default_mutation_rate(torus)
threshold = 8.33
reps = 300

for name, sites in (
    ("close (3x3, spacing 1)", [(i, j) for i in range(3) for j in range(3)]),
    ("same site", [(0, 0)] * 9),
):
    rng = np.random.default_rng(40)
    init = LabeledPartition.singletons(9, sites)
    counts, used, spectra = [], [], []
    t0 = time.perf_counter()
    for _ in range(reps):
        spectrum, info = hybrid_run(init, "bs", threshold, torus, theta, rng)
        counts.append(info.n_blocks)
        used.append(info.used)
        spectra.append(spectrum)
    hybrid_s = (time.perf_counter() - t0) / reps

    rng = np.random.default_rng(41)
    t0 = time.perf_counter()
    full_spectra = []
    for _ in range(reps // 3):
        state = CoalescentState(init, "bs", torus, mutation_rate=theta, rng=rng)
        run_until(state, nblocks=0, log=False)
        full_spectra.append(Spectrum.from_kill_tallies(state.spectrum_counts, 9))
    full_s = (time.perf_counter() - t0) / (reps // 3)

    mean_h, _ = mean_spectrum(spectra)
    mean_f, _ = mean_spectrum(full_spectra)
    print(f"\n{name}: mean blocks at handoff {np.mean(counts):.2f}, "
          f"approximation used in {100 * np.mean(used):.0f}% of runs")
    print(f"  wall clock per replicate: full spatial {1e3 * full_s:.2f} ms, "
          f"hybrid {1e3 * hybrid_s:.2f} ms ({full_s / hybrid_s:.0f}x faster)")
    print("  mean spectrum, full spatial: " + " ".join(f"{x:5.2f}" for x in mean_f))
    print("  mean spectrum, hybrid:       " + " ".join(f"{x:5.2f}" for x in mean_h))
