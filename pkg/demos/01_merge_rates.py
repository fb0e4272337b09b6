"""Coalescence measures and the merge rates they induce.

A finite measure on [0,1] assigns every k-subset of b co-located ancestral
lines the merge rate  lam(b,k) = atom * 1{k=2} + int z^(k-2) (1-z)^(b-k) dens(z) dz.
The atom at zero is the binary-merger (Kingman) part; density mass near 1
drives large multiple mergers.
"""

import numpy as np

from toruscoal import LambdaMeasure

measures = {
    "kingman (atom at 0)": LambdaMeasure.kingman(),
    "uniform on [0,1]": LambdaMeasure.uniform(1.0),
    "beta(2, 3)": LambdaMeasure.beta(2.0, 3.0),
    "point mass at 1": LambdaMeasure.point_mass(1.0),
}

print("merge rates lam(b, k) for b = 5\n")
header = "measure".ljust(22) + "".join(f"k={k}".rjust(10) for k in range(2, 6))
print(header)
for name, m in measures.items():
    row = name.ljust(22) + "".join(f"{m.merge_rate(5, k):10.4f}" for k in range(2, 6))
    print(row)

print("\ntotal merge rate with b co-located blocks")
print("b".rjust(4) + "".join(name.rjust(22) for name in measures))
for b in range(2, 10):
    print(f"{b:4d}" + "".join(f"{m.total_merge_rate(b):22.4f}" for m in measures.values()))

# the rates of any exchangeable coalescent satisfy the consistency recursion
# lam(b, k) = lam(b+1, k) + lam(b+1, k+1): removing an unseen line cannot
# change the law of the sample
print("\nconsistency recursion residuals (should all be ~0):")
for name, m in measures.items():
    worst = max(
        abs(m.merge_rate(b, k) - m.merge_rate(b + 1, k) - m.merge_rate(b + 1, k + 1))
        for b in range(2, 15)
        for k in range(2, b + 1)
    )
    print(f"  {name:22s} {worst:.2e}")

# sampling a merger: k is chosen proportional to C(b,k) lam(b,k)
from toruscoal import sample_merge

rng = np.random.default_rng(0)
bs = LambdaMeasure.uniform(1.0)
draws = [sample_merge(bs, 3, rng)[0] for _ in range(100_000)]
print(f"\nuniform measure, b=3: observed P(k=3) = {np.mean([k == 3 for k in draws]):.4f}"
      f" (exact 1/4)")
