"""Two machines related by a change of basis, and what a small rotation does."""

import numpy as np

from qmealy import check_machines, run_experiment
from qmealy.generators import basis_change_pair, perturb_unitary

rng = np.random.default_rng(3)
m1, r1, m2, r2, w = basis_change_pair(3, rng)
v = check_machines(m1, r1, m2, r2)
print("M2 = W M1 W^dagger:", "equivalent" if v.equivalent else "not equivalent", "basis", v.basis_sizes[-1])

for angle in (0.3, 0.1, 0.01, 1e-4):
    bad = perturb_unitary(m2, 0, angle, rng)
    v = check_machines(m1, r1, bad, r2)
    if v.equivalent:
        print(f"rotate by {angle:g} rad: still equivalent")
        continue
    gap = abs(run_experiment(m1, r1, v.witness).raw_probability
              - run_experiment(bad, r2, v.witness).raw_probability)
    print(f"rotate by {angle:g} rad: witness {v.witness} (size {v.witness.size}), gap {gap:.2e}")
