"""Bell states that a single measurement cannot separate but two can."""

import itertools

from qmealy import Experiment, check_states_k, run_experiment
from qmealy.circuits import build_state, example2_machine

spec, m = example2_machine()
s, t = build_state(spec, "bell00"), build_state(spec, "bell10")

for k in range(4):
    v = check_states_k(m, s, t, k)
    print(f"k={k}:", "equivalent" if v.equivalent else f"separated by {v.witness}")

print("\noutcome table for H S H with measurements after steps 1 and 3")
for outs in itertools.product(m.outputs, repeat=2):
    e = Experiment(("H", "S", "H"), (1, 3), outs)
    ps = run_experiment(m, s, e).raw_probability
    pt = run_experiment(m, t, e).raw_probability
    print(f"  outcomes {''.join(outs)}: {ps:.3f} vs {pt:.3f}")
