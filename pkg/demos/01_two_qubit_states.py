"""Two basis states that only differ on an unmeasured qubit.

With gates H on qubit 0 and CNOT, the difference on qubit 1 never
reaches the measured qubit 0. Adding H on qubit 1 changes that, but
only experiments of size 5 or more can see it.
"""

from qmealy import Experiment, check_states, run_experiment
from qmealy.circuits import build_state, example1_machine
from qmealy.oracle import brute_force_equiv

spec, m = example1_machine()
s, t = build_state(spec, "00"), build_state(spec, "01")
v = check_states(m, s, t)
print("gates", m.inputs, "->", "equivalent" if v.equivalent else "not equivalent")
print("  basis grew as", v.basis_sizes, "against a bound of", v.bound)

spec, mp = example1_machine(prime=True)
print("gates", mp.inputs)
for size in (3, 4, 5):
    small = brute_force_equiv(mp, s, t, size)
    print(f"  every experiment of size <= {size}:", "same" if small.equivalent else f"differs at {small.witness}")

v = check_states(mp, s, t)
print("  checker witness:", v.witness, f"p_s={v.prob_s:.3f} p_t={v.prob_t:.3f}")

e = Experiment(("H1", "H2", "C", "H1"), (4,), ("0",))
print("  replay", e, "->", run_experiment(mp, s, e).probability, run_experiment(mp, t, e).probability)
