"""Polynomial constraints for shrinking a machine, checked on a known answer.

The encoder asks for a smaller machine and a linear map F that
intertwines the two. Here the target is the machine itself with a
second initial state, so a satisfying assignment exists exactly when
the two states are equivalent.
"""

from qmealy.circuits import build_state, example1_machine
from qmealy.minimise import construct_witness, encode_problem1, verify_assignment

for prime in (False, True):
    spec, m = example1_machine(prime=prime)
    s, t = build_state(spec, "00"), build_state(spec, "01")
    system = encode_problem1(m, s, m.dimension, strict=False)
    report = verify_assignment(system, construct_witness(m, s, m, t))
    print(f"gates {m.inputs}: {system.n_variables} variables, {system.n_constraints} equations")
    print("  residual by condition:", {c: f"{r:.1e}" for c, r in report.by_condition.items()})
    print("  satisfied" if report.passed else f"  violated: {report.violated}")

spec, m = example1_machine()
small = encode_problem1(m, build_state(spec, "00"), 2)
print("\ntarget dimension 2:", small.n_variables, "variables, max degree", small.max_degree())
print(small.to_text().splitlines()[:6])
