import numpy as np
import pytest

from qmealy.circuits import example1_machine
from qmealy.generators import basis_change_pair, perturb_unitary, random_density, random_machine
from qmealy.minimise import (
    MAX_DEGREE,
    construct_witness,
    encode_problem1,
    encode_problem2,
    evaluate_terms,
    lift,
    parse_system_text,
    trace_vector,
    unvectorize,
    vectorize,
    verify_assignment,
)
from qmealy.model import QuantumMealyMachine, direct_sum, embed_states
from qmealy.oracle import brute_force_equiv

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def expected_counts(n_in, n_out, k, n1, d):
    """Hand count of the problem-2 encoding (real variables and equations)."""
    size = n1 * n1 + d * d
    variables = 2 * ((n_in + n_out + 2) * d * d + (k + 1) * size ** 2
                     + n_in * (k + 1) * size ** 2 + n_out * k * size ** 2)
    constraints = (2 * size + 2 * size * (k + 1) + 2 * size ** 2 * n_in * (k + 1)
                   + 2 * size ** 2 * n_out * k + n_in * d * d + d * d + 2 * d * d + 2)
    return variables, constraints


def test_vectorize_examples():
    np.testing.assert_array_equal(vectorize(np.eye(2)), [1, 0, 0, 1])
    np.testing.assert_array_equal(vectorize(np.array([[0, 1], [0, 0]])), [0, 1, 0, 0])
    rho = np.random.default_rng(0).normal(size=(3, 3))
    np.testing.assert_array_equal(unvectorize(vectorize(rho)), rho)
    with pytest.raises(ValueError):
        vectorize(np.ones((2, 3)))
    with pytest.raises(ValueError):
        lift(np.ones((2, 3)))
    with pytest.raises(ValueError):
        unvectorize(np.ones(5))


def test_lift_examples():
    np.testing.assert_array_equal(lift(np.eye(3)), np.eye(9))
    plus = np.full((2, 2), 0.5)
    np.testing.assert_allclose(lift(H) @ vectorize(np.diag([1.0, 0.0])), vectorize(plus))


def test_lift_entries(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    big = lift(m)
    for i, j, x, y in np.ndindex(3, 3, 3, 3):
        assert big[i * 3 + j, x * 3 + y] == pytest.approx(m[i, x] * np.conj(m[j, y]), abs=1e-14)


def test_trace_vector():
    np.testing.assert_array_equal(trace_vector(2), [1, 0, 0, 1])
    a, b = 0.3, 1.7
    assert trace_vector(2).conj() @ vectorize(np.diag([a, b])) == pytest.approx(a + b)
    with pytest.raises(ValueError):
        trace_vector(0)


def test_counts_regression():
    m = random_machine(2, np.random.default_rng(0))
    system = encode_problem2(m, np.diag([1.0, 0.0]), k=2, target_dim=1)
    assert (system.n_variables, system.n_constraints) == (662, 547)
    assert (662, 547) == expected_counts(2, 2, 2, 2, 1)
    assert system.constraint_counts() == {
        "init": 10, "trace": 30, "intertwine": 300, "measure-step": 200,
        "unitarity": 2, "completeness": 1, "density": 2, "trace-one": 2,
    }


def test_example1_problem1_counts():
    spec, m = example1_machine()
    system = encode_problem1(m, np.diag([1.0, 0, 0, 0]), target_dim=3)
    assert (system.n_variables, system.n_constraints) == (6358, 5147)


def test_problem1_smaller_than_problem2():
    m = random_machine(2, np.random.default_rng(1))
    rho = np.diag([1.0, 0.0])
    p1 = encode_problem1(m, rho, 1)
    p2 = encode_problem2(m, rho, (2 + 1) ** 2 - 1, 1)
    assert p1.n_variables < p2.n_variables
    assert p1.n_constraints < p2.n_constraints


def test_more_layers_more_constraints(ex1):
    m, s, _ = ex1
    assert encode_problem2(m, s, 1, 3).n_constraints < encode_problem2(m, s, 3, 3).n_constraints


@pytest.mark.parametrize("target", [0, 4, 5])
def test_target_dim_range(ex1, target):
    m, s, _ = ex1
    with pytest.raises(ValueError):
        encode_problem1(m, s, target)
    with pytest.raises(ValueError):
        encode_problem2(m, s, 1, target)


def test_k_must_be_positive(ex1):
    m, s, _ = ex1
    with pytest.raises(ValueError):
        encode_problem2(m, s, 0, 2)
    with pytest.raises(ValueError):
        construct_witness(m, s, m, s, k=0)


@pytest.mark.parametrize("k", [None, 1, 2])
def test_self_comparison_passes(ex1, k):
    m, s, _ = ex1
    system = encode_problem1(m, s, 4, strict=False) if k is None else encode_problem2(m, s, k, 4, strict=False)
    report = verify_assignment(system, construct_witness(m, s, m, s, k=k))
    assert report.passed, str(report)


def test_identity_machine_self_encoding():
    m = QuantumMealyMachine(["i"], ["0"], [np.eye(2)], [np.eye(2)])
    rho = np.diag([0.25, 0.75])
    system = encode_problem1(m, rho, 2, strict=False)
    assert verify_assignment(system, construct_witness(m, rho, m, rho)).passed


@pytest.mark.parametrize("k", [None, 2])
def test_example1_pair(ex1, ex1_prime, k):
    m, s, t = ex1
    enc = (lambda mm: encode_problem1(mm, s, 4, strict=False)) if k is None else (
        lambda mm: encode_problem2(mm, s, k, 4, strict=False))
    assert verify_assignment(enc(m), construct_witness(m, s, m, t, k=k)).passed
    mp, s, t = ex1_prime
    report = verify_assignment(enc(mp), construct_witness(mp, s, mp, t, k=k))
    if k is None:
        assert not report.passed and "trace" in report.violated


def test_perturbed_machine_violates_trace(ex1):
    m, s, _ = ex1
    other = perturb_unitary(m, 1, 0.3, np.random.default_rng(5))
    system = encode_problem1(m, s, 4, strict=False)
    report = verify_assignment(system, construct_witness(m, s, other, s))
    assert report.violated == ["trace"]


def test_wellformedness_rejects_non_unitary(ex1):
    m, s, _ = ex1
    system = encode_problem1(m, s, 4, strict=False)
    assignment = construct_witness(m, s, m, s)
    assignment["U.C"] = 1.1 * assignment["U.C"]
    assert "unitarity" in verify_assignment(system, assignment).violated


def test_verify_zero_and_random(ex1):
    m, s, _ = ex1
    system = encode_problem1(m, s, 2)
    zeros = {name: np.zeros(shape) for name, shape in system.blocks.items()}
    report = verify_assignment(system, zeros)
    assert not report.passed and "init" in report.violated
    rng = np.random.default_rng(0)
    rand = {name: rng.normal(size=shape) for name, shape in system.blocks.items()}
    assert not verify_assignment(system, rand).passed
    del zeros["rho"]
    with pytest.raises(KeyError):
        verify_assignment(system, zeros)


@pytest.mark.parametrize("problem", [1, 2])
def test_expansion_matches_evaluation(problem):
    rng = np.random.default_rng(problem)
    m = random_machine(2, rng, n_inputs=1, n_outputs=2)
    rho = random_density(2, rng)
    system = encode_problem1(m, rho, 1) if problem == 1 else encode_problem2(m, rho, 1, 1)
    assign = {name: rng.normal(size=shape) + 1j * rng.normal(size=shape)
              for name, shape in system.blocks.items()}
    x = system.flatten(assign)
    expanded = np.array([evaluate_terms(t, x) for _, t in system.equations()])
    assert len(expanded) == system.n_constraints
    np.testing.assert_allclose(expanded, system.residuals(assign), atol=1e-10)
    assert system.max_degree() <= MAX_DEGREE
    parsed = parse_system_text(system.to_text())
    assert parsed.variables == system.variable_names()
    np.testing.assert_allclose(parsed.evaluate(x), expanded, atol=1e-10)
    assert {n: np.allclose(v, assign[n]) for n, v in system.unflatten(x).items()} == {n: True for n in assign}


def test_parse_rejects_bad_text():
    with pytest.raises(ValueError):
        parse_system_text("nope\n")
    with pytest.raises(ValueError):
        parse_system_text("qmm-polysys 1\nvariables 1\nconstraints 0\n")


@pytest.mark.parametrize("seed", range(4))
def test_soundness_random_pairs(seed):
    rng = np.random.default_rng(seed)
    k = 2
    m1, r1, m2, r2, _ = basis_change_pair(2, rng)
    system = encode_problem2(m1, r1, k, 2, strict=False)
    assert verify_assignment(system, construct_witness(m1, r1, m2, r2, k=k)).passed
    joint = direct_sum(m1, m2)
    assert brute_force_equiv(joint, *embed_states(r1, r2), 7, max_measurements=k).equivalent
    bad = perturb_unitary(m2, 0, 0.3, rng)
    assert not verify_assignment(system, construct_witness(m1, r1, bad, r2, k=k)).passed
    assert not brute_force_equiv(direct_sum(m1, bad), *embed_states(r1, r2), 7, max_measurements=k).equivalent
