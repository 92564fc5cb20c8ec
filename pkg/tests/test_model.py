import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmealy.generators import random_density, random_machine
from qmealy.model import (
    AlphabetMismatchError,
    DensityOperator,
    Experiment,
    InvalidDensityError,
    InvalidMachineError,
    MalformedExperimentError,
    QuantumMealyMachine,
    Scheduler,
    direct_sum,
    embed_states,
    experiment_operator,
    is_real,
    run_experiment,
    validate_density,
    word_unitary,
)

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
I2 = np.eye(2)
PAPER_EXPERIMENT = Experiment(("H1", "H2", "C", "H1"), (4,), ("0",))


def test_machine_validation_names_symbol():
    with pytest.raises(InvalidMachineError) as exc:
        QuantumMealyMachine(["x", "y"], ["0"], [I2, 2 * I2], [I2])
    assert exc.value.symbol == "y"
    with pytest.raises(InvalidMachineError):
        QuantumMealyMachine(["x"], ["0", "1"], [I2], [I2, I2])


@pytest.mark.parametrize("inputs, outputs", [([], ["0"]), (["a", "a"], ["0"]), (["a"], [])])
def test_alphabets_nonempty_unique(inputs, outputs):
    with pytest.raises(ValueError):
        QuantumMealyMachine(inputs, outputs, [I2] * len(inputs), [I2] * len(outputs))


def test_operators_read_only(ex1):
    m, _, _ = ex1
    with pytest.raises(ValueError):
        m.unitaries[0, 0, 0] = 5


def test_operator_dict_form():
    m = QuantumMealyMachine(["a", "b"], ["0"], {"b": H, "a": I2}, {"0": I2})
    np.testing.assert_array_equal(m.unitary("b"), H)


@pytest.mark.parametrize(
    "rho",
    [
        np.array([[0.5, 0.6], [0.6, 0.5]]),  # negative eigenvalue
        np.eye(2),  # trace 2
        np.array([[0.5, 0.1], [0.2, 0.5]]),  # not Hermitian
        np.ones((2, 3)),
    ],
)
def test_invalid_densities(rho):
    with pytest.raises(InvalidDensityError):
        validate_density(rho)


def test_valid_densities(rng):
    for n in (1, 2, 4):
        for rank in range(1, n + 1):
            DensityOperator(random_density(n, rng, rank=rank))
    d = DensityOperator.from_ket([1, 1j])
    assert d.dimension == 2
    np.testing.assert_allclose(d.matrix, [[0.5, -0.5j], [0.5j, 0.5]])


@pytest.mark.parametrize("points, n, closed", [((), 3, False), ((1, 1, 3), 3, True), ((0,), 2, False), ((2,), 2, True)])
def test_scheduler_closed(points, n, closed):
    assert Scheduler(points).is_closed(n) == closed


@pytest.mark.parametrize("points", [(2, 1), (-1,)])
def test_scheduler_rejects(points):
    with pytest.raises(MalformedExperimentError):
        Scheduler(points)


def test_experiment_shape_checks():
    with pytest.raises(MalformedExperimentError):
        Experiment(("a",), (2,), ("0",))
    with pytest.raises(MalformedExperimentError):
        Experiment(("a",), (1,), ())
    e = Experiment(("a", "b", "c"), (0, 2, 2), ("x", "y", "z"))
    assert e.size == 6
    assert e.segments() == [(), ("a", "b"), (), ("c",)]
    assert e.closure() == Experiment(("a", "b"), (0, 2, 2), ("x", "y", "z"))
    assert Experiment(("a",), (), ()).closure() == Experiment()


def test_word_unitary(ex1):
    m, _, _ = ex1
    np.testing.assert_array_equal(word_unitary(m, ()), np.eye(4))
    np.testing.assert_array_equal(word_unitary(m, ("C",)), m.unitary("C"))
    # H is an involution
    np.testing.assert_allclose(word_unitary(m, ("H1", "H1")), np.eye(4), atol=1e-15)
    # right-to-left composition
    np.testing.assert_allclose(word_unitary(m, ("H1", "C")), m.unitary("C") @ m.unitary("H1"))
    with pytest.raises(MalformedExperimentError):
        word_unitary(m, ("Q",))


def test_experiment_operator(ex1, ex1_prime):
    m, _, _ = ex1
    np.testing.assert_array_equal(experiment_operator(m, Experiment()), np.eye(4))
    np.testing.assert_array_equal(experiment_operator(m, Experiment(("C",))), m.unitary("C"))
    mp, _, _ = ex1_prime
    u = mp.unitary
    expect = mp.measurement("0") @ u("H1") @ u("C") @ u("H2") @ u("H1")
    np.testing.assert_allclose(experiment_operator(mp, PAPER_EXPERIMENT), expect)


def test_paper_experiment_probabilities(ex1_prime):
    m, s, t = ex1_prime
    ps = run_experiment(m, s, PAPER_EXPERIMENT)
    pt = run_experiment(m, t, PAPER_EXPERIMENT)
    assert ps.probability == pytest.approx(1.0, abs=1e-9)
    assert pt.probability == pytest.approx(0.0, abs=1e-9)
    assert pt.final_state is None
    np.testing.assert_allclose(np.trace(ps.final_state), 1.0)


def test_empty_scheduler_probability_one(rng):
    m = random_machine(3, rng)
    rho = random_density(3, rng)
    assert run_experiment(m, rho, Experiment(("a", "b", "a"))).probability == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_completeness_over_outcomes(seed):
    rng = np.random.default_rng(seed)
    m = random_machine(3, rng, n_inputs=2, n_outputs=3)
    rho = random_density(3, rng)
    for k in range(4):
        word = tuple(rng.choice(m.inputs, size=3))
        sched = tuple(sorted(rng.integers(0, 4, size=k)))
        total = sum(
            run_experiment(m, rho, Experiment(word, sched, b)).raw_probability
            for b in itertools.product(m.outputs, repeat=k)
        )
        assert total == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from("ab"), max_size=5), st.data())
def test_trailing_inputs_invariant(word, data):
    rng = np.random.default_rng(len(word))
    m = random_machine(2, rng)
    rho = random_density(2, rng)
    k = data.draw(st.integers(0, 3))
    sched = tuple(sorted(data.draw(st.lists(st.integers(0, len(word)), min_size=k, max_size=k))))
    outs = tuple(data.draw(st.lists(st.sampled_from("01"), min_size=k, max_size=k)))
    e = Experiment(tuple(word), sched, outs)
    longer = Experiment(tuple(word) + ("b", "a"), sched, outs)
    assert run_experiment(m, rho, e).raw_probability == pytest.approx(
        run_experiment(m, rho, longer).raw_probability, abs=1e-12)


def test_direct_sum_structure(ex1):
    m, _, _ = ex1
    d = direct_sum(m, m)
    assert d.dimension == 8
    for u in d.unitaries:
        assert np.all(u[:4, 4:] == 0) and np.all(u[4:, :4] == 0)


def test_direct_sum_alphabet_mismatch(ex1, ex1_prime):
    with pytest.raises(AlphabetMismatchError):
        direct_sum(ex1[0], ex1_prime[0])


@pytest.mark.parametrize("seed", range(5))
def test_direct_sum_reproduces_statistics(seed):
    rng = np.random.default_rng(seed)
    m1, m2 = random_machine(2, rng), random_machine(3, rng)
    r1, r2 = random_density(2, rng), random_density(3, rng)
    d = direct_sum(m1, m2)
    e1, e2 = embed_states(r1, r2)
    for _ in range(10):
        word = tuple(rng.choice(["a", "b"], size=3))
        sched = tuple(sorted(rng.integers(0, 4, size=2)))
        outs = tuple(rng.choice(["0", "1"], size=2))
        e = Experiment(word, sched, outs)
        assert run_experiment(d, e1, e).raw_probability == pytest.approx(run_experiment(m1, r1, e).raw_probability)
        assert run_experiment(d, e2, e).raw_probability == pytest.approx(run_experiment(m2, r2, e).raw_probability)


def test_is_real(ex1):
    assert is_real(ex1[0])
    phase = np.diag([1, 1j])
    assert not is_real(QuantumMealyMachine(["s"], ["0"], [phase], [I2]))
    nearly = np.eye(2, dtype=complex)
    nearly[0, 0] = 1 + 1e-15j
    assert is_real(QuantumMealyMachine(["s"], ["0"], [nearly], [I2]))
