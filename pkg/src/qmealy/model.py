"""Quantum Mealy machines, schedulers, experiments and their semantics."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .linalg import ShapeError, direct_sum_matrix, sandwich

MACHINE_TOL = 1e-9
DENSITY_TOL = 1e-9
REAL_TOL = 1e-12
MIN_PROBABILITY = 1e-12


class InvalidMachineError(ValueError):
    """A machine violates unitarity, completeness or alphabet rules.

    ``symbol`` names the offending input/output symbol when there is one.
    """

    def __init__(self, message, symbol=None):
        super().__init__(message)
        self.symbol = symbol


class InvalidDensityError(ValueError):
    pass


class MalformedExperimentError(ValueError):
    pass


class AlphabetMismatchError(ValueError):
    pass


def _check_alphabet(symbols, kind):
    symbols = tuple(str(s) for s in symbols)
    if not symbols:
        raise InvalidMachineError(f"{kind} alphabet is empty")
    if len(set(symbols)) != len(symbols):
        raise InvalidMachineError(f"{kind} alphabet has duplicate symbols: {symbols}")
    return symbols


def _stack(ops, symbols, kind):
    if isinstance(ops, dict):
        missing = [s for s in symbols if s not in ops]
        if missing:
            raise InvalidMachineError(f"no {kind} given for symbol {missing[0]!r}", missing[0])
        ops = [ops[s] for s in symbols]
    arr = np.array([np.asarray(o, dtype=complex) for o in ops])
    if arr.ndim != 3 or arr.shape[0] != len(symbols):
        raise InvalidMachineError(f"expected one square matrix per {kind} symbol")
    return arr


class QuantumMealyMachine:
    """A quantum Mealy machine ``(inputs, outputs, C^n, U, M)``.

    Args:
        inputs: input alphabet, in order.
        outputs: output alphabet, in order.
        unitaries: one ``n x n`` unitary per input symbol, either aligned
            with ``inputs`` or as a mapping keyed by symbol.
        measurements: one measurement operator per output symbol, with
            ``sum_m M_m^dagger M_m = I``.
        validate: check unitarity and completeness to ``MACHINE_TOL``.

    The operator arrays are read-only once the machine is built.
    """

    def __init__(self, inputs, outputs, unitaries, measurements, validate=True):
        self.inputs = _check_alphabet(inputs, "input")
        self.outputs = _check_alphabet(outputs, "output")
        self.unitaries = _stack(unitaries, self.inputs, "unitary")
        self.measurements = _stack(measurements, self.outputs, "measurement")
        n = self.unitaries.shape[1]
        for arr, kind in ((self.unitaries, "unitary"), (self.measurements, "measurement")):
            if arr.shape[1:] != (n, n):
                raise InvalidMachineError(f"{kind} operators must all be {n}x{n}, got {arr.shape[1:]}")
        self.dimension = n
        self.unitaries.flags.writeable = False
        self.measurements.flags.writeable = False
        self._input_index = {s: i for i, s in enumerate(self.inputs)}
        self._output_index = {s: i for i, s in enumerate(self.outputs)}
        if validate:
            self.validate()

    def __repr__(self):
        return (f"QuantumMealyMachine(n={self.dimension}, inputs={list(self.inputs)}, "
                f"outputs={list(self.outputs)})")

    def residuals(self):
        """Max-norm deviations from unitarity (per input) and completeness."""
        eye = np.eye(self.dimension)
        unitarity = {
            s: float(np.max(np.abs(u.conj().T @ u - eye)))
            for s, u in zip(self.inputs, self.unitaries)
        }
        total = np.einsum("kji,kjl->il", self.measurements.conj(), self.measurements)
        return unitarity, float(np.max(np.abs(total - eye)))

    def validate(self, tol=MACHINE_TOL):
        unitarity, completeness = self.residuals()
        for s, r in unitarity.items():
            if r > tol:
                raise InvalidMachineError(f"operator for input {s!r} is not unitary (residual {r:.3g})", s)
        if completeness > tol:
            raise InvalidMachineError(f"measurement is not complete (residual {completeness:.3g})")

    def unitary(self, symbol):
        try:
            return self.unitaries[self._input_index[symbol]]
        except KeyError:
            raise MalformedExperimentError(f"unknown input symbol {symbol!r}") from None

    def measurement(self, symbol):
        try:
            return self.measurements[self._output_index[symbol]]
        except KeyError:
            raise MalformedExperimentError(f"unknown output symbol {symbol!r}") from None

    def input_index(self, symbol):
        return self._input_index[symbol]

    def output_index(self, symbol):
        return self._output_index[symbol]


def _is_psd(a, tol):
    """Pivoted Cholesky-style PSD test for a Hermitian matrix."""
    a = np.array(a, dtype=complex, copy=True)
    n = a.shape[0]
    for _ in range(n):
        d = np.real(np.diag(a))
        p = int(np.argmax(d))
        if d[p] < -tol:
            return False
        if d[p] <= tol:
            # remaining Schur complement must vanish
            return bool(np.max(np.abs(a)) <= max(tol, 1e-7))
        col = a[:, p] / np.sqrt(d[p])
        a = a - np.outer(col, col.conj())
    return bool(np.max(np.abs(a)) <= max(tol, 1e-7))


def validate_density(rho, tol=DENSITY_TOL):
    """Check ``rho`` is a density operator; return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDensityError(f"density operator must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidDensityError("density operator is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidDensityError(f"density operator has trace {tr:.12g}, expected 1")
    if not _is_psd(rho, tol):
        raise InvalidDensityError("density operator is not positive semidefinite")
    return rho


@dataclass(frozen=True)
class DensityOperator:
    """A validated density matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = validate_density(self.matrix).copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, psi):
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dimension(self):
        return self.matrix.shape[0]


def as_state(rho):
    """Matrix of a ``DensityOperator`` or an array-like (not validated)."""
    if isinstance(rho, DensityOperator):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


@dataclass(frozen=True)
class Scheduler:
    """Non-decreasing measurement positions ``s_1 <= ... <= s_k``."""

    points: Tuple[int, ...] = ()

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        if any(b < a for a, b in zip(pts, pts[1:])):
            raise MalformedExperimentError(f"scheduler must be non-decreasing: {pts}")
        if pts and pts[0] < 0:
            raise MalformedExperimentError(f"scheduler points must be >= 0: {pts}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def fits(self, word_length):
        return not self.points or self.points[-1] <= word_length

    def is_closed(self, word_length):
        return bool(self.points) and self.points[-1] == word_length


@dataclass(frozen=True)
class Experiment:
    """Input word, scheduler, and the observed outcome word."""

    word: Tuple[str, ...] = ()
    scheduler: Scheduler = field(default_factory=Scheduler)
    outcomes: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        sched = self.scheduler
        if not isinstance(sched, Scheduler):
            sched = Scheduler(tuple(sched))
            object.__setattr__(self, "scheduler", sched)
        if not sched.fits(len(self.word)):
            raise MalformedExperimentError(
                f"scheduler {sched.points} exceeds word length {len(self.word)}")
        if len(self.outcomes) != len(sched):
            raise MalformedExperimentError(
                f"{len(sched)} measurements but {len(self.outcomes)} outcomes")

    @property
    def size(self):
        return len(self.word) + len(self.scheduler)

    @property
    def closed(self):
        return self.scheduler.is_closed(len(self.word))

    def segments(self):
        """Split the word at the scheduler points (``|S|+1`` pieces)."""
        bounds = (0,) + self.scheduler.points + (len(self.word),)
        return [self.word[bounds[i]:bounds[i + 1]] for i in range(len(bounds) - 1)]

    def closure(self):
        """Same experiment with the trailing unmeasured inputs dropped."""
        if not self.scheduler.points:
            return Experiment((), Scheduler(()), ())
        return Experiment(self.word[: self.scheduler.points[-1]], self.scheduler, self.outcomes)

    def __str__(self):
        word = " ".join(self.word) if self.word else "eps"
        sched = "{" + ", ".join(map(str, self.scheduler.points)) + "}"
        outs = " ".join(self.outcomes) if self.outcomes else "eps"
        return f"word={word}, schedule={sched}, outcomes={outs}"


def word_unitary(machine, word):
    """``U_a = U_{a[|a|]} ... U_{a[1]}``; identity for the empty word."""
    u = np.eye(machine.dimension, dtype=complex)
    for s in word:
        u = machine.unitary(s) @ u
    return u


def experiment_operator(machine, experiment):
    """``V_{b|a,S} = U_{a_{k+1}} M_{b_k} U_{a_k} ... M_{b_1} U_{a_1}``."""
    segs = experiment.segments()
    v = word_unitary(machine, segs[0])
    for outcome, seg in zip(experiment.outcomes, segs[1:]):
        v = machine.measurement(outcome) @ v
        v = word_unitary(machine, seg) @ v
    return v


class RunResult(NamedTuple):
    probability: float
    post_state: np.ndarray
    final_state: Optional[np.ndarray]
    raw_probability: float


def run_experiment(machine, rho, experiment):
    """Outcome probability and post-measurement state of an experiment.

    ``probability`` is clamped to [0, 1]; ``raw_probability`` keeps the
    unclamped trace. ``final_state`` is the normalized post state, or
    None when the probability is below ``MIN_PROBABILITY``.
    """
    rho = as_state(rho)
    if rho.shape != (machine.dimension, machine.dimension):
        raise ShapeError(f"state shape {rho.shape} does not match machine dimension {machine.dimension}")
    v = experiment_operator(machine, experiment)
    post = sandwich(v, rho)
    raw = float(np.trace(post).real)
    prob = min(max(raw, 0.0), 1.0)
    final = post / raw if raw > MIN_PROBABILITY else None
    return RunResult(prob, post, final, raw)


def probability(machine, rho, experiment):
    return run_experiment(machine, rho, experiment).raw_probability


def direct_sum(m1, m2):
    """``M1 (+) M2``: block-diagonal operators over the shared alphabets."""
    if m1.inputs != m2.inputs or m1.outputs != m2.outputs:
        raise AlphabetMismatchError(
            f"alphabets differ: {m1.inputs}/{m1.outputs} vs {m2.inputs}/{m2.outputs}")
    us = [direct_sum_matrix(a, b) for a, b in zip(m1.unitaries, m2.unitaries)]
    ms = [direct_sum_matrix(a, b) for a, b in zip(m1.measurements, m2.measurements)]
    return QuantumMealyMachine(m1.inputs, m1.outputs, us, ms)


def embed_states(rho1, rho2):
    """``rho1 (+) 0`` and ``0 (+) rho2`` in the direct-sum space."""
    rho1, rho2 = as_state(rho1), as_state(rho2)
    z1 = np.zeros_like(rho1)
    z2 = np.zeros_like(rho2)
    return direct_sum_matrix(rho1, z2), direct_sum_matrix(z1, rho2)


def is_real(machine, tol=REAL_TOL):
    return bool(np.all(np.abs(machine.unitaries.imag) <= tol)
                and np.all(np.abs(machine.measurements.imag) <= tol))


def conjugate_machine(machine, w):
    """Basis change ``W X W^dagger`` applied to every operator."""
    w = np.asarray(w, dtype=complex)
    wd = w.conj().T
    return QuantumMealyMachine(
        machine.inputs, machine.outputs,
        [w @ u @ wd for u in machine.unitaries],
        [w @ m @ wd for m in machine.measurements],
    )

