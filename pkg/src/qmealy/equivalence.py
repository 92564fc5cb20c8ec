"""Polynomial-time equivalence checking of states and machines.

Both checkers run a breadth-first search over experiments ``(a, S, b)``
starting from ``rho_s - rho_t``. An experiment is expanded only when its
evolved operator is linearly independent of the operators collected so
far; the states are equivalent iff every collected operator is traceless.

``check_states`` and ``check_states_k`` decide independence with the
incremental orthogonal tracker (O(m n^6) overall). ``check_states_naive``
redoes Gaussian elimination from scratch on every query (O(m n^8)) and
serves as the timing baseline.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .linalg import DEFAULT_SPAN_TOL, SpanTracker, eliminate_rank
from .model import (
    Experiment,
    Scheduler,
    as_state,
    direct_sum,
    embed_states,
    is_real,
    run_experiment,
    validate_density,
)

TRACE_TOL = 1e-8
# operators with Frobenius norm below this fraction of the seed's are zero
ZERO_REL = 1e-12


@dataclass
class Verdict:
    """Outcome of an equivalence check.

    ``witness`` is a distinguishing experiment with a closed scheduler,
    present exactly when ``equivalent`` is False; ``prob_s``/``prob_t``
    are its outcome probabilities from the two initial states.
    ``basis_sizes[l]`` is the span dimension collected for layer ``l``
    (a single entry when the number of measurements is unbounded).
    """

    equivalent: bool
    witness: Optional[Experiment] = None
    prob_s: Optional[float] = None
    prob_t: Optional[float] = None
    basis_sizes: List[int] = field(default_factory=list)
    bound: Optional[int] = None
    max_basis: Optional[int] = None
    k: Optional[int] = None
    real_mode: bool = False
    method: str = "fast"

    @property
    def gap(self):
        if self.prob_s is None:
            return 0.0
        return abs(self.prob_s - self.prob_t)

    def to_dict(self):
        w = self.witness
        return {
            "equivalent": self.equivalent,
            "witness": None if w is None else {
                "word": list(w.word),
                "schedule": list(w.scheduler.points),
                "outcomes": list(w.outcomes),
            },
            "p_s": self.prob_s,
            "p_t": self.prob_t,
            "basis_sizes": list(self.basis_sizes),
            "bound": self.bound,
            "max_basis": self.max_basis,
            "k": self.k,
            "real_mode": self.real_mode,
            "method": self.method,
        }


def experiment_bound(n, real_mode=False):
    """Largest experiment size needed to separate inequivalent states."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if real_mode:
        return n * (n + 1) // 2 - 1
    return n * n - 1


def machines_bound(n1, n2, real_mode=False):
    if real_mode:
        return n1 * (n1 + 1) // 2 + n2 * (n2 + 1) // 2 - 1
    return n1 * n1 + n2 * n2 - 1


class EliminationSpan:
    """Span membership by from-scratch Gaussian elimination.

    Keeps the accepted matrices as raw rows and re-eliminates the whole
    stack on every query. Same interface as :class:`SpanTracker`.
    """

    def __init__(self, n, real=False, tol=DEFAULT_SPAN_TOL, atol=0.0, dim=None):
        self.n = n
        self.real = real
        self.tol = tol
        self.atol = atol
        self.dim = dim if dim is not None else (n * (n + 1) // 2 if real else n * n)
        dtype = np.float64 if real else np.complex128
        self._rows = np.zeros((self.dim + 1, n * n), dtype=dtype)
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def full(self):
        return self._size >= self.dim

    def _vector(self, rho):
        rho = np.asarray(rho)
        return (np.real(rho) if self.real else rho).ravel()

    def contains(self, rho):
        v = self._vector(rho)
        if np.vdot(v, v).real <= self.atol * self.atol:
            return True
        self._rows[self._size] = v
        return eliminate_rank(self._rows[: self._size + 1], self.tol)

    def extend(self, rho):
        if self.full or self.contains(rho):
            return False
        self._size += 1
        return True


def _resolve_mode(machine, mode):
    if mode == "auto":
        return is_real(machine)
    if mode == "real":
        if not is_real(machine):
            raise ValueError("real mode requested for a machine with complex entries")
        return True
    if mode == "complex":
        return False
    raise ValueError(f"unknown mode {mode!r}")


def explore(machine, rho, k=None, real_mode=False, tracker_cls=SpanTracker,
            tol=DEFAULT_SPAN_TOL, dim=None):
    """Breadth-first span exploration from the Hermitian operator ``rho``.

    With ``k=None`` there is one layer and measurements are unbounded;
    otherwise layers ``0..k`` collect operators reachable with at most
    that many measurements, following the layered insertion rule (an
    operator independent in layer ``|S|`` is added to every layer up to
    the largest one where it is still independent).

    Returns a list (one entry per layer) of ``(experiment, operator)``
    pairs in insertion order. Operators are real parts in real mode.
    """
    if k is not None and k < 0:
        raise ValueError("measurement budget k must be >= 0")
    n = machine.dimension
    rho = as_state(rho)
    if rho.shape != (n, n):
        raise ValueError(f"operator shape {rho.shape} does not match machine dimension {n}")
    if real_mode:
        us = np.ascontiguousarray(machine.unitaries.real)
        ms = np.ascontiguousarray(machine.measurements.real)
        seed = np.real(rho).copy()
    else:
        us, ms = machine.unitaries, machine.measurements
        seed = rho.copy()
    us_t = np.conj(np.transpose(us, (0, 2, 1)))
    ms_t = np.conj(np.transpose(ms, (0, 2, 1)))
    atol = ZERO_REL * float(np.linalg.norm(seed))

    layers = 1 if k is None else k + 1
    trackers = [tracker_cls(n, real=real_mode, tol=tol, atol=atol, dim=dim) for _ in range(layers)]
    accepted = [[] for _ in range(layers)]
    inputs, outputs = machine.inputs, machine.outputs

    queue = deque([((), (), (), seed)])
    while queue:
        word, sched, outs, op = queue.popleft()
        lo = 0 if k is None else len(sched)
        if trackers[lo].contains(op):
            continue
        hi = lo
        for j in range(layers - 1, lo, -1):
            if not trackers[j].contains(op):
                hi = j
                break
        for j in range(lo, hi + 1):
            if not trackers[j].extend(op):
                if trackers[j].full:
                    continue
                raise RuntimeError(
                    f"layer spans are not nested: operator independent of layer {hi} "
                    f"but dependent in layer {j}")
            accepted[j].append(((word, sched, outs), op))
        for i, s in enumerate(inputs):
            queue.append((word + (s,), sched, outs, us[i] @ op @ us_t[i]))
        if k is None or len(sched) < k:
            pos = (len(word),)
            for i, g in enumerate(outputs):
                queue.append((word, sched + pos, outs + (g,), ms[i] @ op @ ms_t[i]))

    return [
        [(Experiment(w, Scheduler(s), o), op) for (w, s, o), op in layer]
        for layer in accepted
    ]


def _decide(machine, rho_s, rho_t, k, mode, method, tol, trace_tol, dim=None):
    real_mode = _resolve_mode(machine, mode)
    tracker_cls = SpanTracker if method == "fast" else EliminationSpan
    layers = explore(machine, rho_s - rho_t, k=k, real_mode=real_mode,
                     tracker_cls=tracker_cls, tol=tol, dim=dim)
    n = machine.dimension
    verdict = Verdict(
        equivalent=True,
        basis_sizes=[len(layer) for layer in layers],
        bound=experiment_bound(n, real_mode),
        max_basis=n * (n + 1) // 2 if real_mode else n * n,
        k=k,
        real_mode=real_mode,
        method=method,
    )
    for exp, op in layers[-1]:
        if abs(np.trace(op)) > trace_tol:
            # trailing inputs leave the trace unchanged, so trimming keeps it distinguishing
            verdict.equivalent = False
            verdict.witness = exp.closure()
            break
    return verdict, layers


def _finish(verdict, witness_runs):
    (m_s, r_s), (m_t, r_t) = witness_runs
    w = verdict.witness
    verdict.prob_s = run_experiment(m_s, r_s, w).raw_probability
    verdict.prob_t = run_experiment(m_t, r_t, w).raw_probability
    return verdict


def _check(machine, rho_s, rho_t, k, mode, method, tol, trace_tol):
    rho_s = validate_density(as_state(rho_s))
    rho_t = validate_density(as_state(rho_t))
    n = machine.dimension
    if rho_s.shape != (n, n) or rho_t.shape != (n, n):
        raise ValueError(f"state dimensions do not match machine dimension {n}")
    verdict, _ = _decide(machine, rho_s, rho_t, k, mode, method, tol, trace_tol)
    if not verdict.equivalent:
        _finish(verdict, ((machine, rho_s), (machine, rho_t)))
    return verdict


def check_states(machine, rho_s, rho_t, mode="auto", tol=DEFAULT_SPAN_TOL, trace_tol=TRACE_TOL):
    """Decide whether ``rho_s`` and ``rho_t`` are equivalent in ``machine``.

    Args:
        machine: the :class:`~qmealy.model.QuantumMealyMachine`.
        rho_s, rho_t: density operators (validated).
        mode: ``"auto"`` tracks real parts when the machine is real,
            ``"complex"`` forces full complex tracking, ``"real"`` insists
            on real tracking.
        tol: relative span-membership tolerance.
        trace_tol: a collected operator with ``|tr| > trace_tol`` proves
            the states distinguishable.

    Returns:
        Verdict: with a closed-scheduler witness when not equivalent.
    """
    return _check(machine, rho_s, rho_t, None, mode, "fast", tol, trace_tol)


def check_states_k(machine, rho_s, rho_t, k, mode="auto", tol=DEFAULT_SPAN_TOL,
                   trace_tol=TRACE_TOL):
    """Equivalence restricted to experiments with at most ``k`` measurements."""
    if k < 0:
        raise ValueError("measurement budget k must be >= 0")
    return _check(machine, rho_s, rho_t, int(k), mode, "fast", tol, trace_tol)


def check_states_naive(machine, rho_s, rho_t, k=None, mode="auto", tol=DEFAULT_SPAN_TOL,
                       trace_tol=TRACE_TOL):
    """Same contract as :func:`check_states`, with per-query elimination."""
    if k is not None and k < 0:
        raise ValueError("measurement budget k must be >= 0")
    return _check(machine, rho_s, rho_t, k, mode, "naive", tol, trace_tol)


def check_machines(m1, rho1, m2, rho2, k=None, mode="auto", method="fast",
                   tol=DEFAULT_SPAN_TOL, trace_tol=TRACE_TOL):
    """Equivalence of ``(m1, rho1)`` and ``(m2, rho2)`` via their direct sum.

    The witness, if any, is replayed in the two original machines.
    """
    rho1 = validate_density(as_state(rho1))
    rho2 = validate_density(as_state(rho2))
    if rho1.shape[0] != m1.dimension or rho2.shape[0] != m2.dimension:
        raise ValueError("state dimensions do not match their machines")
    if k is not None and k < 0:
        raise ValueError("measurement budget k must be >= 0")
    joint = direct_sum(m1, m2)
    s, t = embed_states(rho1, rho2)
    verdict, _ = _decide(joint, s, t, k, mode, method, tol, trace_tol)
    n1, n2 = m1.dimension, m2.dimension
    verdict.bound = machines_bound(n1, n2, verdict.real_mode)
    verdict.max_basis = verdict.bound + 1
    if not verdict.equivalent:
        _finish(verdict, ((m1, rho1), (m2, rho2)))
    return verdict
