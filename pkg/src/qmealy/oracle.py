"""Definition-level ground truth: enumerate experiments and compare directly.

Everything here is exponential in the experiment size; it exists to check
the polynomial algorithms, not to compete with them.

Experiments form a tree: the children of ``(a, S, b)`` are ``(a s, S, b)``
for each input ``s`` followed by ``(a, S + |a|, b g)`` for each output
``g``. Walking it breadth-first visits every experiment exactly once,
ordered by size, then parent, then inputs before outputs in alphabet order.
"""

from math import comb

import numpy as np

from .equivalence import TRACE_TOL, Verdict
from .linalg import DEFAULT_SPAN_TOL, SpanTracker
from .model import Experiment, Scheduler, as_state


def enumerate_experiments(inputs, outputs, max_size, max_measurements=None):
    """Yield every experiment with size <= ``max_size`` exactly once.

    Args:
        inputs, outputs: the two alphabets, in order.
        max_size: bound on ``|a| + |S|``.
        max_measurements: bound on ``|S|`` (None for no bound).
    """
    kmax = max_size if max_measurements is None else max_measurements
    level = [((), (), ())]
    for size in range(max_size + 1):
        for word, sched, outs in level:
            yield Experiment(word, Scheduler(sched), outs)
        if size == max_size:
            return
        nxt = []
        for word, sched, outs in level:
            nxt.extend((word + (s,), sched, outs) for s in inputs)
            if len(sched) < kmax:
                nxt.extend((word, sched + (len(word),), outs + (g,)) for g in outputs)
        level = nxt


def count_experiments(n_inputs, n_outputs, max_size, max_measurements=None):
    """Closed-form count of experiments enumerated above.

    A word of length ``i`` with ``j`` measurements admits ``C(i+j, j)``
    schedulers.
    """
    kmax = max_size if max_measurements is None else max_measurements
    return sum(
        comb(i + j, j) * n_inputs ** i * n_outputs ** j
        for i in range(max_size + 1)
        for j in range(min(kmax, max_size - i) + 1)
    )


class _Level:
    __slots__ = ("ops", "parent", "symbol", "meas")

    def __init__(self, ops, parent, symbol, meas):
        self.ops = ops
        self.parent = parent
        self.symbol = symbol
        self.meas = meas


def _levels(machine, ops, max_size, kmax):
    """Breadth-first levels of evolved operators.

    ``ops`` has shape ``(c, n, n)``: ``c`` operators evolved side by side
    along every experiment. Yields one :class:`_Level` per size, whose
    ``ops`` has shape ``(N, c, n, n)`` in enumeration order.
    """
    n_in = len(machine.inputs)
    kraus = np.concatenate([machine.unitaries, machine.measurements])
    kraus_dag = np.conj(np.transpose(kraus, (0, 2, 1)))
    level = _Level(ops[None], np.array([-1]), np.array([-1]), np.array([0]))
    yield level
    for _ in range(max_size):
        # (P, m, c, n, n): every symbol applied to every parent
        child = np.einsum("sij,pcjk,skl->pscil", kraus, level.ops, kraus_dag, optimize=True)
        m = kraus.shape[0]
        p = level.ops.shape[0]
        allowed = np.ones((p, m), dtype=bool)
        allowed[:, n_in:] = (level.meas < kmax)[:, None]
        parent = np.broadcast_to(np.arange(p)[:, None], (p, m))[allowed]
        symbol = np.broadcast_to(np.arange(m)[None, :], (p, m))[allowed]
        meas = (level.meas[:, None] + (np.arange(m) >= n_in)[None, :])[allowed]
        level = _Level(child[allowed], parent, symbol, meas)
        yield level


def _reconstruct(machine, history, idx):
    """Experiment of node ``idx`` in the last level of ``history``."""
    n_in = len(machine.inputs)
    steps = []
    for level in reversed(history[1:]):
        steps.append(int(level.symbol[idx]))
        idx = int(level.parent[idx])
    steps.reverse()
    word, sched, outs = [], [], []
    for s in steps:
        if s < n_in:
            word.append(machine.inputs[s])
        else:
            sched.append(len(word))
            outs.append(machine.outputs[s - n_in])
    return Experiment(tuple(word), Scheduler(tuple(sched)), tuple(outs))


def brute_force_equiv(machine, rho_s, rho_t, max_size, max_measurements=None, tol=TRACE_TOL):
    """Compare outcome probabilities on every experiment up to ``max_size``.

    The two states are evolved separately; the first experiment (in
    enumeration order) whose probabilities differ by more than ``tol`` is
    returned as the witness.
    """
    rho_s, rho_t = as_state(rho_s), as_state(rho_t)
    kmax = max_size if max_measurements is None else max_measurements
    ops = np.stack([rho_s, rho_t])
    history = []
    for size, level in enumerate(_levels(machine, ops, max_size, kmax)):
        history.append(level)
        probs = np.einsum("pcii->pc", level.ops).real
        bad = np.nonzero(np.abs(probs[:, 0] - probs[:, 1]) > tol)[0]
        if bad.size:
            i = int(bad[0])
            return Verdict(
                equivalent=False,
                witness=_reconstruct(machine, history, i),
                prob_s=float(probs[i, 0]),
                prob_t=float(probs[i, 1]),
                bound=max_size,
                k=max_measurements,
                method="oracle",
            )
    return Verdict(equivalent=True, bound=max_size, k=max_measurements, method="oracle")


def _feed(tracker, mats):
    """Add every matrix of ``mats`` (in order) to ``tracker``."""
    n = tracker.n
    v = np.real(mats) if tracker.real else mats
    v = v.reshape(-1, n * n)
    while v.shape[0] and not tracker.full:
        q = tracker.orthogonal_elements.reshape(len(tracker), n * n)
        norm2 = np.einsum("ij,ij->i", v.conj(), v).real
        r = v - (v @ q.conj().T) @ q if len(q) else v
        res2 = np.einsum("ij,ij->i", r.conj(), r).real
        cand = np.nonzero((res2 > tracker.tol * norm2) & (norm2 > tracker.atol ** 2))[0]
        if not cand.size:
            return
        i = int(cand[0])
        tracker.extend(v[i].reshape(n, n))
        v = v[i + 1:]


def span_profiles(machine, rho, max_size, layers=(None,), real=False, tol=DEFAULT_SPAN_TOL):
    """``dim span D_k(rho, m)`` for ``m = 0..max_size`` and each ``k`` in ``layers``.

    ``k=None`` means no bound on the number of measurements. Returns a
    dict mapping each ``k`` to its list of dimensions.
    """
    rho = as_state(rho)
    n = machine.dimension
    atol = 1e-12 * float(np.linalg.norm(rho))
    bounded = [k for k in layers if k is not None]
    kmax = max_size if None in layers or not bounded else max(bounded)
    trackers = {k: SpanTracker(n, real=real, tol=tol, atol=atol) for k in layers}
    dims = {k: [] for k in layers}
    for level in _levels(machine, rho[None], max_size, kmax):
        for k in layers:
            sel = level.ops[:, 0] if k is None else level.ops[level.meas <= k, 0]
            _feed(trackers[k], sel)
            dims[k].append(len(trackers[k]))
    return dims


def span_profile(machine, rho, max_size, max_measurements=None, real=False, tol=DEFAULT_SPAN_TOL):
    """``[dim span D_k(rho, m) for m in 0..max_size]`` with ``k = max_measurements``."""
    return span_profiles(machine, rho, max_size, (max_measurements,), real, tol)[max_measurements]
