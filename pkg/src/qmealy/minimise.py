"""Polynomial constraint systems for machine minimisation.

A candidate smaller machine ``M2`` (dimension ``d``) with initial state
``rho2`` is equivalent to a given ``(M1, rho1)`` iff matrices ``F`` and
``A`` exist that intertwine the lifted operators of both machines and keep
every column traceless across the two blocks. This module writes those
conditions as real polynomial equalities of degree at most 3, builds a
satisfying assignment from span bases when the machines are known to be
equivalent, and evaluates assignments against a system.

Unknowns are complex matrices ("blocks"); each entry is split into two
real variables ``<block>[i,j].re`` and ``<block>[i,j].im``. Each complex
equation contributes its real part then its imaginary part, except the
Hermitian well-formedness equations, which list only the upper triangle
(one real equation on the diagonal, two off it).

Vectors use row-major vectorization: ``vec(rho)[i*n + j] = rho[i, j]``.

Text format (one item per line)::

    qmm-polysys 1
    problem <1|2>
    k <int|none>
    target-dim <int>
    variables <count>
    constraints <count>
    var <index> <name>
    ...
    eq <condition> <coef> <monomial> <coef> <monomial> ...

A monomial is ``x<i>*x<j>*...`` over variable indices, or ``1`` for the
constant term; coefficients are Python float literals.
"""

from dataclasses import dataclass, field

import numpy as np

from .equivalence import explore
from .linalg import SpanTracker
from .model import as_state, direct_sum, embed_states

VERIFY_TOL = 1e-8
MAX_DEGREE = 3
FORMAT_HEADER = "qmm-polysys 1"

CONDITIONS = (
    "init",
    "trace",
    "intertwine",
    "measure-step",
    "unitarity",
    "completeness",
    "density",
    "trace-one",
)


def _square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def vectorize(rho):
    """Row-major flattening of a square matrix."""
    return _square(rho).reshape(-1).copy()


def unvectorize(v, n=None):
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector of length {v.size} is not a square matrix")
    return v.reshape(n, n).copy()


def lift(m):
    """Superoperator ``L`` with ``vectorize(M rho M^dagger) = L @ vectorize(rho)``."""
    m = _square(m)
    return np.kron(m, np.conj(m))


def trace_vector(n):
    """``eta`` with ``eta^dagger @ vectorize(rho) = tr(rho)``."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return np.eye(n, dtype=complex).reshape(-1)


# --- sparse complex polynomials over real variables -------------------------

def _pvar(re, im):
    return {(re,): 1.0 + 0j, (im,): 1j}


def _pconj(p):
    return {m: np.conj(c) for m, c in p.items()}


def _pmul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(sorted(m1 + m2))
            out[m] = out.get(m, 0) + c1 * c2
    return out


def _padd(acc, p, scale=1.0):
    for m, c in p.items():
        acc[m] = acc.get(m, 0) + scale * c
    return acc


def _split(p):
    re = [(float(c.real), m) for m, c in p.items() if c.real != 0]
    im = [(float(c.imag), m) for m, c in p.items() if c.imag != 0]
    return re, im


@dataclass
class ConstraintBlock:
    """A family of equations encoding one condition.

    ``evaluate(assignment)`` returns the real residual vector and
    ``expand()`` yields each equation as a list of ``(coef, monomial)``
    pairs, both in the same order.
    """

    condition: str
    label: str
    count: int
    evaluate: object = field(repr=False)
    expand: object = field(repr=False)


class PolynomialSystem:
    """Real polynomial equalities over split complex matrix unknowns.

    Built by :func:`encode_problem1` or :func:`encode_problem2`.

    Attributes:
        problem: 1 (unbounded measurements) or 2 (at most ``k``).
        k: measurement budget for problem 2, else None.
        target_dim: dimension ``d`` of the candidate machine.
        blocks: ordered mapping ``name -> shape`` of complex unknowns.
        constraints: list of :class:`ConstraintBlock`.
    """

    def __init__(self, machine, rho, problem, k, target_dim):
        self.machine = machine
        self.rho = as_state(rho)
        self.problem = problem
        self.k = k
        self.target_dim = d = int(target_dim)
        self.n1 = n1 = machine.dimension
        self.size = n1 * n1 + d * d
        self.blocks = {}
        self.constraints = []
        self._offsets = {}
        self._nvars = 0

    # variables -------------------------------------------------------------

    def _add_block(self, name, shape):
        self.blocks[name] = shape
        self._offsets[name] = self._nvars
        self._nvars += 2 * shape[0] * shape[1]

    def _index(self, name, i, j):
        base = self._offsets[name] + 2 * (i * self.blocks[name][1] + j)
        return base, base + 1

    def _cvar(self, name, i, j):
        return _pvar(*self._index(name, i, j))

    @property
    def n_variables(self):
        return self._nvars

    @property
    def n_constraints(self):
        return sum(c.count for c in self.constraints)

    def variable_names(self):
        names = []
        for name, (r, c) in self.blocks.items():
            for i in range(r):
                for j in range(c):
                    names.append(f"{name}[{i},{j}].re")
                    names.append(f"{name}[{i},{j}].im")
        return names

    def constraint_counts(self):
        counts = {}
        for c in self.constraints:
            counts[c.condition] = counts.get(c.condition, 0) + c.count
        return counts

    def flatten(self, assignment):
        """Real variable vector for a block assignment."""
        x = np.empty(self._nvars)
        for name, shape in self.blocks.items():
            v = np.asarray(assignment[name], dtype=complex)
            if v.shape != shape:
                raise ValueError(f"block {name} has shape {v.shape}, expected {shape}")
            off = self._offsets[name]
            x[off:off + v.size * 2:2] = v.real.ravel()
            x[off + 1:off + v.size * 2:2] = v.imag.ravel()
        return x

    def unflatten(self, x):
        x = np.asarray(x, dtype=float)
        out = {}
        for name, (r, c) in self.blocks.items():
            off = self._offsets[name]
            seg = x[off:off + 2 * r * c]
            out[name] = (seg[0::2] + 1j * seg[1::2]).reshape(r, c)
        return out

    # equations -------------------------------------------------------------

    def equations(self):
        """Yield ``(condition, terms)`` for every equation, lazily."""
        for block in self.constraints:
            for terms in block.expand():
                yield block.condition, terms

    def residuals(self, assignment):
        """Concatenated residual vector in equation order."""
        parts = [np.asarray(c.evaluate(assignment), dtype=float) for c in self.constraints]
        return np.concatenate(parts) if parts else np.zeros(0)

    def max_degree(self):
        return max((len(m) for _, terms in self.equations() for _, m in terms), default=0)

    def to_text(self):
        lines = [
            FORMAT_HEADER,
            f"problem {self.problem}",
            f"k {'none' if self.k is None else self.k}",
            f"target-dim {self.target_dim}",
            f"variables {self.n_variables}",
            f"constraints {self.n_constraints}",
        ]
        lines += [f"var {i} {name}" for i, name in enumerate(self.variable_names())]
        for cond, terms in self.equations():
            body = " ".join(f"{c!r} {_monomial_text(m)}" for c, m in terms)
            lines.append(f"eq {cond} {body}".rstrip())
        return "\n".join(lines) + "\n"


def _monomial_text(m):
    return "*".join(f"x{i}" for i in m) if m else "1"


def _interleave(z):
    z = np.asarray(z).ravel()
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def _upper(z):
    z = np.asarray(z)
    out = []
    for i in range(z.shape[0]):
        out.append(z[i, i].real)
        for j in range(i + 1, z.shape[0]):
            out += [z[i, j].real, z[i, j].imag]
    return np.array(out)


def _emit_complex(p):
    re, im = _split(p)
    yield re
    yield im


def _emit_upper(polys, d):
    for i in range(d):
        re, _ = _split(polys[i][i])
        yield re
        for j in range(i + 1, d):
            yield from _emit_complex(polys[i][j])


def _gram_polys(system, names, d):
    """``sum_b X_b^dagger X_b - I`` as a d x d grid of polynomials."""
    grid = [[{} for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            acc = {(): -1.0 + 0j} if i == j else {}
            for name in names:
                for r in range(d):
                    _padd(acc, _pmul(_pconj(system._cvar(name, r, i)), system._cvar(name, r, j)))
            grid[i][j] = acc
    return grid


def _wellformed(system):
    """Constraints making the candidate a machine with a density state."""
    m = system.machine
    d = system.target_dim
    ins = [f"U.{s}" for s in m.inputs]
    outs = [f"M.{g}" for g in m.outputs]
    herm = d * d

    for sym, name in zip(m.inputs, ins):
        def ev(a, name=name):
            u = np.asarray(a[name])
            return _upper(u.conj().T @ u - np.eye(d))

        def ex(name=name):
            yield from _emit_upper(_gram_polys(system, [name], d), d)

        system.constraints.append(ConstraintBlock("unitarity", name, herm, ev, ex))

    def ev_c(a):
        s = sum(np.asarray(a[n]).conj().T @ np.asarray(a[n]) for n in outs)
        return _upper(s - np.eye(d))

    def ex_c():
        yield from _emit_upper(_gram_polys(system, outs, d), d)

    system.constraints.append(ConstraintBlock("completeness", "M", herm, ev_c, ex_c))

    def ev_d(a):
        f = np.asarray(a["L"])
        return _interleave(np.asarray(a["rho"]) - f @ f.conj().T)

    def ex_d():
        for i in range(d):
            for j in range(d):
                acc = dict(system._cvar("rho", i, j))
                for r in range(d):
                    _padd(acc, _pmul(system._cvar("L", i, r), _pconj(system._cvar("L", j, r))), -1.0)
                yield from _emit_complex(acc)

    system.constraints.append(ConstraintBlock("density", "rho", 2 * d * d, ev_d, ex_d))

    def ev_t(a):
        return _interleave(np.trace(np.asarray(a["rho"])) - 1.0)

    def ex_t():
        acc = {(): -1.0 + 0j}
        for i in range(d):
            _padd(acc, system._cvar("rho", i, i))
        yield from _emit_complex(acc)

    system.constraints.append(ConstraintBlock("trace-one", "rho", 2, ev_t, ex_t))


def _init_block(system, f_name):
    n1, d, size = system.n1, system.target_dim, system.size
    const = vectorize(system.rho)

    def ev(a):
        target = np.concatenate([const, vectorize(np.asarray(a["rho"]))])
        return _interleave(np.asarray(a[f_name])[:, 0] - target)

    def ex():
        for r in range(size):
            acc = dict(system._cvar(f_name, r, 0))
            if r < n1 * n1:
                if const[r] != 0:
                    acc[()] = -const[r]
            else:
                i, j = divmod(r - n1 * n1, d)
                _padd(acc, system._cvar("rho", i, j), -1.0)
            yield from _emit_complex(acc)

    system.constraints.append(ConstraintBlock("init", f_name, 2 * size, ev, ex))


def _trace_block(system, f_name):
    n1, d, size = system.n1, system.target_dim, system.size
    eta = np.concatenate([trace_vector(n1), -trace_vector(d)]).real

    def ev(a):
        return _interleave(eta @ np.asarray(a[f_name]))

    def ex():
        diag = [r for r in range(size) if eta[r] != 0]
        for c in range(size):
            acc = {}
            for r in diag:
                _padd(acc, system._cvar(f_name, r, c), eta[r])
            yield from _emit_complex(acc)

    system.constraints.append(ConstraintBlock("trace", f_name, 2 * size, ev, ex))


def _step_block(system, condition, const_op, var_name, f_in, f_out, a_name):
    """``blockdiag(lift(const_op), lift(var)) @ F_in - F_out @ A = 0``."""
    n1, d, size = system.n1, system.target_dim, system.size
    lifted = lift(const_op)
    h = n1 * n1

    def ev(a):
        v = np.asarray(a[var_name])
        f_i, f_o, amat = np.asarray(a[f_in]), np.asarray(a[f_out]), np.asarray(a[a_name])
        left = np.vstack([lifted @ f_i[:h], lift(v) @ f_i[h:]])
        return _interleave(left - f_o @ amat)

    def ex():
        for r in range(size):
            if r >= h:
                i, j = divmod(r - h, d)
                row = [
                    (h + x * d + y, _pmul(system._cvar(var_name, i, x),
                                          _pconj(system._cvar(var_name, j, y))))
                    for x in range(d) for y in range(d)
                ]
            for c in range(size):
                acc = {}
                if r < h:
                    for s in np.nonzero(lifted[r])[0]:
                        _padd(acc, system._cvar(f_in, int(s), c), lifted[r, s])
                else:
                    for s, coef in row:
                        _padd(acc, _pmul(coef, system._cvar(f_in, s, c)))
                for m in range(size):
                    _padd(acc, _pmul(system._cvar(f_out, r, m), system._cvar(a_name, m, c)), -1.0)
                yield from _emit_complex(acc)

    system.constraints.append(ConstraintBlock(condition, a_name, 2 * size * size, ev, ex))


def _check_target(machine, target_dim, strict):
    n = machine.dimension
    if target_dim < 1:
        raise ValueError("target dimension must be >= 1")
    if strict and target_dim >= n:
        raise ValueError(f"target dimension {target_dim} must be smaller than {n}")


def _machine_blocks(system):
    d = system.target_dim
    for s in system.machine.inputs:
        system._add_block(f"U.{s}", (d, d))
    for g in system.machine.outputs:
        system._add_block(f"M.{g}", (d, d))
    system._add_block("rho", (d, d))
    system._add_block("L", (d, d))


def encode_problem2(machine, rho, k, target_dim, strict=True):
    """Conditions for a ``target_dim``-dimensional machine agreeing with
    ``(machine, rho)`` on every experiment with at most ``k`` measurements.

    Args:
        machine: the machine to be matched.
        rho: its initial state.
        k: measurement budget, at least 1.
        target_dim: dimension of the candidate machine.
        strict: require ``target_dim < machine.dimension``. Disable to
            encode self-comparisons.

    Returns:
        PolynomialSystem
    """
    if k < 1:
        raise ValueError("measurement budget k must be >= 1")
    _check_target(machine, target_dim, strict)
    system = PolynomialSystem(machine, rho, 2, int(k), target_dim)
    size = system.size
    _machine_blocks(system)
    for l in range(k + 1):
        system._add_block(f"F.{l}", (size, size))
    for l in range(k + 1):
        for s in machine.inputs:
            system._add_block(f"Ain.{s}.{l}", (size, size))
    for l in range(k):
        for g in machine.outputs:
            system._add_block(f"Aout.{g}.{l}", (size, size))

    _init_block(system, "F.0")
    for l in range(k + 1):
        _trace_block(system, f"F.{l}")
    for l in range(k + 1):
        for i, s in enumerate(machine.inputs):
            _step_block(system, "intertwine", machine.unitaries[i], f"U.{s}",
                        f"F.{l}", f"F.{l}", f"Ain.{s}.{l}")
    for l in range(k):
        for i, g in enumerate(machine.outputs):
            _step_block(system, "measure-step", machine.measurements[i], f"M.{g}",
                        f"F.{l}", f"F.{l + 1}", f"Aout.{g}.{l}")
    _wellformed(system)
    return system


def encode_problem1(machine, rho, target_dim, strict=True):
    """Conditions for a ``target_dim``-dimensional machine equivalent to
    ``(machine, rho)`` with no bound on the number of measurements.

    A single ``F`` and one ``A`` matrix per symbol suffice.
    """
    _check_target(machine, target_dim, strict)
    system = PolynomialSystem(machine, rho, 1, None, target_dim)
    size = system.size
    _machine_blocks(system)
    system._add_block("F", (size, size))
    for s in machine.inputs:
        system._add_block(f"Ain.{s}", (size, size))
    for g in machine.outputs:
        system._add_block(f"Aout.{g}", (size, size))

    _init_block(system, "F")
    _trace_block(system, "F")
    for i, s in enumerate(machine.inputs):
        _step_block(system, "intertwine", machine.unitaries[i], f"U.{s}", "F", "F", f"Ain.{s}")
    for i, g in enumerate(machine.outputs):
        _step_block(system, "measure-step", machine.measurements[i], f"M.{g}", "F", "F", f"Aout.{g}")
    _wellformed(system)
    return system


def _columns(ops, n1, size):
    """Span basis of ``ops`` as stacked block vectorizations.

    The first column is the first operator itself; the others are the
    orthonormal Gram-Schmidt elements. Short bases are padded by repeating
    the last column.
    """
    tracker = SpanTracker(ops[0].shape[0])
    for op in ops:
        tracker.extend(op)
    elems = tracker.orthogonal_elements
    elems[0] = ops[0]
    cols = [np.concatenate([vectorize(e[:n1, :n1]), vectorize(e[n1:, n1:])]) for e in elems]
    if len(cols) > size:
        raise RuntimeError("span basis larger than the ambient dimension")
    cols += [cols[-1]] * (size - len(cols))
    return np.column_stack(cols)


def _solve(f_out, target):
    a, *_ = np.linalg.lstsq(f_out, target, rcond=None)
    return a


def _block_lift(m1, m2):
    h1, h2 = m1.shape[0] ** 2, m2.shape[0] ** 2
    out = np.zeros((h1 + h2, h1 + h2), dtype=complex)
    out[:h1, :h1] = lift(m1)
    out[h1:, h1:] = lift(m2)
    return out


def _psd_factor(rho):
    w, v = np.linalg.eigh(rho)
    return v * np.sqrt(np.clip(w, 0.0, None))


def construct_witness(m1, rho1, m2, rho2, k=None):
    """Assignment built from span bases of the direct-sum reachable set.

    With ``k=None`` the assignment targets :func:`encode_problem1`,
    otherwise :func:`encode_problem2` with the same ``k``. It satisfies the
    system exactly when the two machines are equivalent (up to ``k``
    measurements); otherwise the trace condition fails.

    Returns:
        dict mapping block names to complex matrices.
    """
    if k is not None and k < 1:
        raise ValueError("measurement budget k must be >= 1")
    rho1, rho2 = as_state(rho1), as_state(rho2)
    n1 = m1.dimension
    size = n1 * n1 + m2.dimension ** 2
    joint = direct_sum(m1, m2)
    s, t = embed_states(rho1, rho2)
    layers = explore(joint, s + t, k=k, real_mode=False)
    basis = [_columns([op for _, op in layer], n1, size) for layer in layers]

    assign = {f"U.{x}": m2.unitaries[i] for i, x in enumerate(m2.inputs)}
    assign.update({f"M.{g}": m2.measurements[i] for i, g in enumerate(m2.outputs)})
    assign["rho"] = rho2
    assign["L"] = _psd_factor(rho2)
    ups = [_block_lift(m1.unitaries[i], m2.unitaries[i]) for i in range(len(m1.inputs))]
    downs = [_block_lift(m1.measurements[i], m2.measurements[i]) for i in range(len(m1.outputs))]

    if k is None:
        f = basis[0]
        assign["F"] = f
        for i, x in enumerate(m1.inputs):
            assign[f"Ain.{x}"] = _solve(f, ups[i] @ f)
        for i, g in enumerate(m1.outputs):
            assign[f"Aout.{g}"] = _solve(f, downs[i] @ f)
        return assign

    for l, f in enumerate(basis):
        assign[f"F.{l}"] = f
        for i, x in enumerate(m1.inputs):
            assign[f"Ain.{x}.{l}"] = _solve(f, ups[i] @ f)
        if l < k:
            for i, g in enumerate(m1.outputs):
                assign[f"Aout.{g}.{l}"] = _solve(basis[l + 1], downs[i] @ f)
    return assign


@dataclass
class VerificationReport:
    """Residuals of an assignment, grouped by condition."""

    passed: bool
    max_residual: float
    by_condition: dict
    violated: list
    residuals: np.ndarray = field(repr=False)

    def __str__(self):
        head = "PASS" if self.passed else "FAIL"
        rows = [f"{head} (max residual {self.max_residual:.3e})"]
        rows += [f"  {c}: {r:.3e}" for c, r in self.by_condition.items()]
        return "\n".join(rows)


def verify_assignment(system, assignment, tol=VERIFY_TOL):
    """Evaluate every constraint of ``system`` at ``assignment``.

    Args:
        system: a :class:`PolynomialSystem`.
        assignment: dict of block name to complex matrix covering every
            block of the system.
        tol: pass threshold on the largest absolute residual.

    Raises:
        KeyError: when a block is missing from the assignment.
    """
    missing = [name for name in system.blocks if name not in assignment]
    if missing:
        raise KeyError(f"assignment is missing variables: {', '.join(missing)}")
    by_cond = {}
    parts = []
    for block in system.constraints:
        r = np.abs(np.asarray(block.evaluate(assignment), dtype=float))
        parts.append(r)
        worst = float(r.max()) if r.size else 0.0
        by_cond[block.condition] = max(by_cond.get(block.condition, 0.0), worst)
    res = np.concatenate(parts) if parts else np.zeros(0)
    worst = float(res.max()) if res.size else 0.0
    violated = [c for c, r in by_cond.items() if r > tol]
    return VerificationReport(worst <= tol, worst, by_cond, violated, res)


def evaluate_terms(terms, x):
    """Value of one expanded equation at the real variable vector ``x``."""
    return sum(c * np.prod([x[i] for i in m]) for c, m in terms)


@dataclass
class ParsedSystem:
    """Contents of a serialized system."""

    header: dict
    variables: list
    equations: list

    def evaluate(self, x):
        return np.array([evaluate_terms(t, x) for _, t in self.equations])


def parse_system_text(text):
    """Read the line format written by :meth:`PolynomialSystem.to_text`."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ValueError("missing polynomial-system header")
    header, variables, equations = {}, [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "var":
            if int(parts[1]) != len(variables):
                raise ValueError(f"line {lineno}: variable index out of order")
            variables.append(parts[2])
        elif key == "eq":
            body = parts[2:]
            if len(body) % 2:
                raise ValueError(f"line {lineno}: unpaired coefficient")
            terms = []
            for c, mono in zip(body[0::2], body[1::2]):
                idx = () if mono == "1" else tuple(int(t[1:]) for t in mono.split("*"))
                terms.append((float(c), idx))
            equations.append((parts[1], terms))
        elif len(parts) == 2:
            header[key] = parts[1]
        else:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
    if int(header.get("variables", -1)) != len(variables):
        raise ValueError("variable count does not match header")
    if int(header.get("constraints", -1)) != len(equations):
        raise ValueError("constraint count does not match header")
    return ParsedSystem(header, variables, equations)
