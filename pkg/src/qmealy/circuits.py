"""Qubit-circuit machine descriptions (``.qmm`` files) and benchmark cases.

Grammar (line oriented, ``#`` starts a comment)::

    qubits <q>
    gates
      <symbol> = <GATE> <qubit> [<qubit>]     # H X Y Z S T CNOT CZ SWAP
      <symbol> = matrix <row>; <row>; ...     # explicit 2^q x 2^q matrix
    measure <qubit> [<qubit> ...]
    states
      <name> = ket <bits>
      <name> = bell <xy> [<qubit> <qubit>]
      <name> = matrix <row>; <row>; ...

Rows of a matrix literal are separated by ``;`` and entries by ``,``.
Entries are complex numbers such as ``1``, ``-0.5``, ``0.5+0.5i``, ``i``
or small expressions like ``1/sqrt(2)`` and ``-i/sqrt(2)``. Qubit 0 is
the leftmost symbol of a ket and the most significant bit of a basis index.
A section header may carry its first entry on the same line
(``measure 0``).
"""

import ast
import math
import operator
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .model import DensityOperator, QuantumMealyMachine

SQ2 = 1 / math.sqrt(2)

SINGLE_QUBIT = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * SQ2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
}
TWO_QUBIT = ("CNOT", "CZ", "SWAP")

DATA_DIR = Path(__file__).parent / "data"


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)
        self.message = message
        self.line = line
        self.column = column


@dataclass
class GateBinding:
    gate: str  # builtin gate id, or "matrix"
    qubits: Tuple[int, ...] = ()
    matrix: Optional[np.ndarray] = None


@dataclass
class StateBinding:
    kind: str  # "ket", "bell" or "matrix"
    bits: str = ""
    qubits: Tuple[int, ...] = ()
    matrix: Optional[np.ndarray] = None


@dataclass
class MachineSpec:
    qubit_count: int
    gates: Dict[str, GateBinding] = field(default_factory=dict)
    measured_qubits: Tuple[int, ...] = ()
    states: Dict[str, StateBinding] = field(default_factory=dict)

    @property
    def dimension(self):
        return 2 ** self.qubit_count


# -- matrix literals ---------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": np.emath.sqrt, "exp": np.exp, "cos": np.cos, "sin": np.sin}
_NAMES = {"i": 1j, "j": 1j, "pi": math.pi}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def parse_entry(text):
    """Parse one complex matrix entry such as ``0.5-0.5i`` or ``1/sqrt(2)``."""
    src = text.strip()
    if not src:
        raise ValueError("empty entry")
    # 0.5i -> 0.5*i, 2i -> 2*i; a bare "i" stays a name
    out = []
    for idx, ch in enumerate(src):
        if ch in "ij" and idx > 0 and (src[idx - 1].isdigit() or src[idx - 1] == "."):
            out.append("*")
        out.append(ch)
    return complex(_eval_node(ast.parse("".join(out), mode="eval")))


def parse_matrix(text):
    rows = [r for r in text.split(";")]
    if rows and not rows[-1].strip():
        rows = rows[:-1]
    data = [[parse_entry(e) for e in row.split(",")] for row in rows]
    if not data or any(len(r) != len(data[0]) for r in data):
        raise ValueError("matrix rows have unequal lengths")
    return np.array(data, dtype=complex)


# -- parser ------------------------------------------------------------------

def _int_token(tok, line, col, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected {what}, got {tok!r}", line, col) from None


def parse_machine_spec(text):
    """Parse ``.qmm`` text into a :class:`MachineSpec`.

    Raises:
        ParseError: with the line and column of the offending token.
    """
    qubits = None
    section = None
    gates: Dict[str, GateBinding] = {}
    states: Dict[str, StateBinding] = {}
    measured: Optional[Tuple[int, ...]] = None
    measure_line = 0

    def check_qubit(q, line, col):
        if qubits is None:
            raise ParseError("'qubits' must be declared first", line, col)
        if not 0 <= q < qubits:
            raise ParseError(f"qubit index {q} out of range [0, {qubits})", line, col)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        stripped = body.strip()
        head, _, rest = stripped.partition(" ")
        if head == "qubits":
            q = _int_token(rest.strip(), lineno, indent + 8, "a qubit count")
            if q < 1:
                raise ParseError("qubit count must be >= 1", lineno, indent + 8)
            qubits = q
            section = None
            continue
        if head in ("gates", "states"):
            section = head
            if not rest.strip():
                continue
            stripped = rest.strip()
            indent = body.index(stripped)
        elif head == "measure":
            section = "measure"
            measure_line = lineno
            measured = measured or ()
            col = indent + len(head) + 1
            for tok in rest.split():
                col = body.index(tok, col)
                q = _int_token(tok, lineno, col + 1, "a qubit index")
                check_qubit(q, lineno, col + 1)
                if q in measured:
                    raise ParseError(f"qubit {q} measured twice", lineno, col + 1)
                measured = measured + (q,)
                col += len(tok)
            continue

        if section == "measure":
            raise ParseError(f"unexpected line in measure section: {stripped!r}", lineno, indent + 1)
        if section not in ("gates", "states"):
            raise ParseError(f"unknown directive {head!r}", lineno, indent + 1)
        name, eq, value = stripped.partition("=")
        name = name.strip()
        if not eq or not name or " " in name:
            raise ParseError("expected '<name> = <definition>'", lineno, indent + 1)
        vcol = body.index("=", indent) + 2
        value = value.strip()
        kind, _, args = value.partition(" ")
        if section == "gates":
            if name in gates:
                raise ParseError(f"duplicate input symbol {name!r}", lineno, indent + 1)
            gates[name] = _parse_gate(kind, args, lineno, vcol, check_qubit, qubits)
        else:
            if name in states:
                raise ParseError(f"duplicate state {name!r}", lineno, indent + 1)
            states[name] = _parse_state(kind, args, lineno, vcol, check_qubit, qubits)

    if qubits is None:
        raise ParseError("missing 'qubits' declaration")
    if not gates:
        raise ParseError("no input symbols")
    if not measured:
        raise ParseError("no measured qubits", measure_line or None, 1 if measure_line else None)
    return MachineSpec(qubits, gates, measured, states)


def _parse_gate(kind, args, line, col, check_qubit, qubits):
    if kind == "matrix":
        try:
            m = parse_matrix(args)
        except (ValueError, SyntaxError, TypeError, ZeroDivisionError) as exc:
            raise ParseError(f"malformed matrix literal ({exc})", line, col) from None
        d = 2 ** qubits
        if m.shape != (d, d):
            raise ParseError(f"matrix must be {d}x{d}, got {m.shape[0]}x{m.shape[1]}", line, col)
        return GateBinding("matrix", (), m)
    gate = kind.upper()
    toks = args.split()
    idx = []
    for tok in toks:
        q = _int_token(tok, line, col, "a qubit index")
        check_qubit(q, line, col)
        idx.append(q)
    if gate in SINGLE_QUBIT:
        if len(idx) != 1:
            raise ParseError(f"gate {gate} takes one qubit, got {len(idx)}", line, col)
    elif gate in TWO_QUBIT:
        if len(idx) != 2:
            raise ParseError(f"gate {gate} takes two qubits, got {len(idx)}", line, col)
        if idx[0] == idx[1]:
            raise ParseError("control equals target" if gate != "SWAP" else "swap of a qubit with itself",
                             line, col)
    else:
        raise ParseError(f"unknown gate {kind!r}", line, col)
    return GateBinding(gate, tuple(idx))


def _parse_state(kind, args, line, col, check_qubit, qubits):
    if kind == "matrix":
        try:
            m = parse_matrix(args)
        except (ValueError, SyntaxError, TypeError, ZeroDivisionError) as exc:
            raise ParseError(f"malformed matrix literal ({exc})", line, col) from None
        return StateBinding("matrix", matrix=m)
    toks = args.split()
    if kind == "ket":
        if len(toks) != 1 or set(toks[0]) - set("01") or len(toks[0]) != qubits:
            raise ParseError(f"ket needs a {qubits}-bit string", line, col)
        return StateBinding("ket", bits=toks[0])
    if kind == "bell":
        if not toks or len(toks[0]) != 2 or set(toks[0]) - set("01"):
            raise ParseError("bell needs two bits 'xy'", line, col)
        pair = (0, 1)
        if len(toks) == 3:
            pair = (_int_token(toks[1], line, col, "a qubit index"),
                    _int_token(toks[2], line, col, "a qubit index"))
        elif len(toks) != 1:
            raise ParseError("bell takes 'xy' and optionally two qubits", line, col)
        for q in pair:
            check_qubit(q, line, col)
        if pair[0] == pair[1]:
            raise ParseError("bell pair needs two distinct qubits", line, col)
        return StateBinding("bell", bits=toks[0], qubits=pair)
    raise ParseError(f"unknown state kind {kind!r}", line, col)


# -- building ----------------------------------------------------------------

def embed_gate(gate, qubits, n_qubits):
    """Full ``2^q x 2^q`` matrix of a builtin gate on the given qubits."""
    if gate in SINGLE_QUBIT:
        (q,) = qubits
        factors = [np.eye(2, dtype=complex)] * n_qubits
        factors[q] = SINGLE_QUBIT[gate]
        return reduce(np.kron, factors)
    d = 2 ** n_qubits
    out = np.zeros((d, d), dtype=complex)
    a, b = qubits
    for x in range(d):
        bits = [(x >> (n_qubits - 1 - i)) & 1 for i in range(n_qubits)]
        amp = 1.0
        if gate == "CNOT":
            if bits[a]:
                bits[b] ^= 1
        elif gate == "CZ":
            if bits[a] and bits[b]:
                amp = -1.0
        elif gate == "SWAP":
            bits[a], bits[b] = bits[b], bits[a]
        y = int("".join(map(str, bits)), 2)
        out[y, x] = amp
    return out


def basis_projectors(measured, n_qubits):
    """Projectors onto each bit pattern of the measured qubits."""
    d = 2 ** n_qubits
    outcomes = ["".join(bits) for bits in _bit_patterns(len(measured))]
    projs = {o: np.zeros((d, d), dtype=complex) for o in outcomes}
    for x in range(d):
        key = "".join(str((x >> (n_qubits - 1 - q)) & 1) for q in measured)
        projs[key][x, x] = 1.0
    return outcomes, [projs[o] for o in outcomes]


def _bit_patterns(k):
    return [format(i, f"0{k}b") if k else "" for i in range(2 ** k)]


def ket(bits):
    d = 2 ** len(bits)
    psi = np.zeros(d, dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def bell(xy, n_qubits=2, pair=(0, 1)):
    """``beta_xy = (|0y> + (-1)^x |1 not-y>)/sqrt 2`` on ``pair``, rest in |0>."""
    x, y = int(xy[0]), int(xy[1])
    d = 2 ** n_qubits
    psi = np.zeros(d, dtype=complex)
    for first, second, amp in ((0, y, 1.0), (1, 1 - y, (-1) ** x)):
        bits = [0] * n_qubits
        bits[pair[0]], bits[pair[1]] = first, second
        psi[int("".join(map(str, bits)), 2)] += amp * SQ2
    return psi


def build_machine(spec, validate=True):
    """Expand a :class:`MachineSpec` into a machine (validated by default)."""
    q = spec.qubit_count
    names, us = [], []
    for name, g in spec.gates.items():
        names.append(name)
        us.append(g.matrix if g.gate == "matrix" else embed_gate(g.gate, g.qubits, q))
    outcomes, projs = basis_projectors(spec.measured_qubits, q)
    return QuantumMealyMachine(names, outcomes, us, projs, validate=validate)


def build_state(spec, name):
    """Density matrix for a declared state, or an implicit ``ket``/``bell`` name.

    Names not declared in the file are resolved as a bit string of the
    machine's width (``"01"``) or as ``"bell<xy>"``.
    """
    q = spec.qubit_count
    b = spec.states.get(name)
    if b is None:
        if len(name) == q and not set(name) - set("01"):
            b = StateBinding("ket", bits=name)
        elif name.startswith("bell") and len(name) == 6 and not set(name[4:]) - set("01") and q >= 2:
            b = StateBinding("bell", bits=name[4:], qubits=(0, 1))
        else:
            raise KeyError(f"unknown state {name!r}")
    if b.kind == "ket":
        return DensityOperator.from_ket(ket(b.bits)).matrix
    if b.kind == "bell":
        return DensityOperator.from_ket(bell(b.bits, q, b.qubits)).matrix
    return DensityOperator(b.matrix).matrix


def load_machine(path):
    """Parse and build the machine in a ``.qmm`` file; returns ``(spec, machine)``."""
    spec = parse_machine_spec(Path(path).read_text(encoding="utf-8"))
    return spec, build_machine(spec)


def example_path(name):
    """Path of a shipped example file (``example1_M.qmm`` etc.)."""
    return DATA_DIR / name


def example1_machine(prime=False):
    name = "example1_Mprime.qmm" if prime else "example1_M.qmm"
    return load_machine(example_path(name))


def example2_machine():
    return load_machine(example_path("example2.qmm"))


# -- benchmark suite ---------------------------------------------------------

@dataclass
class BenchmarkCase:
    name: str
    machine: QuantumMealyMachine
    rho_s: np.ndarray
    rho_t: np.ndarray
    k: Optional[int] = None
    expected: Optional[bool] = None  # None: not known in advance

    @property
    def n(self):
        return self.machine.dimension


def rotation_y(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation_z(phi):
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def random_circuit_machine(n_qubits, n_inputs, rng, real=True):
    """Machine whose input symbols are random circuit layers; measures qubit 0.

    Each symbol applies a random single-qubit rotation to every qubit
    (``RY``, or ``RZ RY`` when ``real`` is False) and then a CNOT ladder
    ``CNOT[0,1] ... CNOT[q-2,q-1]``.
    """
    names, us = [], []
    for s in range(n_inputs):
        factors = []
        for _ in range(n_qubits):
            g = rotation_y(rng.uniform(0, 2 * np.pi))
            if not real:
                g = rotation_z(rng.uniform(0, 2 * np.pi)) @ g
            factors.append(g)
        u = reduce(np.kron, factors)
        for q in range(n_qubits - 1):
            u = embed_gate("CNOT", (q, q + 1), n_qubits) @ u
        names.append(f"g{s}")
        us.append(u)
    outcomes, projs = basis_projectors((0,), n_qubits)
    return QuantumMealyMachine(names, outcomes, us, projs)


def _generated_case(name, n_qubits, seed, real=True, n_inputs=2):
    rng = np.random.default_rng(seed)
    m = random_circuit_machine(n_qubits, n_inputs, rng, real=real)
    d = 2 ** n_qubits
    x, y = rng.choice(d, size=2, replace=False)
    bits = lambda v: format(int(v), f"0{n_qubits}b")
    rho_s = DensityOperator.from_ket(ket(bits(x))).matrix
    rho_t = DensityOperator.from_ket(ket(bits(y))).matrix
    return BenchmarkCase(name, m, rho_s, rho_t)


def benchmark_suite():
    """Example-derived cases plus seeded random-circuit cases.

    Example 1 maps to ``test002``/``test005``, Example 2 to
    ``test008``-``test010``; the ``gen_n*`` cases are regenerated
    deterministically for the timing study (n = 2, 4, 8, 16, 32).
    """
    _, m = example1_machine()
    _, mp = example1_machine(prime=True)
    spec2, m2 = example2_machine()
    s00 = DensityOperator.from_ket(ket("00")).matrix
    s01 = DensityOperator.from_ket(ket("01")).matrix
    b00 = build_state(spec2, "bell00")
    b10 = build_state(spec2, "bell10")
    cases = [
        BenchmarkCase("test002_ex1_M", m, s00, s01, None, True),
        BenchmarkCase("test005_ex1_Mprime", mp, s00, s01, None, False),
        BenchmarkCase("test008_ex2_k1", m2, b00, b10, 1, True),
        BenchmarkCase("test009_ex2_k2", m2, b00, b10, 2, False),
        BenchmarkCase("test010_ex2", m2, b00, b10, None, False),
    ]
    cases += [
        _generated_case("gen_n2", 1, 101),
        _generated_case("gen_n4", 2, 102, real=False),
        _generated_case("gen_n8", 3, 103),
    ]
    cases += [_generated_case(f"gen_n16_{c}", 4, 160 + i, real=(i % 2 == 0))
              for i, c in enumerate("abcd")]
    cases.append(_generated_case("gen_n32", 5, 320))
    return cases
