"""Seeded random machines, states and known-equivalent constructions."""

import numpy as np
from scipy.linalg import expm
from scipy.stats import ortho_group, unitary_group

from .model import QuantumMealyMachine, conjugate_machine

INPUTS = ("a", "b")
OUTPUTS = ("0", "1")


def random_unitary(n, rng, real=False):
    """Haar-random unitary (orthogonal when ``real``)."""
    if n == 1:
        return np.array([[1.0 if real else np.exp(2j * np.pi * rng.random())]], dtype=complex)
    group = ortho_group if real else unitary_group
    return np.asarray(group.rvs(n, random_state=rng), dtype=complex)


def random_density(n, rng, rank=None, real=False):
    """Random density operator of the given rank (full rank by default)."""
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank))
    if not real:
        g = g + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_measurement(n, n_outcomes, rng, real=False):
    """Kraus operators of a random complete measurement.

    Blocks of a random isometry ``C^n -> C^(n * n_outcomes)``.
    """
    v = random_unitary(n * n_outcomes, rng, real=real)[:, :n]
    return [v[i * n:(i + 1) * n] for i in range(n_outcomes)]


def random_machine(n, rng, n_inputs=2, n_outputs=2, real=False):
    inputs = INPUTS[:n_inputs] if n_inputs <= len(INPUTS) else tuple(f"a{i}" for i in range(n_inputs))
    outputs = OUTPUTS[:n_outputs] if n_outputs <= len(OUTPUTS) else tuple(str(i) for i in range(n_outputs))
    return QuantumMealyMachine(
        inputs, outputs,
        [random_unitary(n, rng, real) for _ in inputs],
        random_measurement(n, len(outputs), rng, real),
    )


def _block_diag(mats):
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for m in mats:
        k = m.shape[0]
        out[i:i + k, i:i + k] = m
        i += k
    return out


def block_machine(sizes, rng, n_inputs=2, n_outputs=2, real=False):
    """Machine whose operators are all block diagonal with the given block sizes.

    Coherences between blocks never influence an outcome probability.
    """
    parts = [random_machine(s, rng, n_inputs, n_outputs, real) for s in sizes]
    return QuantumMealyMachine(
        parts[0].inputs, parts[0].outputs,
        [_block_diag([p.unitaries[i] for p in parts]) for i in range(n_inputs)],
        [_block_diag([p.measurements[i] for p in parts]) for i in range(n_outputs)],
    )


def rephase_blocks(rho, sizes, rng, real=False):
    """``D rho D^dagger`` with ``D`` a random phase on each block.

    The diagonal blocks of ``rho`` are unchanged.
    """
    if real:
        phases = rng.choice([-1.0, 1.0], size=len(sizes))
        phases[0] = 1.0
        if len(sizes) > 1 and np.all(phases == 1.0):
            phases[-1] = -1.0
    else:
        phases = np.exp(2j * np.pi * rng.random(len(sizes)))
    d = np.concatenate([np.full(s, p) for s, p in zip(sizes, phases)])
    return (d[:, None] * rho) * np.conj(d)[None, :]


def random_trial(rng, n_max=3):
    """A random checking instance mixing equivalent and inequivalent pairs.

    Returns ``(machine, rho_s, rho_t, kind)``. The pair is equivalent by
    construction for kinds ``"coherence"`` and ``"shared"``; other kinds
    are generic.
    """
    n = 1 if rng.random() < 0.1 else int(rng.integers(2, n_max + 1))
    n_in = int(rng.integers(1, 3))
    # a single outcome carries no information, keep it rare
    n_out = 1 if rng.random() < 0.15 else 2
    real = bool(rng.random() < 0.3)
    kind = str(rng.choice(["generic", "coherence", "shared", "pure"])) if n > 1 else "generic"
    if kind == "coherence":
        sizes = [1, n - 1] if n == 2 or rng.random() < 0.5 else [n - 1, 1]
        m = block_machine(sizes, rng, n_in, n_out, real)
        rho = random_density(n, rng, real=real)
        return m, rho, rephase_blocks(rho, sizes, rng, real), kind
    m = random_machine(n, rng, n_in, n_out, real)
    if kind == "shared":
        rho = random_density(n, rng, real=real)
        return m, rho, rho.copy(), kind
    rank = 1 if kind == "pure" else None
    return m, random_density(n, rng, rank, real), random_density(n, rng, rank, real), kind


def basis_change_pair(n, rng, n_inputs=2, n_outputs=2, real=False):
    """``(M1, rho1, M2, rho2, W)`` with ``M2 = W M1 W^dagger`` and ``rho2 = W rho1 W^dagger``."""
    m1 = random_machine(n, rng, n_inputs, n_outputs, real)
    rho1 = random_density(n, rng, real=real)
    w = random_unitary(n, rng, real=real)
    return m1, rho1, conjugate_machine(m1, w), w @ rho1 @ w.conj().T, w


def perturb_unitary(machine, index, angle, rng):
    """Replace unitary ``index`` by ``U exp(i angle H)`` with ``|H|_2 = 1``."""
    g = rng.normal(size=machine.unitaries.shape[1:]) + 1j * rng.normal(size=machine.unitaries.shape[1:])
    h = g + g.conj().T
    h /= np.max(np.abs(np.linalg.eigvalsh(h)))
    us = [u.copy() for u in machine.unitaries]
    us[index] = us[index] @ expm(1j * angle * h)
    return QuantumMealyMachine(machine.inputs, machine.outputs, us, list(machine.measurements))
