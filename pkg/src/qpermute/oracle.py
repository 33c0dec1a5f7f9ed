"""Brute-force ground truth for the device: direct operator products and the two-copy circuit.

Nothing here touches the switch network. :func:`meta_operator_output` multiplies
the operators named by each bin's digit sequence; :func:`q2_permute` writes the
two-operator superposition down directly; :func:`circuit_n2` simulates the
three-wire controlled-swap circuit that uses two copies of each operator.

Bin convention for N = M = 2: control ``|0>`` (ordering ``U0 U1``, so ``U1``
acts first) is bin 2, control ``|1>`` (``U1 U0``) is bin 1. See
:data:`Q2_BIN_FOR_CONTROL`.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ConsistencyError, NormalizationError
from .network import is_power_of_two
from .schedule import bin_for_sequence, operator_sequence
from .state import NORM_TOL, PhotonState, PolarizationOperator, as_spinor, relabel_bins

# Sequences are listed in application order (first operator first).
Q2_BIN_FOR_CONTROL = {
    0: bin_for_sequence([1, 0], 2),
    1: bin_for_sequence([0, 1], 2),
}


def _check_unit(total: float, what: str) -> None:
    if abs(total - 1.0) > NORM_TOL:
        raise NormalizationError(f"{what} is not normalized (squared norm {total:.12f})")


def q2_permute(
    u0: PolarizationOperator,
    u1: PolarizationOperator,
    alpha: complex,
    beta: complex,
    psi,
) -> PhotonState:
    """``alpha |0> (U0 U1 psi) + beta |1> (U1 U0 psi)`` as a 2-bin, 1-mode state."""
    psi = as_spinor(psi)
    _check_unit(abs(alpha) ** 2 + abs(beta) ** 2, "control qubit")
    _check_unit(float(np.vdot(psi, psi).real), "input polarization")
    amps = {
        (0, 0): alpha * (u0.matrix @ (u1.matrix @ psi)),
        (1, 0): beta * (u1.matrix @ (u0.matrix @ psi)),
    }
    return PhotonState(amps, n_modes=1, n_bins=2)


def embed_q2(state: PhotonState, n_modes: int = 2) -> PhotonState:
    """Place a control-indexed 2-bin state into the N = M = 2 device's bin space."""
    return relabel_bins(state, Q2_BIN_FOR_CONTROL, n_modes=n_modes, n_bins=4)


def meta_operator(operators: Sequence[PolarizationOperator], i: int, n: int, m: int) -> np.ndarray:
    """Matrix of ``O_i = O_{i,M-1} ... O_{i,0}``."""
    out = np.eye(2, dtype=complex)
    for l in operator_sequence(i, n, m):
        out = operators[l].matrix @ out
    return out


def meta_operator_output(
    operators: Sequence[PolarizationOperator],
    control: Mapping[int, complex],
    psi,
    n: int,
    m: int,
) -> PhotonState:
    """``sum_i alpha_i O_i psi`` placed at ``(t_i, x_0)`` in an ``n``-mode, ``n^m``-bin space."""
    if len(operators) != n:
        raise ConfigurationError(f"need {n} operators, got {len(operators)}")
    psi = as_spinor(psi)
    _check_unit(float(np.vdot(psi, psi).real), "input polarization")
    _check_unit(sum(abs(a) ** 2 for a in control.values()), "control register")
    amps = {}
    for i, a in control.items():
        if a != 0:
            amps[(i, 0)] = a * (meta_operator(operators, i, n, m) @ psi)
    return PhotonState(amps, n_modes=n, n_bins=n**m)


# Wire basis for the circuit model: 0 = empty (vacuum), 1 = photon H, 2 = photon V.
VACUUM = np.array([1, 0, 0], dtype=complex)


def _on_wire(u: np.ndarray) -> np.ndarray:
    """Extend a polarization unitary to a wire: identity on vacuum, ``u`` on the photon."""
    out = np.zeros((3, 3), dtype=complex)
    out[0, 0] = 1
    out[1:, 1:] = u
    return out


def _wire_state(spinor: np.ndarray) -> np.ndarray:
    return np.concatenate([[0], spinor]).astype(complex)


def _cswap(state: np.ndarray) -> np.ndarray:
    out = state.copy()
    out[1] = state[1].T
    return out


def circuit_n2(
    u0: PolarizationOperator,
    u1: PolarizationOperator,
    alpha: complex,
    beta: complex,
    psi,
    ancilla=None,
    tol: float = 1e-9,
) -> PhotonState:
    """Simulate the control/data/ancilla circuit with two copies of each operator.

    Controlled-swap(data, ancilla), then ``U0 U1`` on the data wire and ``U1 U0``
    on the ancilla wire, then a second controlled-swap. Each wire is an optical
    path that is either empty or carries a photon; the operators act on the
    photon's polarization and leave an empty path alone. The ancilla starts
    empty unless ``ancilla`` gives a polarization spinor for a second photon.

    Returns the (control, data) part as a 2-bin, 1-mode state with bin = control
    value. Raises :class:`ConsistencyError` when the ancilla ends entangled with
    the rest or the data wire ends empty.
    """
    psi = as_spinor(psi)
    _check_unit(abs(alpha) ** 2 + abs(beta) ** 2, "control qubit")
    _check_unit(float(np.vdot(psi, psi).real), "input polarization")
    anc0 = VACUUM if ancilla is None else _wire_state(as_spinor(ancilla) / np.linalg.norm(ancilla))

    # state[c, d, a]: control, data wire, ancilla wire
    state = np.einsum("c,d,a->cda", np.array([alpha, beta]), _wire_state(psi), anc0)
    state = _cswap(state)
    data_op = _on_wire(u0.matrix @ u1.matrix)
    anc_op = _on_wire(u1.matrix @ u0.matrix)
    state = np.einsum("xd,ya,cda->cxy", data_op, anc_op, state)
    state = _cswap(state)

    # Schmidt decomposition across (control, data) | ancilla
    flat = state.reshape(6, 3)
    _, s, vh = np.linalg.svd(flat)
    if s[1] > tol:
        raise ConsistencyError(f"ancilla is entangled with control/data (second Schmidt value {s[1]:.3e})")
    anc_final = vh[0]
    reduced = (flat @ anc_final.conj()).reshape(2, 3)
    # Fix the global phase against the ancilla's own reference rather than the SVD's arbitrary one.
    phase = np.vdot(anc0, anc_final)
    if abs(phase) > tol:
        reduced = reduced * (phase / abs(phase))
    if np.max(np.abs(reduced[:, 0])) > tol:
        raise ConsistencyError("data wire ends (partly) empty")
    amps = {(c, 0): reduced[c, 1:] for c in range(2) if np.any(reduced[c, 1:] != 0)}
    return PhotonState(amps, n_modes=1, n_bins=2)


def resource_counts(n: int) -> tuple[int, int]:
    """``(switches in the optical device, copies of each operator in the circuit model)``.

    The circuit model also needs O(n^2) ancillary operators and extra qubits;
    that construction is not built here.
    """
    if n < 2 or not is_power_of_two(n):
        raise ConfigurationError(f"n must be a power of two >= 2, got {n}")
    return 2 * n - 2, n


def haar_random_unitary(seed: int | np.random.Generator) -> PolarizationOperator:
    """2x2 Haar-random unitary: QR of a complex Ginibre matrix with the R phases divided out."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return PolarizationOperator(q)


def haar_random_spinor(seed: int | np.random.Generator) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def random_amplitudes(bins, seed: int | np.random.Generator) -> dict[int, complex]:
    """Normalized complex-Gaussian amplitudes over ``bins``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bins = sorted(bins)
    z = rng.standard_normal(len(bins)) + 1j * rng.standard_normal(len(bins))
    z /= np.linalg.norm(z)
    return {i: complex(a) for i, a in zip(bins, z)}
