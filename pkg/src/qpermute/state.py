"""Single-photon state: a polarization qubit spread over time bins and spatial modes.

The photon lives in the single-excitation sector of ``B`` time bins times ``N``
spatial modes, each slot carrying a two-component polarization spinor in a
fixed (h, v) basis. Only occupied slots are stored; an absent slot is vacuum.
Everything here is immutable: operations return new states.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from types import MappingProxyType

import numpy as np

from .errors import DimensionError, NormalizationError, RangeError

Slot = tuple[int, int]  # (time bin, spatial mode)

UNITARY_TOL = 1e-10
NORM_TOL = 1e-9


def as_spinor(value) -> np.ndarray:
    """Coerce ``value`` into a finite length-2 complex vector."""
    v = np.asarray(value, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise DimensionError(f"polarization spinor must have 2 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("polarization spinor has non-finite entries")
    return v


class PolarizationOperator:
    """A 2x2 unitary acting on the polarization qubit.

    Unitarity is checked at construction (max-norm of ``M^dagger M - I`` at most
    ``tol``), so downstream code never has to re-check it.
    """

    __slots__ = ("_m", "label")

    def __init__(self, matrix, label: str | None = None, tol: float = UNITARY_TOL):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise DimensionError(f"polarization operator must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("polarization operator has non-finite entries")
        residual = unitarity_residual(m)
        if residual > tol:
            raise ValueError(f"operator is not unitary (residual {residual:.3e} > {tol:.0e})")
        m.setflags(write=False)
        self._m = m
        self.label = label

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dagger(self) -> PolarizationOperator:
        return PolarizationOperator(self._m.conj().T)

    def __matmul__(self, other):
        if isinstance(other, PolarizationOperator):
            return PolarizationOperator(self._m @ other._m)
        return self._m @ as_spinor(other)

    def __eq__(self, other):
        if not isinstance(other, PolarizationOperator):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    def __hash__(self):
        return hash(self._m.tobytes())

    def __repr__(self):
        name = f" {self.label}" if self.label else ""
        return f"PolarizationOperator{name}({self._m.tolist()})"

    @classmethod
    def identity(cls) -> PolarizationOperator:
        return cls(np.eye(2), label="I")


def unitarity_residual(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


_s = 1 / np.sqrt(2)
GATES: dict[str, PolarizationOperator] = {
    "I": PolarizationOperator([[1, 0], [0, 1]], "I"),
    "X": PolarizationOperator([[0, 1], [1, 0]], "X"),
    "Y": PolarizationOperator([[0, -1j], [1j, 0]], "Y"),
    "Z": PolarizationOperator([[1, 0], [0, -1]], "Z"),
    "H": PolarizationOperator([[_s, _s], [_s, -_s]], "H"),
    "S": PolarizationOperator([[1, 0], [0, 1j]], "S"),
    "T": PolarizationOperator([[1, 0], [0, np.exp(1j * np.pi / 4)]], "T"),
}


class PhotonState:
    """Sparse map ``(time_bin, spatial_mode) -> spinor`` for one photon.

    Attributes:
        n_modes: number of spatial modes ``N``.
        n_bins: number of time bins ``B``.
        amps: read-only view of the occupied slots.
    """

    __slots__ = ("_amps", "n_modes", "n_bins")

    def __init__(self, amps: Mapping[Slot, object], n_modes: int, n_bins: int):
        if n_modes < 1 or n_bins < 1:
            raise DimensionError("a photon state needs at least one mode and one bin")
        stored = {}
        for (t, x), spinor in amps.items():
            t, x = int(t), int(x)
            if not 0 <= t < n_bins:
                raise RangeError(f"time bin {t} outside [0, {n_bins})")
            if not 0 <= x < n_modes:
                raise RangeError(f"spatial mode {x} outside [0, {n_modes})")
            v = as_spinor(spinor)
            v.setflags(write=False)
            stored[(t, x)] = v
        self._amps = stored
        self.n_modes = n_modes
        self.n_bins = n_bins

    @classmethod
    def from_register(
        cls,
        amplitudes: Mapping[int, complex],
        psi,
        n_modes: int,
        n_bins: int,
        mode: int = 0,
    ) -> PhotonState:
        """Build ``sum_i alpha_i |psi>_{t_i, x_mode}``, normalizing ``alpha`` and ``psi``.

        Bins whose amplitude is exactly zero are left unoccupied.
        """
        alpha = {int(i): complex(a) for i, a in amplitudes.items()}
        a_norm = np.sqrt(sum(abs(a) ** 2 for a in alpha.values()))
        if a_norm == 0 or not np.isfinite(a_norm):
            raise NormalizationError("control amplitudes have zero (or non-finite) norm")
        spinor = as_spinor(psi)
        s_norm = np.linalg.norm(spinor)
        if s_norm == 0:
            raise NormalizationError("polarization spinor has zero norm")
        spinor = spinor / s_norm
        amps = {(i, mode): (a / a_norm) * spinor for i, a in alpha.items() if a != 0}
        return cls(amps, n_modes, n_bins)

    @property
    def amps(self) -> Mapping[Slot, np.ndarray]:
        return MappingProxyType(self._amps)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_bins, self.n_modes)

    def spinor(self, time_bin: int, mode: int) -> np.ndarray:
        v = self._amps.get((time_bin, mode))
        return np.zeros(2, dtype=complex) if v is None else v

    def occupied_bins(self) -> list[int]:
        return sorted({t for t, _ in self._amps})

    def occupied_modes(self) -> list[int]:
        return sorted({x for _, x in self._amps})

    def with_amps(self, amps: Mapping[Slot, object]) -> PhotonState:
        return PhotonState(amps, self.n_modes, self.n_bins)

    def to_dense(self) -> np.ndarray:
        """Dense ``(B, N, 2)`` array; only sensible for small states."""
        out = np.zeros((self.n_bins, self.n_modes, 2), dtype=complex)
        for (t, x), v in self._amps.items():
            out[t, x] = v
        return out

    def allclose(self, other: PhotonState, atol: float = 1e-12) -> bool:
        if self.shape != other.shape:
            return False
        keys = self._amps.keys() | other._amps.keys()
        return all(np.allclose(self.spinor(*k), other.spinor(*k), rtol=0, atol=atol) for k in keys)

    def __len__(self):
        return len(self._amps)

    def __repr__(self):
        body = ", ".join(
            f"(t{t},x{x}): [{v[0]:.4g}, {v[1]:.4g}]" for (t, x), v in sorted(self._amps.items())
        )
        return f"PhotonState(B={self.n_bins}, N={self.n_modes}, {{{body}}})"


def norm(state: PhotonState) -> float:
    return float(np.sqrt(sum(np.vdot(v, v).real for v in state.amps.values())))


def normalize(state: PhotonState) -> PhotonState:
    nrm = norm(state)
    if nrm == 0:
        raise NormalizationError("cannot normalize the zero state")
    return state.with_amps({k: v / nrm for k, v in state.amps.items()})


def is_normalized(state: PhotonState, tol: float = NORM_TOL) -> bool:
    return abs(norm(state) - 1.0) <= tol


def inner(a: PhotonState, b: PhotonState) -> complex:
    """``<a|b>`` over the joint (time, space, polarization) space."""
    if a.shape != b.shape:
        raise DimensionError(f"state shapes differ: {a.shape} vs {b.shape}")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for key in small.amps:
        if key in large.amps:
            total += np.vdot(a.amps[key], b.amps[key])
    return complex(total)


def fidelity(a: PhotonState, b: PhotonState) -> float:
    """Pure-state fidelity ``|<a|b>|^2``, clipped to [0, 1].

    Both states must be normalized to within ``NORM_TOL``.
    """
    overlap = inner(a, b)
    for name, s in (("first", a), ("second", b)):
        if not is_normalized(s):
            raise NormalizationError(f"{name} state is not normalized (norm {norm(s):.12f})")
    return float(min(1.0, max(0.0, abs(overlap) ** 2)))


def apply_polarization_op(
    state: PhotonState,
    op: PolarizationOperator,
    where: Callable[[int, int], bool] | None = None,
) -> PhotonState:
    """Replace each selected spinor ``v`` with ``op @ v``; ``where=None`` selects every slot."""
    m = op.matrix
    out = {}
    for (t, x), v in state.amps.items():
        out[(t, x)] = m @ v if where is None or where(t, x) else v
    return state.with_amps(out)


def relabel_bins(
    state: PhotonState,
    bin_map: Mapping[int, int],
    n_modes: int | None = None,
    n_bins: int | None = None,
) -> PhotonState:
    """Move every slot ``(t, x)`` to ``(bin_map[t], x)`` inside a possibly larger state space."""
    n_modes = state.n_modes if n_modes is None else n_modes
    n_bins = state.n_bins if n_bins is None else n_bins
    out = {}
    for (t, x), v in state.amps.items():
        key = (bin_map[t], x)
        if key in out:
            raise ValueError(f"bin map sends two slots to {key}")
        out[key] = v
    return PhotonState(out, n_modes, n_bins)


def register_amplitudes(state: PhotonState, mode: int = 0) -> dict[int, np.ndarray]:
    """Spinors of the slots on ``mode``, keyed by time bin."""
    return {t: v for (t, x), v in sorted(state.amps.items()) if x == mode}

