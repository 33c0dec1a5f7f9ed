"""Pass-to-pass drift of the operator bank.

Each physical operator is met once per pass, at a different time, so each pass
sees a slightly different version of it. Drift is modeled as a random SU(2)
rotation ``R`` pre-multiplied onto the ideal operator, with a uniformly random
axis and an angle ``sigma * |z|``, ``z ~ Normal(0, 1)``. Draws are keyed on
``(seed, pass, operator index)`` and are independent across operators within a
pass. Scaling a fixed standard-normal draw by ``sigma`` gives common random
numbers across a sweep, so the sweep curve is smooth in ``sigma``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .config import SimulationConfig
from .network import run_device
from .oracle import meta_operator_output
from .schedule import build_schedule
from .state import PolarizationOperator, fidelity, norm

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


@dataclass(frozen=True)
class DriftParams:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """``exp(-i angle/2 axis.sigma)``."""
    gen = np.tensordot(axis, _PAULI, axes=1)
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * gen


def perturb_operator(
    u: PolarizationOperator, params: DriftParams, pass_index: int, op_index: int
) -> PolarizationOperator:
    if params.sigma == 0:
        return u
    rng = np.random.default_rng([params.seed, pass_index, op_index])
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = params.sigma * abs(rng.standard_normal())
    return PolarizationOperator(rotation(axis, angle) @ u.matrix)


def drifted_bank(config: SimulationConfig, params: DriftParams) -> list[list[PolarizationOperator]]:
    """Operator bank seen on each pass."""
    return [
        [perturb_operator(u, params, k, l) for l, u in enumerate(config.operators)]
        for k in range(config.m)
    ]


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    mean_fidelity: float
    std_fidelity: float
    trials: int
    max_norm_error: float

    @property
    def mean_infidelity(self) -> float:
        return 1.0 - self.mean_fidelity


def drift_fidelity_sweep(
    config: SimulationConfig, sigmas: Iterable[float], trials: int
) -> list[SweepRow]:
    """Mean/std fidelity of drifted device runs against the drift-free oracle.

    Trial ``t`` uses drift seed ``config.seed + t`` for every sigma.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    schedule = build_schedule(config.scheduler_params(), occupied_bins=config.occupied_bins)
    ideal = meta_operator_output(
        config.operators, config.normalized_control(), config.normalized_polarization(), config.n, config.m
    )
    rows = []
    for sigma in sigmas:
        fids, norm_err = [], 0.0
        for t in range(trials):
            bank = drifted_bank(config, DriftParams(float(sigma), config.seed + t))
            out = run_device(config, schedule, pass_operators=bank)
            norm_err = max(norm_err, abs(norm(out) - 1.0))
            fids.append(fidelity(out, ideal))
        rows.append(SweepRow(float(sigma), float(np.mean(fids)), float(np.std(fids)), trials, norm_err))
    return rows


def loglog_slope(rows: list[SweepRow]) -> float:
    """Least-squares slope of log(mean infidelity) against log(sigma), over rows with sigma > 0."""
    pts = [(math.log(r.sigma), math.log(r.mean_infidelity)) for r in rows if r.sigma > 0]
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def format_table(rows: list[SweepRow], delimiter: str = ",") -> str:
    lines = [delimiter.join(["sigma", "mean_fidelity", "std_fidelity", "trials"])]
    for r in rows:
        lines.append(delimiter.join([f"{r.sigma:.6g}", f"{r.mean_fidelity:.12f}", f"{r.std_fidelity:.3e}", str(r.trials)]))
    return "\n".join(lines) + "\n"
