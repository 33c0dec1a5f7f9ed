"""Simulation configuration and its JSON document form.

Complex numbers are ``[re, im]`` pairs. A config document looks like::

    {
      "n": 2, "m": 2, "seed": 7,
      "operators": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]], "H"],
      "inputPolarization": [[1, 0], [0, 0]],
      "controlAmplitudes": "uniform-permutations",
      "timing": {"binSpacing_ps": 40, "loopDelay_ps": 200},
      "driftSigma": 0.01
    }

``operators`` may also be the string ``"haar"`` (seeded Haar-random bank) and
individual entries may name a fixed gate (I, X, Y, Z, H, S, T).
``controlAmplitudes`` is either ``{"<bin>": [re, im], ...}`` or
``"uniform-permutations"``, which forces ``m = n``.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .network import is_power_of_two
from .oracle import haar_random_unitary
from .schedule import SchedulerParams, permutation_bins
from .state import GATES, PhotonState, PolarizationOperator, as_spinor

log = logging.getLogger(__name__)

UNIFORM_PERMUTATIONS = "uniform-permutations"
DEFAULT_BIN_SPACING = 20.0


@dataclass(frozen=True)
class Timing:
    bin_spacing: float = DEFAULT_BIN_SPACING
    loop_delay: float | None = None  # None: the smallest feasible delay, N^M * bin_spacing
    switch_window: float = 10.0
    transition: float = 5.0
    level_latency: float = 0.0


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    m: int
    operators: tuple[PolarizationOperator, ...]
    input_polarization: np.ndarray
    control: Mapping[int, complex]
    timing: Timing = field(default_factory=Timing)
    seed: int = 0
    drift_sigma: float | None = None

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 2 and is_power_of_two(self.n)):
            raise ConfigurationError(f"n: must be a power of two >= 2, got {self.n!r}")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ConfigurationError(f"m: must be an integer >= 1, got {self.m!r}")
        if len(self.operators) != self.n:
            raise ConfigurationError(f"operators: need {self.n}, got {len(self.operators)}")
        total = sum(abs(a) ** 2 for a in self.control.values())
        if total == 0 or not np.isfinite(total):
            raise ConfigurationError("controlAmplitudes: not normalizable")
        for i in self.control:
            if not 0 <= i < self.n_bins:
                raise ConfigurationError(f"controlAmplitudes: bin {i} outside [0, {self.n_bins})")
        if np.linalg.norm(self.input_polarization) == 0:
            raise ConfigurationError("inputPolarization: zero vector")
        if self.drift_sigma is not None and not self.drift_sigma >= 0:
            raise ConfigurationError(f"driftSigma: must be >= 0, got {self.drift_sigma}")

    @property
    def n_bins(self) -> int:
        return self.n**self.m

    @property
    def occupied_bins(self) -> list[int]:
        return sorted(i for i, a in self.control.items() if a != 0)

    def normalized_control(self) -> dict[int, complex]:
        total = np.sqrt(sum(abs(a) ** 2 for a in self.control.values()))
        return {i: complex(a / total) for i, a in sorted(self.control.items()) if a != 0}

    def normalized_polarization(self) -> np.ndarray:
        return self.input_polarization / np.linalg.norm(self.input_polarization)

    def input_state(self) -> PhotonState:
        return PhotonState.from_register(self.control, self.input_polarization, self.n, self.n_bins)

    def scheduler_params(self) -> SchedulerParams:
        t = self.timing
        loop = self.n_bins * t.bin_spacing if t.loop_delay is None else t.loop_delay
        return SchedulerParams(
            n=self.n, m=self.m, bin_spacing=t.bin_spacing, loop_delay=loop,
            switch_window=t.switch_window, transition=t.transition, level_latency=t.level_latency,
        )


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, Sequence) and not isinstance(value, str) and len(value) == 2:
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError):
            pass
    raise ConfigurationError(f"{where}: expected [re, im], got {value!r}")


def _operator(value, where: str) -> PolarizationOperator:
    if isinstance(value, str):
        try:
            return GATES[value.upper()]
        except KeyError:
            raise ConfigurationError(f"{where}: unknown gate {value!r} (known: {', '.join(GATES)})") from None
    if not (isinstance(value, Sequence) and len(value) == 2 and all(len(row) == 2 for row in value)):
        raise ConfigurationError(f"{where}: expected a 2x2 matrix of [re, im] pairs")
    m = [[_complex(value[r][c], f"{where}[{r}][{c}]") for c in range(2)] for r in range(2)]
    try:
        return PolarizationOperator(m)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
    return value


_TIMING_KEYS = {
    "binSpacing_ps": "bin_spacing",
    "loopDelay_ps": "loop_delay",
    "switchWindow_ps": "switch_window",
    "transition_ps": "transition",
    "levelLatency_ps": "level_latency",
}


def config_from_dict(doc: Mapping) -> SimulationConfig:
    """Validate a config document; errors name the offending field."""
    if not isinstance(doc, Mapping):
        raise ConfigurationError("config: top level must be an object")
    unknown = set(doc) - {"n", "m", "operators", "inputPolarization", "controlAmplitudes",
                          "timing", "seed", "driftSigma"}
    if unknown:
        raise ConfigurationError(f"config: unknown field(s) {', '.join(sorted(unknown))}")
    for key in ("n", "operators", "inputPolarization", "controlAmplitudes"):
        if key not in doc:
            raise ConfigurationError(f"config: missing field {key!r}")
    n = _integer(doc["n"], "n")
    if n < 2 or not is_power_of_two(n):
        raise ConfigurationError(f"n: must be a power of two >= 2, got {n}")
    seed = _integer(doc.get("seed", 0), "seed")

    control_doc = doc["controlAmplitudes"]
    if control_doc == UNIFORM_PERMUTATIONS:
        if "m" in doc and doc["m"] != n:
            log.warning("controlAmplitudes=%s forces m=n=%d (config had m=%r)", UNIFORM_PERMUTATIONS, n, doc["m"])
        m = n
        bins = sorted(permutation_bins(n))
        control = {i: complex(1 / np.sqrt(len(bins))) for i in bins}
    elif isinstance(control_doc, Mapping):
        m = _integer(doc.get("m", 1), "m")
        control = {}
        for key, value in control_doc.items():
            try:
                i = int(key)
            except ValueError:
                raise ConfigurationError(f"controlAmplitudes: bin key {key!r} is not an integer") from None
            control[i] = _complex(value, f"controlAmplitudes[{key}]")
    else:
        raise ConfigurationError(
            f"controlAmplitudes: expected a bin->[re, im] map or {UNIFORM_PERMUTATIONS!r}"
        )

    ops_doc = doc["operators"]
    if ops_doc == "haar":
        operators = tuple(haar_random_unitary(seed * 1000 + l) for l in range(n))
    elif isinstance(ops_doc, Sequence) and not isinstance(ops_doc, str):
        operators = tuple(_operator(v, f"operators[{l}]") for l, v in enumerate(ops_doc))
    else:
        raise ConfigurationError("operators: expected a list of matrices/gate names or 'haar'")

    pol = doc["inputPolarization"]
    if not (isinstance(pol, Sequence) and len(pol) == 2):
        raise ConfigurationError("inputPolarization: expected two [re, im] entries")
    psi = as_spinor([_complex(v, f"inputPolarization[{c}]") for c, v in enumerate(pol)])

    timing_doc = doc.get("timing", {})
    if not isinstance(timing_doc, Mapping):
        raise ConfigurationError("timing: expected an object")
    timing_kwargs = {}
    for key, value in timing_doc.items():
        if key not in _TIMING_KEYS:
            raise ConfigurationError(f"timing: unknown field {key!r}")
        if key == "loopDelay_ps" and value is None:
            continue
        timing_kwargs[_TIMING_KEYS[key]] = _number(value, f"timing.{key}")

    sigma = doc.get("driftSigma")
    if sigma is not None:
        sigma = _number(sigma, "driftSigma")

    return SimulationConfig(
        n=n, m=m, operators=operators, input_polarization=psi, control=control,
        timing=Timing(**timing_kwargs), seed=seed, drift_sigma=sigma,
    )


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def config_to_dict(config: SimulationConfig) -> dict:
    t = config.timing
    timing = {
        "binSpacing_ps": t.bin_spacing,
        "switchWindow_ps": t.switch_window,
        "transition_ps": t.transition,
        "levelLatency_ps": t.level_latency,
    }
    if t.loop_delay is not None:
        timing["loopDelay_ps"] = t.loop_delay
    doc = {
        "n": config.n,
        "m": config.m,
        "seed": config.seed,
        "operators": [[[_pair(z) for z in row] for row in op.matrix] for op in config.operators],
        "inputPolarization": [_pair(z) for z in config.input_polarization],
        "controlAmplitudes": {str(i): _pair(a) for i, a in sorted(config.control.items())},
        "timing": timing,
    }
    if config.drift_sigma is not None:
        doc["driftSigma"] = config.drift_sigma
    return doc


def load_config(path: str | Path) -> SimulationConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(doc)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def dump_config(config: SimulationConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n")
