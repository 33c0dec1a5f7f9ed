"""Seeded randomized property suite behind ``qpermute verify``."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np

from .config import SimulationConfig
from .errors import BudgetExceededError, QPermuteError
from .network import Side, SwitchNetwork, apply_switch, build_network, is_power_of_two, run_device
from .noise import DriftParams, drifted_bank
from .oracle import haar_random_spinor, haar_random_unitary, meta_operator_output, random_amplitudes
from .schedule import (
    boundary_settings,
    build_schedule,
    check_timeline,
    dumps_schedule,
    loads_schedule,
    operator_sequence,
    permutation_bins,
    route_settings,
)
from .state import GATES, PhotonState, fidelity, norm

DEFAULT_BIN_BUDGET = 65536
MAX_OCCUPIED = 256
FIDELITY_TOL = 1e-9
NORM_TOL = 1e-9


@dataclass
class CheckTally:
    passed: int = 0
    failed: int = 0


@dataclass
class VerifyResult:
    n: int
    m: int
    trials: int
    seed: int
    tallies: dict[str, CheckTally] = field(default_factory=dict)
    failures: list[tuple[str, str, SimulationConfig | None]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, name: str, ok: bool, detail: str = "", config: SimulationConfig | None = None):
        tally = self.tallies.setdefault(name, CheckTally())
        if ok:
            tally.passed += 1
        else:
            tally.failed += 1
            self.failures.append((name, detail, config))


def random_config(n: int, m: int, seed: int) -> SimulationConfig:
    """Haar operators, a Haar input spinor and random amplitudes on a random bin subset.

    Small bin spaces are fully occupied; larger ones get ``MAX_OCCUPIED`` random
    bins. When ``m == n`` half the draws occupy only the permutation bins.
    """
    rng = np.random.default_rng(seed)
    n_bins = n**m
    if n_bins <= MAX_OCCUPIED:
        bins = range(n_bins)
    else:
        bins = rng.choice(n_bins, size=MAX_OCCUPIED, replace=False).tolist()
    if m == n and rng.random() < 0.5:
        bins = permutation_bins(n)
    return SimulationConfig(
        n=n,
        m=m,
        operators=tuple(haar_random_unitary(rng) for _ in range(n)),
        input_polarization=haar_random_spinor(rng),
        control=random_amplitudes(bins, rng),
        seed=seed,
    )


def trace_route(net: SwitchNetwork, l: int, side: Side) -> int:
    """Where a test amplitude ends up when ``route_settings(l)`` is applied switch by switch.

    Mux: start at the root on ``x_0`` and return the leaf reached. Demux: start at
    ``x_l`` and return the root port reached. Uses only :func:`apply_switch`.
    """
    settings = {s.id: s for s in route_settings(l, net, side)}
    start = 0 if side is Side.MUX else l
    state = PhotonState({(0, start): [1, 0]}, net.n_modes, 1)
    order = sorted(settings, key=lambda sid: sid.p, reverse=side is Side.DEMUX)
    for sid in order:
        state = apply_switch(state, net, settings[sid], 0)
    (slot,) = state.amps
    return slot[1]


def routing_reaches_leaves(n: int) -> tuple[bool, str]:
    net = build_network(n)
    for l in range(n):
        leaf = trace_route(net, l, Side.MUX)
        if leaf != l:
            return False, f"n={n}: mux routing for x_{l} reaches x_{leaf}"
        root = trace_route(net, l, Side.DEMUX)
        if root != 0:
            return False, f"n={n}: demux routing from x_{l} reaches x_{root}"
    return True, ""


def root_ports_ok(i: int, n: int, m: int, params) -> bool:
    """Check the root settings send bin ``i`` into the right half and out the right port."""
    half = n // 2

    def other(port: int) -> int:
        return half if port == 0 else 0

    for k, l in enumerate(operator_sequence(i, n, m)):
        s00, s00p = boundary_settings(i, k, l, params)
        entry = 0 if k == 0 else half
        lands = other(entry) if s00 else entry
        if (lands == half) != (l >= half):
            return False
        arrives = half if l >= half else 0
        leaves = other(arrives) if s00p else arrives
        if leaves != (0 if k == m - 1 else half):
            return False
    return True


def _guard(fn: Callable[[], None]) -> str | None:
    try:
        fn()
    except QPermuteError as exc:
        return f"{type(exc).__name__}: {exc}"
    return None


def run_suite(n: int, m: int, trials: int, seed: int = 0, budget: int = DEFAULT_BIN_BUDGET) -> VerifyResult:
    """Run every randomized check ``trials`` times; trial ``t`` is seeded with ``seed + t``."""
    if n < 2 or not is_power_of_two(n) or m < 1:
        raise BudgetExceededError(f"need n a power of two >= 2 and m >= 1, got n={n}, m={m}")
    if n**m > budget:
        raise BudgetExceededError(
            f"{n}^{m} = {n**m} time bins exceeds the bin budget of {budget}; lower n or m, or raise --budget"
        )
    result = VerifyResult(n, m, trials, seed)
    ok, detail = routing_reaches_leaves(n)
    result.record("routing reaches every leaf and back", ok, detail)

    for t in range(trials):
        cfg = random_config(n, m, seed + t)
        occupied = cfg.occupied_bins

        def device_checks(cfg=cfg, occupied=occupied):
            schedule = build_schedule(cfg.scheduler_params(), occupied_bins=occupied)
            out = run_device(cfg, schedule)
            ref = meta_operator_output(cfg.operators, cfg.normalized_control(), cfg.normalized_polarization(), n, m)
            f = fidelity(out, ref)
            result.record("device matches brute-force oracle", f >= 1 - FIDELITY_TOL, f"fidelity {f!r}", cfg)
            err = abs(norm(out) - 1.0)
            result.record("norm preserved", err <= NORM_TOL, f"norm error {err:.3e}", cfg)
            slots = set(out.amps)
            result.record("output returns to x_0 in its input bins", slots == {(i, 0) for i in occupied},
                          f"{len(slots)} output slots", cfg)

            ident = replace(cfg, operators=(GATES["I"],) * n)
            same = run_device(ident, schedule)
            result.record("identity bank acts as identity", same.allclose(cfg.input_state(), atol=FIDELITY_TOL),
                          "", cfg)

            problems = check_timeline(schedule)
            result.record("timeline agrees with logical settings", not problems, "; ".join(problems[:3]), cfg)
            again = loads_schedule(dumps_schedule(schedule))
            result.record("schedule serialization round-trips",
                          again.logical == schedule.logical and again.timeline == schedule.timeline, "", cfg)

            zero = run_device(cfg, schedule, pass_operators=drifted_bank(cfg, DriftParams(0.0, cfg.seed)))
            result.record("zero drift reproduces the ideal run bit-for-bit",
                          all(np.array_equal(zero.amps[key], v) for key, v in out.amps.items()), "", cfg)

        error = _guard(device_checks)
        if error:
            result.record("device run raises no invariant violation", False, error, cfg)

        digits_ok = all(
            sum(l * n ** (m - 1 - k) for k, l in enumerate(operator_sequence(i, n, m))) == i for i in occupied
        )
        result.record("operator digits reassemble the bin index", digits_ok, "", cfg)
        params = cfg.scheduler_params()
        result.record("root switches honour entry and exit ports",
                      all(root_ports_ok(i, n, m, params) for i in occupied), "", cfg)
    return result
