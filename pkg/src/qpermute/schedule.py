"""Compile (N, M) and the occupied time bins into switch settings and a pulse timeline.

Time bin ``i`` visits operator ``U_l`` on pass ``k`` where ``l`` is the ``k``-th
base-``N`` digit of ``i``, most significant first. Routing to ``x_l`` follows the
binary expansion of ``l``: below the root, switch ``S[p,q]`` lies on the path
iff ``q == l >> (k - p)`` and is on iff bit ``levels-1-p`` of ``l`` is set. The
root switches depend on the pass because the photon enters on ``x_0`` the first
time and on the feedback port ``x_{N/2}`` afterwards.

The literal activation window ``(q+1)N/2^(p+1) <= l < (q+2)N/2^(p+1)`` and the
``j``-indexed root rules are kept as :func:`literal_tree_predicate` and
:func:`literal_boundary_settings` so they can be compared against the path
rules (:func:`routing_discrepancies`) or compiled on purpose with
``rule="literal"``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass, field
from typing import Literal

from .errors import ConfigurationError, RangeError, TimingInfeasibleError
from .network import Side, SwitchId, SwitchNetwork, SwitchSetting, build_network, is_power_of_two

Rule = Literal["derived", "literal"]
TIME_TOL = 1e-9  # ps


def operator_index(i: int, k: int, n: int, m: int) -> int:
    """Index of the operator applied to time bin ``i`` on pass ``k``."""
    if not 0 <= k < m:
        raise RangeError(f"pass {k} outside [0, {m})")
    if not 0 <= i < n**m:
        raise RangeError(f"time bin {i} outside [0, {n}^{m})")
    return (i // n ** (m - 1 - k)) % n


def operator_sequence(i: int, n: int, m: int) -> list[int]:
    """Operator indices for bin ``i`` in the order they are applied."""
    return [operator_index(i, k, n, m) for k in range(m)]


def bin_for_sequence(sequence: Iterable[int], n: int) -> int:
    """Inverse of :func:`operator_sequence`."""
    i = 0
    for l in sequence:
        if not 0 <= l < n:
            raise RangeError(f"operator index {l} outside [0, {n})")
        i = i * n + l
    return i


def permutation_bins(n: int) -> set[int]:
    """Bins whose ``n``-digit base-``n`` expansion uses each operator exactly once."""
    if n < 1:
        raise RangeError("n must be positive")
    return {bin_for_sequence(perm, n) for perm in itertools.permutations(range(n))}


def route_settings(l: int, net: SwitchNetwork, side: Side) -> list[SwitchSetting]:
    """Settings for one tree that connect its root (entered/left on ``x_0``) with ``x_l``.

    Off-path switches are off. The root entry assumed here is ``x_0``; use
    :func:`boundary_settings` for the pass-dependent root switches.
    """
    if not 0 <= l < net.n_modes:
        raise RangeError(f"leaf {l} outside [0, {net.n_modes})")
    k = net.levels
    out = []
    for sid in net.tree(side):
        on_path = sid.q == l >> (k - sid.p)
        out.append(SwitchSetting(sid, bool(on_path and (l >> (k - 1 - sid.p)) & 1)))
    return out


def boundary_settings(i: int, k: int, l: int, params: SchedulerParams) -> tuple[bool, bool]:
    """Root settings ``(S[0,0], S'[0,0])`` for bin ``i`` on pass ``k`` bound for ``x_l``.

    The photon enters the mux root on ``x_0`` (pass 0) or ``x_{N/2}`` and must be
    steered into the half holding ``x_l``; the demux root must emit on ``x_0``
    after the last pass and on ``x_{N/2}`` otherwise.
    """
    n, m = params.n, params.m
    if not 0 <= l < n:
        raise RangeError(f"operator index {l} outside [0, {n})")
    if not 0 <= k < m:
        raise RangeError(f"pass {k} outside [0, {m})")
    upper = l >= n // 2
    enters_low = k == 0
    leaves_low = k == m - 1
    return (upper == enters_low, upper == leaves_low)


def literal_tree_predicate(p: int, q: int, l: int, n: int) -> bool:
    """Non-root activation window ``(q+1)N/2^(p+1) <= l < (q+2)N/2^(p+1)`` taken verbatim."""
    width = n / 2 ** (p + 1)
    return p != 0 and (q + 1) * width <= l < (q + 2) * width


def literal_boundary_settings(j: int, l: int, n: int, m: int) -> tuple[bool, bool]:
    """Root rules taken verbatim, with ``j`` read as the pass index."""
    upper = l >= n / 2
    s00 = (j == 0 and upper) or (j != 0 and not upper)
    s00p = (j == m - 1 and upper) or (j != 0 and not upper)
    return s00, s00p


def routing_discrepancies(max_n: int = 8, m: int = 2) -> list[dict]:
    """Every ``(N, side, p, q, l)`` where a verbatim rule disagrees with path routing.

    Non-root switches are compared for each ``N`` in ``2..max_n``; the root
    switches are compared on every pass ``k < m`` (records carry ``pass``).
    """
    out = []
    n = 2
    while n <= max_n:
        net = build_network(n)
        params = SchedulerParams(n=n, m=m, bin_spacing=15.0, loop_delay=15.0 * n**m)
        for l in range(n):
            for side in Side:
                for s in route_settings(l, net, side):
                    if s.id.is_root:
                        continue
                    lit = literal_tree_predicate(s.id.p, s.id.q, l, n)
                    if lit != s.on:
                        out.append(
                            {"n": n, "side": side.value, "switch": str(s.id), "p": s.id.p,
                             "q": s.id.q, "l": l, "pass": None, "literal": lit, "derived": s.on}
                        )
            for k in range(m):
                derived = boundary_settings(0, k, l, params)
                literal = literal_boundary_settings(k, l, n, m)
                for side, d, lit in zip(Side, derived, literal):
                    if d != lit:
                        out.append(
                            {"n": n, "side": side.value, "switch": str(SwitchId(side, 0, 0)),
                             "p": 0, "q": 0, "l": l, "pass": k, "literal": lit, "derived": d}
                        )
        n *= 2
    return out


@dataclass(frozen=True)
class SchedulerParams:
    """Device size and timing; all times in picoseconds."""

    n: int
    m: int
    bin_spacing: float
    loop_delay: float
    switch_window: float = 10.0
    transition: float = 5.0
    level_latency: float = 0.0

    @property
    def n_bins(self) -> int:
        return self.n**self.m

    def validate(self) -> None:
        if not (is_power_of_two(self.n) and self.n >= 2):
            raise ConfigurationError(f"n must be a power of two >= 2, got {self.n}")
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        for name in ("bin_spacing", "loop_delay", "switch_window", "transition", "level_latency"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be a finite non-negative time, got {value}")
        if self.bin_spacing < self.switch_window + self.transition:
            raise TimingInfeasibleError(
                "binSpacing >= switchWindow + transition",
                f"{self.bin_spacing:g} ps < {self.switch_window:g} + {self.transition:g} ps",
            )
        if self.loop_delay < self.n_bins * self.bin_spacing:
            raise TimingInfeasibleError(
                "loopDelay >= N^M * binSpacing",
                f"{self.loop_delay:g} ps < {self.n}^{self.m} * {self.bin_spacing:g} ps"
                f" = {self.n_bins * self.bin_spacing:g} ps",
            )


@dataclass(frozen=True)
class Pulse:
    switch: SwitchId
    start: float
    end: float


@dataclass(frozen=True)
class PulseSchedule:
    params: SchedulerParams
    logical: Mapping[tuple[SwitchId, int, int], bool] = field(repr=False)
    timeline: tuple[Pulse, ...] = field(repr=False)
    rule: Rule = "derived"

    def iteration_settings(self, k: int) -> dict[tuple[SwitchId, int], bool]:
        return {(sid, t): on for (sid, t, it), on in self.logical.items() if it == k}

    @property
    def occupied_bins(self) -> list[int]:
        return sorted({t for _, t, _ in self.logical})

    def pulses_for(self, sid: SwitchId) -> list[Pulse]:
        return [p for p in self.timeline if p.switch == sid]


def switch_level_offset(sid: SwitchId, levels: int) -> int:
    """Tree levels crossed before reaching ``sid`` within one pass."""
    return sid.p if sid.side is Side.MUX else 2 * levels - 1 - sid.p


def arrival_time(sid: SwitchId, i: int, k: int, params: SchedulerParams, levels: int) -> float:
    return i * params.bin_spacing + k * params.loop_delay + switch_level_offset(sid, levels) * params.level_latency


def logical_settings(
    params: SchedulerParams, net: SwitchNetwork, occupied_bins: Iterable[int], rule: Rule = "derived"
) -> dict[tuple[SwitchId, int, int], bool]:
    n, m = params.n, params.m
    routes = {
        l: {s.id: s.on for side in Side for s in route_settings(l, net, side)} for l in range(n)
    }
    mux_root, demux_root = net.root(Side.MUX), net.root(Side.DEMUX)
    out = {}
    for i in occupied_bins:
        for k in range(m):
            l = operator_index(i, k, n, m)
            if rule == "derived":
                settings = dict(routes[l])
                settings[mux_root], settings[demux_root] = boundary_settings(i, k, l, params)
            elif rule == "literal":
                settings = {sid: literal_tree_predicate(sid.p, sid.q, l, n) for sid in net.switches}
                settings[mux_root], settings[demux_root] = literal_boundary_settings(k, l, n, m)
            else:
                raise ConfigurationError(f"unknown routing rule {rule!r}")
            for sid, on in settings.items():
                out[(sid, i, k)] = on
    return out


def build_timeline(
    logical: Mapping[tuple[SwitchId, int, int], bool], params: SchedulerParams, net: SwitchNetwork
) -> tuple[Pulse, ...]:
    """One pulse per run of "on" arrivals exactly one bin spacing apart, per switch."""
    events: dict[SwitchId, list[tuple[float, bool]]] = {}
    for (sid, i, k), on in logical.items():
        events.setdefault(sid, []).append((arrival_time(sid, i, k, params, net.levels), on))
    half = params.switch_window / 2
    pulses = []
    for sid in sorted(events, key=SwitchId.sort_key):
        run_start = run_end = None
        for t, on in sorted(events[sid]):
            if on and run_end is not None and abs(t - run_end - params.bin_spacing) <= TIME_TOL:
                run_end = t
                continue
            if run_start is not None:
                pulses.append(Pulse(sid, run_start - half, run_end + half))
                run_start = run_end = None
            if on:
                run_start = run_end = t
        if run_start is not None:
            pulses.append(Pulse(sid, run_start - half, run_end + half))
    return tuple(pulses)


def build_schedule(
    params: SchedulerParams,
    net: SwitchNetwork | None = None,
    occupied_bins: Iterable[int] | None = None,
    rule: Rule = "derived",
) -> PulseSchedule:
    """Logical settings and pulse timeline for every occupied bin on every pass.

    ``occupied_bins`` defaults to all ``N^M`` bins. Raises
    :class:`TimingInfeasibleError` naming the violated constraint.
    """
    params.validate()
    if net is None:
        net = build_network(params.n)
    if net.n_modes != params.n:
        raise ConfigurationError(f"network has {net.n_modes} modes, params say {params.n}")
    bins = range(params.n_bins) if occupied_bins is None else sorted(set(occupied_bins))
    for i in bins:
        if not 0 <= i < params.n_bins:
            raise RangeError(f"occupied bin {i} outside [0, {params.n_bins})")
    logical = logical_settings(params, net, bins, rule)
    return PulseSchedule(params, logical, build_timeline(logical, params, net), rule)


def check_timeline(schedule: PulseSchedule, net: SwitchNetwork | None = None) -> list[str]:
    """Problems with the physical timeline; an empty list means it is consistent.

    Checks that pulses on one switch are separated by at least the transition
    time, that every "on" arrival lies inside a pulse, and that every "off"
    arrival keeps a transition time clear of every pulse. Arrivals sharing an
    instant at one switch must agree.
    """
    params = schedule.params
    if net is None:
        net = build_network(params.n)
    problems = []
    by_switch: dict[SwitchId, list[Pulse]] = {}
    for pulse in schedule.timeline:
        by_switch.setdefault(pulse.switch, []).append(pulse)
    for sid, pulses in by_switch.items():
        pulses.sort(key=lambda p: p.start)
        for a, b in zip(pulses, pulses[1:]):
            if b.start - a.end < params.transition - TIME_TOL:
                problems.append(f"{sid}: pulses at {a.end:g} and {b.start:g} ps closer than transition")
    instants: dict[tuple[SwitchId, float], bool] = {}
    for (sid, i, k), on in schedule.logical.items():
        t = arrival_time(sid, i, k, params, net.levels)
        key = (sid, round(t, 6))
        if instants.setdefault(key, on) != on:
            problems.append(f"{sid}: conflicting settings at {t:g} ps")
        pulses = by_switch.get(sid, [])
        if on and not any(p.start - TIME_TOL <= t <= p.end + TIME_TOL for p in pulses):
            problems.append(f"{sid}: bin {i} pass {k} should be switched at {t:g} ps but no pulse covers it")
        if not on and any(
            p.start - params.transition < t < p.end + params.transition for p in pulses
        ):
            problems.append(f"{sid}: bin {i} pass {k} at {t:g} ps falls within a pulse or its transition")
    return problems


def schedule_to_dict(schedule: PulseSchedule) -> dict:
    logical = [
        {"switch": str(sid), "bin": i, "iteration": k, "on": on}
        for (sid, i, k), on in sorted(
            schedule.logical.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1], kv[0][2])
        )
    ]
    timeline = [{"switch": str(p.switch), "start_ps": p.start, "end_ps": p.end} for p in schedule.timeline]
    return {"params": asdict(schedule.params), "rule": schedule.rule, "logical": logical, "timeline": timeline}


def schedule_from_dict(doc: Mapping) -> PulseSchedule:
    try:
        params = SchedulerParams(**doc["params"])
        logical = {
            (SwitchId.parse(e["switch"]), int(e["bin"]), int(e["iteration"])): bool(e["on"])
            for e in doc["logical"]
        }
        timeline = tuple(
            Pulse(SwitchId.parse(e["switch"]), float(e["start_ps"]), float(e["end_ps"]))
            for e in doc["timeline"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed schedule document: {exc}") from exc
    return PulseSchedule(params, logical, timeline, doc.get("rule", "derived"))


def dumps_schedule(schedule: PulseSchedule) -> str:
    return json.dumps(schedule_to_dict(schedule), indent=1, sort_keys=True)


def loads_schedule(text: str) -> PulseSchedule:
    return schedule_from_dict(json.loads(text))


def summarize(schedule: PulseSchedule) -> str:
    """Human-readable pulse counts and first few pulses per switch."""
    p = schedule.params
    lines = [
        f"N={p.n} M={p.m} bins={p.n_bins} occupied={len(schedule.occupied_bins)} rule={schedule.rule}",
        f"binSpacing={p.bin_spacing:g} ps loopDelay={p.loop_delay:g} ps "
        f"window={p.switch_window:g} ps transition={p.transition:g} ps",
    ]
    net = build_network(p.n)
    lines.append(f"switches={net.n_switches} pulses={len(schedule.timeline)}")
    for sid in net.switches:
        pulses = schedule.pulses_for(sid)
        head = ", ".join(f"[{q.start:g}, {q.end:g}]" for q in pulses[:4])
        more = f" ... (+{len(pulses) - 4})" if len(pulses) > 4 else ""
        lines.append(f"  {str(sid):<9} {len(pulses):>4} pulses  {head}{more}")
    return "\n".join(lines)
