"""Binary-tree switch network: multiplexer, operator bank, demultiplexer, feedback loop.

Switch ``S[p,q]`` (level ``p``, index ``q``) couples spatial modes
``a = 2q N / 2^(p+1)`` and ``b = (2q+1) N / 2^(p+1)``. Each output of a
switch feeds the ``a`` port of a child, so below the root the ``b`` port of
every multiplexer switch sees vacuum and the ``b`` output of every
demultiplexer switch is a dump. The demultiplexer ``S'[p,q]`` uses the same
mode pairs. The feedback loop carries ``x_{N/2}`` from the demultiplexer root
back to the multiplexer root and is phase-free.

Propagation treats each pass through the device as one discrete round; the
physical timing of that round is the scheduler's business.
"""

from __future__ import annotations

import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .errors import CollisionError, ConfigurationError, RoutingError
from .state import PhotonState, PolarizationOperator

if TYPE_CHECKING:
    from .config import SimulationConfig
    from .schedule import PulseSchedule


class Side(str, Enum):
    MUX = "mux"
    DEMUX = "demux"


@dataclass(frozen=True)
class SwitchId:
    side: Side
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or not 0 <= self.q < 2**self.p:
            raise ValueError(f"invalid switch index p={self.p}, q={self.q}")

    @property
    def is_root(self) -> bool:
        return self.p == 0

    def sort_key(self) -> tuple:
        return (0 if self.side is Side.MUX else 1, self.p, self.q)

    def __str__(self):
        prime = "'" if self.side is Side.DEMUX else ""
        return f"S{prime}[{self.p},{self.q}]"

    @classmethod
    def parse(cls, text: str) -> SwitchId:
        m = re.fullmatch(r"S('?)\[(\d+),(\d+)\]", text.strip())
        if m is None:
            raise ValueError(f"cannot parse switch label {text!r}")
        side = Side.DEMUX if m.group(1) else Side.MUX
        return cls(side, int(m.group(2)), int(m.group(3)))


@dataclass(frozen=True)
class SwitchSetting:
    id: SwitchId
    on: bool


def mode_pair(n: int, p: int, q: int) -> tuple[int, int]:
    """Spatial modes ``(a, b)`` coupled by switch ``(p, q)`` in an ``n``-mode tree."""
    half_block = n // 2 ** (p + 1)
    return 2 * q * half_block, (2 * q + 1) * half_block


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class SwitchNetwork:
    n_modes: int
    levels: int
    mux: tuple[SwitchId, ...]
    demux: tuple[SwitchId, ...]
    modes: Mapping[SwitchId, tuple[int, int]] = field(repr=False)
    operator_on_mode: Mapping[int, int] = field(repr=False)
    feedback_mode: int = 0

    @property
    def switches(self) -> tuple[SwitchId, ...]:
        return self.mux + self.demux

    @property
    def n_switches(self) -> int:
        return len(self.mux) + len(self.demux)

    def tree(self, side: Side) -> tuple[SwitchId, ...]:
        return self.mux if side is Side.MUX else self.demux

    def root(self, side: Side) -> SwitchId:
        return SwitchId(side, 0, 0)

    def switch_at(self, side: Side, p: int, mode: int) -> tuple[SwitchId, int, int]:
        """The level-``p`` switch whose port set contains ``mode``, with its ``(a, b)``."""
        block = self.n_modes >> p
        q = mode // block
        a, b = self.modes[SwitchId(side, p, q)]
        if mode not in (a, b):
            raise RoutingError(
                f"mode x_{mode} is not a port of any level-{p} {side.value} switch"
            )
        return SwitchId(side, p, q), a, b

    def path(self, leaf: int) -> list[SwitchId]:
        """Multiplexer switches visited from the root to ``x_leaf``."""
        return [SwitchId(Side.MUX, p, leaf >> (self.levels - p)) for p in range(self.levels)]


def build_network(n: int) -> SwitchNetwork:
    """Topology for ``n`` spatial modes (``n`` a power of two, at least 2)."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2 or not is_power_of_two(int(n)):
        raise ConfigurationError(f"number of modes must be a power of two >= 2, got {n!r}")
    n = int(n)
    k = n.bit_length() - 1
    modes = {}
    trees = {}
    for side in Side:
        ids = []
        for p in range(k):
            for q in range(2**p):
                sid = SwitchId(side, p, q)
                ids.append(sid)
                modes[sid] = mode_pair(n, p, q)
        trees[side] = tuple(ids)
    return SwitchNetwork(
        n_modes=n,
        levels=k,
        mux=trees[Side.MUX],
        demux=trees[Side.DEMUX],
        modes=modes,
        operator_on_mode={l: l for l in range(n)},
        feedback_mode=n // 2,
    )


def _swap(amps: dict, time_bin: int, a: int, b: int) -> None:
    va = amps.pop((time_bin, a), None)
    vb = amps.pop((time_bin, b), None)
    if va is not None:
        amps[(time_bin, b)] = va
    if vb is not None:
        amps[(time_bin, a)] = vb


def apply_switch(
    state: PhotonState, net: SwitchNetwork, setting: SwitchSetting, time_bin: int
) -> PhotonState:
    """Exchange the two spatial modes of ``setting.id`` in ``time_bin`` if the switch is on."""
    if not setting.on:
        return state
    a, b = net.modes[setting.id]
    amps = dict(state.amps)
    _swap(amps, time_bin, a, b)
    return state.with_amps(amps)


def _setting(settings: Mapping, sid: SwitchId, time_bin: int) -> bool:
    try:
        return bool(settings[(sid, time_bin)])
    except KeyError:
        raise RoutingError(f"no setting for {sid} in time bin {time_bin}") from None


def _route_level(
    amps: dict, net: SwitchNetwork, side: Side, p: int, settings: Mapping, live_port: int | None = None
):
    """Push every occupied slot through level ``p`` of one tree, in place.

    On the multiplexer side only one input port per switch is live: ``live_port``
    at the root, the ``a`` port below it.
    """
    groups: dict[tuple[SwitchId, int], list[int]] = {}
    for t, x in list(amps):
        sid, _, _ = net.switch_at(side, p, x)
        groups.setdefault((sid, t), []).append(x)
    for (sid, t), occupied in groups.items():
        a, b = net.modes[sid]
        if len(occupied) > 1:
            raise CollisionError(f"time bin {t} occupies both ports of {sid}")
        if side is Side.MUX:
            port = occupied[0]
            expected = a if live_port is None else live_port
            if port != expected:
                raise RoutingError(
                    f"time bin {t} enters {sid} on x_{port}; only x_{expected} is live there"
                )
        if _setting(settings, sid, t):
            _swap(amps, t, a, b)
        if side is Side.DEMUX and p > 0 and (t, b) in amps:
            raise RoutingError(f"time bin {t} leaks into the vacuum output x_{b} of {sid}")


def propagate_iteration(
    state: PhotonState,
    net: SwitchNetwork,
    settings: Mapping[tuple[SwitchId, int], bool],
    operators: Sequence[PolarizationOperator],
    iteration: int = 0,
    n_iterations: int | None = None,
) -> PhotonState:
    """Advance ``state`` through one pass: mux tree, operator bank, demux tree.

    ``settings`` maps ``(switch, time_bin)`` to on/off for this pass. The photon
    enters the multiplexer root on ``x_0`` on the first pass and on the feedback
    port ``x_{N/2}`` afterwards; it must leave the demultiplexer root on
    ``x_{N/2}`` unless this is the last pass (``iteration == n_iterations - 1``,
    the default), in which case it must leave on ``x_0``.
    """
    if state.n_modes != net.n_modes:
        raise ConfigurationError(f"state has {state.n_modes} modes, network has {net.n_modes}")
    if len(operators) != net.n_modes:
        raise ConfigurationError(f"need {net.n_modes} operators, got {len(operators)}")
    last = iteration + 1 if n_iterations is None else n_iterations
    entry_port = 0 if iteration == 0 else net.feedback_mode
    exit_port = 0 if iteration == last - 1 else net.feedback_mode

    amps = dict(state.amps)
    for p in range(net.levels):
        _route_level(amps, net, Side.MUX, p, settings, entry_port if p == 0 else None)

    out = {}
    for (t, x), v in amps.items():
        try:
            op = operators[net.operator_on_mode[x]]
        except KeyError:
            raise RoutingError(f"leaf mode x_{x} has no operator assigned") from None
        out[(t, x)] = op.matrix @ v
    amps = out

    for p in reversed(range(net.levels)):
        _route_level(amps, net, Side.DEMUX, p, settings)

    for t, x in amps:
        if x != exit_port:
            raise RoutingError(
                f"pass {iteration}: time bin {t} leaves on x_{x}, expected x_{exit_port}"
            )
    return state.with_amps(amps)


def run_device(
    config: SimulationConfig,
    schedule: PulseSchedule,
    pass_operators: Sequence[Sequence[PolarizationOperator]] | None = None,
    state: PhotonState | None = None,
) -> PhotonState:
    """Propagate the configured input through all ``M`` passes of the device.

    ``pass_operators[k]`` overrides the operator bank seen on pass ``k``; by
    default every pass sees ``config.operators``.
    """
    net = build_network(config.n)
    if state is None:
        state = config.input_state()
    if pass_operators is None:
        pass_operators = [config.operators] * config.m
    if len(pass_operators) != config.m:
        raise ConfigurationError(f"need operators for {config.m} passes, got {len(pass_operators)}")
    for k in range(config.m):
        state = propagate_iteration(
            state, net, schedule.iteration_settings(k), pass_operators[k], k, config.m
        )
    return state
