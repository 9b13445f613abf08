"""Simulated blue-light stimulation: pulses, pulse trains and pairing schedules."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .plasticity import PairingKind

WAVELENGTH_NM = 473.0
DEFAULT_INTENSITY = 1.0
DEFAULT_WIDTH = 5.0


class InvalidProtocol(ValueError):
    pass


class ScheduleOverflow(ValueError):
    pass


@dataclass(frozen=True)
class LightPulse:
    start: float
    width: float = DEFAULT_WIDTH
    intensity: float = DEFAULT_INTENSITY
    wavelength: float = WAVELENGTH_NM

    def __post_init__(self):
        if self.width <= 0:
            raise InvalidProtocol(f"pulse width must be > 0, got {self.width}")
        if self.intensity < 0:
            raise InvalidProtocol(f"pulse intensity must be >= 0, got {self.intensity}")

    @property
    def end(self) -> float:
        return self.start + self.width

    def covers(self, t: float) -> bool:
        return self.start <= t < self.end


def make_pulse_train(n: int, start: float = 0.0, width: float = DEFAULT_WIDTH,
                     period: float = 55.0, intensity: float = DEFAULT_INTENSITY) -> list[LightPulse]:
    if n < 0:
        raise InvalidProtocol("n must be >= 0")
    if period <= width:
        raise InvalidProtocol(f"period {period} ms must exceed pulse width {width} ms")
    return [LightPulse(start + k * period, width, intensity) for k in range(n)]


@dataclass(frozen=True)
class StimulationSchedule:
    entries: tuple[tuple[int, LightPulse], ...] = ()
    horizon: float = 0.0

    def __post_init__(self):
        entries = tuple(sorted(((int(n), p) for n, p in self.entries),
                               key=lambda e: (e[1].start, e[0])))
        object.__setattr__(self, "entries", entries)
        last_end: dict[int, float] = {}
        for neuron, pulse in entries:
            if pulse.end > self.horizon + 1e-9:
                raise ScheduleOverflow(
                    f"pulse on neuron {neuron} ends at {pulse.end} ms, past horizon {self.horizon} ms")
            if pulse.start < last_end.get(neuron, -np.inf) - 1e-9:
                raise InvalidProtocol(f"overlapping pulses on neuron {neuron} at {pulse.start} ms")
            last_end[neuron] = pulse.end

    def __len__(self):
        return len(self.entries)

    def neurons(self) -> set[int]:
        return {n for n, _ in self.entries}

    def merged(self, other: "StimulationSchedule", offset: float = 0.0) -> "StimulationSchedule":
        shifted = [(n, LightPulse(p.start + offset, p.width, p.intensity, p.wavelength))
                   for n, p in other.entries]
        return StimulationSchedule(self.entries + tuple(shifted),
                                   max(self.horizon, other.horizon + offset))

    def pulse_arrays(self, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Step-indexed view for the simulation kernels.

        A pulse is active on steps ``start_step <= k < end_step``, where step
        ``k`` covers ``[k·dt, (k+1)·dt)``.
        """
        n = len(self.entries)
        neuron = np.empty(n, dtype=np.int64)
        s0 = np.empty(n, dtype=np.int64)
        s1 = np.empty(n, dtype=np.int64)
        amp = np.empty(n)
        for k, (nid, p) in enumerate(self.entries):
            neuron[k] = nid
            s0[k] = int(round(p.start / dt))
            s1[k] = int(round(p.end / dt))
            amp[k] = p.intensity
        return neuron, s0, s1, amp

    def write_csv(self, path: str | Path, append: bool = False) -> None:
        path = Path(path)
        new = not (append and path.exists())
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["neuron_id", "start_ms", "width_ms", "intensity"])
            for nid, p in self.entries:
                w.writerow([nid, repr(p.start), repr(p.width), repr(p.intensity)])


def schedule_from_pulses(neuron: int, pulses: Iterable[LightPulse],
                         horizon: float | None = None) -> StimulationSchedule:
    pulses = list(pulses)
    if horizon is None:
        horizon = max((p.end for p in pulses), default=0.0)
    return StimulationSchedule(tuple((neuron, p) for p in pulses), horizon)


@dataclass(frozen=True)
class PairingProtocol:
    """Timing of light-driven spike pairings.

    ``dt_pair`` is the pre/post pulse offset, ``gap`` the spacing between
    successive pairings (long enough for the synaptic calcium trace to
    return to baseline) and ``lead`` the delay before the first pulse.
    """

    dt_pair: float = 4.0
    gap: float = 100.0
    width: float = DEFAULT_WIDTH
    intensity: float = DEFAULT_INTENSITY
    lead: float = 5.0
    tail: float = 100.0
    max_horizon: float = 60_000.0

    def __post_init__(self):
        if self.dt_pair <= 0:
            raise InvalidProtocol("dt_pair must be > 0")
        if self.gap <= self.dt_pair + self.width:
            raise InvalidProtocol("gap must exceed dt_pair + width")
        if self.lead < 0 or self.tail < 0:
            raise InvalidProtocol("lead and tail must be >= 0")

    def session_length(self, n_pairings: int) -> float:
        if n_pairings == 0:
            return 0.0
        return self.lead + (n_pairings - 1) * self.gap + self.dt_pair + self.width + self.tail


def schedule_pairings(pre: int | Sequence[int], post: int | Sequence[int], n_pairings: int,
                      kind: PairingKind, protocol: PairingProtocol = PairingProtocol(),
                      pairing_window: float | None = None) -> StimulationSchedule:
    """Light pulses that pair ``pre`` with ``post`` ``n_pairings`` times.

    ``pre`` and ``post`` may each name several neurons that are lit together
    (for example both members of a pair sharing the same synapses).
    """
    pre_ids = [pre] if isinstance(pre, (int, np.integer)) else list(pre)
    post_ids = [post] if isinstance(post, (int, np.integer)) else list(post)
    if set(pre_ids) & set(post_ids):
        raise InvalidProtocol("pre and post neurons must differ")
    if n_pairings < 0:
        raise InvalidProtocol("n_pairings must be >= 0")
    kind = PairingKind(kind)
    if kind is PairingKind.NO_CHANGE:
        raise InvalidProtocol("only potentiating or depressing pairings can be scheduled")
    if pairing_window is not None and protocol.dt_pair >= pairing_window:
        raise InvalidProtocol(
            f"dt_pair {protocol.dt_pair} ms does not fit the {pairing_window} ms pairing window")
    horizon = protocol.session_length(n_pairings)
    if horizon > protocol.max_horizon:
        raise ScheduleOverflow(
            f"{n_pairings} pairings need {horizon} ms, beyond the {protocol.max_horizon} ms session limit")
    first, second = (pre_ids, post_ids) if kind is PairingKind.POTENTIATE else (post_ids, pre_ids)
    entries = []
    for k in range(n_pairings):
        t0 = protocol.lead + k * protocol.gap
        for nid in first:
            entries.append((nid, LightPulse(t0, protocol.width, protocol.intensity)))
        for nid in second:
            entries.append((nid, LightPulse(t0 + protocol.dt_pair, protocol.width,
                                            protocol.intensity)))
    return StimulationSchedule(tuple(entries), horizon)


def irradiance_at(schedule: StimulationSchedule, neuron: int, t: float) -> float:
    for nid, pulse in schedule.entries:
        if nid == neuron and pulse.covers(t):
            return pulse.intensity
    return 0.0
