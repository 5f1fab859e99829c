"""Packets, traces and regulator parameters.

Times and bit counts are plain floats in one consistent dimensionless unit
system (a link of capacity ``C = 1`` moves one bit per time unit).  Packet
indices are 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

EPS = 1e-9


@dataclass(frozen=True)
class Packet:
    index: int
    arrival_start: float
    length: float

    def full_arrival(self, capacity: float) -> float:
        return full_arrival_time(self, capacity)


@dataclass(frozen=True)
class Trace:
    """Packets arriving on a link of ``capacity`` bits per time unit."""

    capacity: float
    packets: tuple[Packet, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))

    def __len__(self) -> int:
        return len(self.packets)

    def __iter__(self) -> Iterator[Packet]:
        return iter(self.packets)

    def __getitem__(self, i):
        return self.packets[i]

    @classmethod
    def from_arrays(cls, starts: Sequence[float], lengths: Sequence[float],
                    capacity: float) -> "Trace":
        pkts = tuple(Packet(j + 1, float(s), float(L))
                     for j, (s, L) in enumerate(zip(starts, lengths)))
        return cls(float(capacity), pkts)

    @property
    def starts(self) -> list[float]:
        return [p.arrival_start for p in self.packets]

    @property
    def lengths(self) -> list[float]:
        return [p.length for p in self.packets]

    @property
    def max_length(self) -> float:
        return max((p.length for p in self.packets), default=0.0)


@dataclass(frozen=True)
class RegulatorParams:
    rate: float
    capacity: float
    max_length: float

    def __post_init__(self):
        if not (0 < self.rate < self.capacity):
            raise ValueError(
                f"need 0 < rate < capacity, got rate={self.rate}, capacity={self.capacity}")
        if self.max_length <= 0:
            raise ValueError("max_length must be positive")

    @property
    def delta(self) -> float:
        """Packetization error margin ``(1 - rate/capacity) * max_length``."""
        return (1.0 - self.rate / self.capacity) * self.max_length


DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class ShapedPacket:
    index: int
    arrival_start: float
    buffer_departure: float
    departure_start: float
    departure_complete: float
    sigma_star: Union[float, str]
    delay: float
    length: float = 0.0
    # Stochastic runs also record the candidate floor k and the chosen index.
    floor_index: int = 0
    sigma_index: int = 0


class TraceError(ValueError):
    """Raised when a shaper is handed an inadmissible trace."""


def full_arrival_time(p: Packet, capacity: float) -> float:
    """Time ``s_j + L_j / C`` at which the packet has been received completely."""
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    return p.arrival_start + p.length / capacity


def validate_trace(trace: Trace, max_length: float | None = None) -> list[int]:
    """Return the indices of packets that break monotonicity or overlap.

    Packet ``j`` is reported when it starts before packet ``j-1`` has been
    received completely (``a_{j-1} > s_j``; back-to-back packets are fine), when its start time is not
    strictly after the previous start, when its length is not positive or,
    if ``max_length`` is given, when it is longer than that.
    """
    bad = []
    prev = None
    for p in trace.packets:
        ok = p.length > 0 and p.arrival_start >= 0
        if max_length is not None and p.length > max_length + EPS:
            ok = False
        if prev is not None:
            if p.arrival_start <= prev.arrival_start:
                ok = False
            if full_arrival_time(prev, trace.capacity) > p.arrival_start + EPS:
                ok = False
        if not ok:
            bad.append(p.index)
        prev = p
    return bad


def require_valid(trace: Trace, max_length: float | None = None) -> None:
    bad = validate_trace(trace, max_length)
    if bad:
        head = ", ".join(str(i) for i in bad[:10])
        raise TraceError(f"inadmissible trace: {len(bad)} bad packet(s), first at index {head}")
