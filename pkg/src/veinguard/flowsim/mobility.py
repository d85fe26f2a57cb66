"""Vehicle trajectories: synthetic constant-speed lanes or NS-2 movement traces."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class MobilityParseError(ValueError):
    """A trace line could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticMobility:
    """Vehicles start at ``lane_positions_m[i] = (x0, y)`` and drive along +x.

    ``speed_mps`` is either one speed for every vehicle or one per vehicle.
    """

    lane_positions_m: tuple
    speed_mps: Union[float, tuple] = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lane_positions_m", tuple(tuple(map(float, p)) for p in self.lane_positions_m))
        if not isinstance(self.speed_mps, (int, float)):
            object.__setattr__(self, "speed_mps", tuple(float(s) for s in self.speed_mps))
            if len(self.speed_mps) != len(self.lane_positions_m):
                raise ConfigurationError("one speed per vehicle required")
        speeds = np.atleast_1d(np.asarray(self.speed_mps, dtype=float))
        if np.any(speeds < 0):
            raise ConfigurationError("synthetic speeds must be >= 0")

    def speeds(self) -> np.ndarray:
        n = len(self.lane_positions_m)
        return np.broadcast_to(np.asarray(self.speed_mps, dtype=float), (n,)).copy()


@dataclass(frozen=True)
class TraceMobility:
    path: str


MobilitySpec = Union[SyntheticMobility, TraceMobility]


class Trajectory:
    """Piecewise-linear position as a function of time.

    Holds the first waypoint before it and the last waypoint after it.
    Calling with an array of times returns arrays.
    """

    def __init__(self, times: Sequence[float], xs: Sequence[float], ys: Sequence[float]):
        self.times = np.asarray(times, dtype=np.float64)
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        if not (len(self.times) == len(self.xs) == len(self.ys)) or len(self.times) == 0:
            raise ValueError("trajectory needs matching, nonempty waypoint arrays")

    @classmethod
    def linear(cls, x0: float, y0: float, speed: float, horizon: float = 1e6) -> "Trajectory":
        return cls([0.0, horizon], [x0, x0 + speed * horizon], [y0, y0])

    def __call__(self, t):
        x = np.interp(t, self.times, self.xs)
        y = np.interp(t, self.times, self.ys)
        return x, y


_NODE = r"\$node_\((\d+)\)"
_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_SET_RE = re.compile(rf"^{_NODE}\s+set\s+([XYZ])_\s+{_NUM}$")
_SETDEST_RE = re.compile(rf'^\$ns_\s+at\s+{_NUM}\s+"{_NODE}\s+setdest\s+{_NUM}\s+{_NUM}\s+{_NUM}"$')
_DIRECTIVE_RE = re.compile(r"^\$(node_\(\d+\)|ns_)\s")


def parse_ns2_trace(text: str, min_nodes: int = 0) -> list[Trajectory]:
    """Parse NS-2 ``setdest`` movement text into one trajectory per node.

    A ``setdest`` issued while a node is still moving redirects it from its
    current position. Nodes never given a starting position start at (0, 0).
    """
    initial: dict[int, list[float]] = {}
    moves: list[tuple[float, int, int, float, float, float]] = []
    n_lines = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        n_lines += 1
        m = _SET_RE.match(line)
        if m:
            node, axis, value = int(m.group(1)), m.group(2), float(m.group(3))
            pos = initial.setdefault(node, [0.0, 0.0])
            if axis == "X":
                pos[0] = value
            elif axis == "Y":
                pos[1] = value
            continue
        m = _SETDEST_RE.match(line)
        if m:
            t, node = float(m.group(1)), int(m.group(2))
            x, y, speed = float(m.group(3)), float(m.group(4)), float(m.group(5))
            if t < 0 or speed < 0:
                raise MobilityParseError("negative time or speed", line_no)
            initial.setdefault(node, [0.0, 0.0])
            moves.append((t, line_no, node, x, y, speed))
            continue
        if _DIRECTIVE_RE.match(line) and ("setdest" in line or " set " in line):
            raise MobilityParseError(f"malformed directive: {line!r}", line_no)
        if _DIRECTIVE_RE.match(line):
            warnings.warn(f"ignoring unknown trace directive on line {line_no}: {line!r}", stacklevel=2)
            continue
        raise MobilityParseError(f"unrecognised line: {line!r}", line_no)

    if n_lines == 0 or not initial:
        raise MobilityParseError("trace contains no node definitions", None if n_lines else 1)

    n_nodes = max(initial) + 1
    if n_nodes < min_nodes:
        raise ConfigurationError(f"trace defines {n_nodes} nodes, scenario needs {min_nodes}")

    waypoints = {i: [(0.0, *initial.get(i, [0.0, 0.0]))] for i in range(n_nodes)}
    for t, _, node, x, y, speed in sorted(moves, key=lambda m: (m[0], m[1])):
        path = waypoints[node]
        lt, lx, ly = path[-1]
        if lt > t:
            # redirect mid-leg: cut the unfinished leg at time t
            pt, px, py = path[-2]
            frac = (t - pt) / (lt - pt)
            path[-1] = (t, px + frac * (lx - px), py + frac * (ly - py))
        elif lt < t:
            path.append((t, lx, ly))
        cx, cy = path[-1][1], path[-1][2]
        dist = float(np.hypot(x - cx, y - cy))
        if speed > 0.0 and dist > 0.0:
            path.append((t + dist / speed, x, y))

    out = []
    for i in range(n_nodes):
        ts, xs, ys = zip(*waypoints[i])
        out.append(Trajectory(ts, xs, ys))
    return out


def load_mobility(spec: MobilitySpec, min_nodes: int = 0) -> list[Trajectory]:
    """One position function per vehicle for the given mobility spec."""
    if isinstance(spec, SyntheticMobility):
        speeds = spec.speeds()
        if len(spec.lane_positions_m) < min_nodes:
            raise ConfigurationError(
                f"synthetic mobility defines {len(spec.lane_positions_m)} vehicles, scenario needs {min_nodes}"
            )
        return [Trajectory.linear(x0, y, v) for (x0, y), v in zip(spec.lane_positions_m, speeds)]
    if isinstance(spec, TraceMobility):
        text = Path(spec.path).read_text()
        return parse_ns2_trace(text, min_nodes=min_nodes)
    raise TypeError(f"unknown mobility spec {spec!r}")


def highway_platoon(
    n_vehicles: int,
    rng: np.random.Generator,
    sink: int = 2,
    spread_m: float = 120.0,
    speed_range_mps: tuple[float, float] = (27.0, 30.0),
    lane_width_m: float = 3.5,
    n_lanes: int = 3,
) -> SyntheticMobility:
    """Randomised three-lane platoon centred on the sink vehicle.

    With the defaults no vehicle drifts more than ~210 m from the sink within
    30 s, so every sender stays inside a 250 m radio range.
    """
    offsets = rng.uniform(-spread_m, spread_m, size=n_vehicles)
    offsets[sink] = 0.0
    lanes = rng.integers(0, n_lanes, size=n_vehicles) * lane_width_m
    speeds = rng.uniform(*speed_range_mps, size=n_vehicles)
    base = 500.0
    return SyntheticMobility(
        lane_positions_m=tuple((base + o, float(y)) for o, y in zip(offsets, lanes)),
        speed_mps=tuple(float(s) for s in speeds),
    )
