"""Highway DDoS scenario: configuration, packet generation and flow monitoring."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from ..dataset import FlowRecord, Protocol, label_flow
from .channel import (
    F_DELAY_SUM, F_FIRST_TX, F_LAST_RX, F_NOISE_SUM, F_SIGNAL_SUM,
    I_RX_BYTES, I_RX_PKTS, I_SAMPLES, I_TX_BYTES, I_TX_PKTS,
    run_channel, sliding_load,
)
from .mobility import ConfigurationError, MobilitySpec, SyntheticMobility, TraceMobility, highway_platoon, load_mobility
from .propagation import SPEED_OF_LIGHT, two_ray_rx_power

SINK = 2
VIDEO_PORT = 5000
VOIP_PORT = 5004
DISCARD_PORT = 9
EPHEMERAL_PORT = 49153


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 30.0
    n_legit: int = 3
    n_bots: int = 10
    voip_rate_bps: float = 64_000.0
    voip_packet_bytes: int = 160
    ddos_rate_bps: float = 1e6
    ddos_packet_bytes: int = 1024
    video_packet_bytes: int = 1448
    video_cwnd_packets: int = 10
    video_rtt_s: float = 0.04
    radio_range_m: float = 250.0
    channel_capacity_bps: float = 6e6
    tx_power_dbm: float = 20.0
    antenna_height_m: float = 1.5
    antenna_gain: float = 1.0
    frequency_hz: float = 5.9e9
    noise_floor_dbm: float = -97.0
    queue_cap_packets: int = 500
    load_window_s: float = 0.1
    load_bin_s: float = 0.01
    app_start_s: float = 1.0
    app_start_jitter_s: float = 0.5
    seed: int = 1
    mobility: Optional[MobilitySpec] = None

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigurationError("duration_s must be > 0")
        if self.n_legit < 3:
            raise ConfigurationError("n_legit must be >= 3 (video source, VoIP source, sink)")
        if self.n_bots < 0:
            raise ConfigurationError("n_bots must be >= 0")
        positive = (
            "voip_rate_bps", "voip_packet_bytes", "ddos_rate_bps", "ddos_packet_bytes",
            "video_packet_bytes", "video_cwnd_packets", "video_rtt_s", "radio_range_m",
            "channel_capacity_bps", "frequency_hz", "antenna_height_m", "antenna_gain",
            "queue_cap_packets", "load_window_s", "load_bin_s",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.app_start_s < 0 or self.app_start_jitter_s < 0:
            raise ConfigurationError("application start times must be >= 0")

    @property
    def n_vehicles(self) -> int:
        return self.n_legit + self.n_bots

    @property
    def video_rate_bps(self) -> float:
        """Pacing rate of the window-limited video sender."""
        return self.video_cwnd_packets * self.video_packet_bytes * 8.0 / self.video_rtt_s

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        m = self.mobility
        if isinstance(m, SyntheticMobility):
            d["mobility"] = {
                "kind": "synthetic",
                "lane_positions_m": [list(p) for p in m.lane_positions_m],
                "speed_mps": m.speed_mps if isinstance(m.speed_mps, float) else list(m.speed_mps),
            }
        elif isinstance(m, TraceMobility):
            d["mobility"] = {"kind": "trace", "path": m.path}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(f"unknown simulation keys: {sorted(unknown)}")
        m = d.get("mobility")
        if isinstance(m, dict):
            kind = m.get("kind")
            if kind == "synthetic":
                d["mobility"] = SyntheticMobility(m["lane_positions_m"], m.get("speed_mps", 0.0))
            elif kind == "trace":
                d["mobility"] = TraceMobility(m["path"])
            else:
                raise ConfigurationError(f"unknown mobility kind {kind!r}")
        return cls(**d)


@dataclass(frozen=True)
class FlowKey:
    src_addr: str
    dst_addr: str
    src_port: int
    dst_port: int
    protocol: Protocol

    def __post_init__(self):
        for port in (self.src_port, self.dst_port):
            if not 1 <= port <= 65535:
                raise ValueError(f"port {port} out of range")


@dataclass
class FlowAccumulator:
    tx_packets: int = 0
    rx_packets: int = 0
    tx_bytes: int = 0
    rx_bytes: int = 0
    delay_sum: float = 0.0
    time_first_tx: float = 0.0
    time_last_rx: float = 0.0
    signal_sum_dbm: float = 0.0
    noise_sum_dbm: float = 0.0
    samples: int = 0


def node_address(i: int) -> str:
    return f"10.0.0.{i + 1}"


def finalize_flow(acc: FlowAccumulator, key: FlowKey, flow_id: int = 1) -> FlowRecord:
    """Turn raw counters into the monitored flow columns.

    A flow with nothing received reports zero duration, delay and throughput.
    """
    n_rx = acc.rx_packets
    if n_rx > acc.tx_packets or acc.rx_bytes > acc.tx_bytes or acc.delay_sum < 0:
        raise AssertionError(f"inconsistent accumulator for {key}: {acc}")
    if n_rx > 0:
        duration = acc.time_last_rx - acc.time_first_tx
        if not duration > 0:
            raise AssertionError(f"non-positive flow duration {duration} with {n_rx} packets received")
        throughput = 8.0 * acc.rx_bytes / (duration * 1e3)
        mean_delay = acc.delay_sum / n_rx
        signal = acc.signal_sum_dbm / acc.samples
        noise = acc.noise_sum_dbm / acc.samples
        last_rx = acc.time_last_rx
    else:
        duration = throughput = mean_delay = signal = noise = last_rx = 0.0
    return FlowRecord(
        FlowID=flow_id,
        Src=key.src_addr,
        Dest=key.dst_addr,
        SrcPort=key.src_port,
        DestPort=key.dst_port,
        Protocol=Protocol(key.protocol),
        TimeFirstTx=float(acc.time_first_tx),
        TimeLastRx=float(last_rx),
        FlowDuration=float(duration),
        TxPackets=int(acc.tx_packets),
        RxPackets=int(n_rx),
        LostPackets=int(acc.tx_packets - n_rx),
        TxBytes=int(acc.tx_bytes),
        RxBytes=int(acc.rx_bytes),
        ThroughputKbps=float(throughput),
        DelaySum=float(acc.delay_sum),
        MeanDelay=float(mean_delay),
        AvgSignal_dBm=float(signal),
        AvgNoise_dBm=float(noise),
        Samples=int(acc.samples),
        TrafficLabel=label_flow(key),
    )


@dataclass
class _Flow:
    key: FlowKey
    node: int
    rate_bps: float
    packet_bytes: int
    start_s: float


def _scenario_flows(cfg: SimConfig, rng: np.random.Generator) -> list[_Flow]:
    sink = node_address(SINK)
    starts = cfg.app_start_s + rng.uniform(0.0, cfg.app_start_jitter_s, size=2 + cfg.n_bots)
    flows = [
        _Flow(FlowKey(node_address(0), sink, EPHEMERAL_PORT, VIDEO_PORT, Protocol.TCP),
              0, cfg.video_rate_bps, cfg.video_packet_bytes, starts[0]),
        _Flow(FlowKey(node_address(1), sink, EPHEMERAL_PORT, VOIP_PORT, Protocol.UDP),
              1, cfg.voip_rate_bps, cfg.voip_packet_bytes, starts[1]),
    ]
    for b in range(cfg.n_bots):
        node = cfg.n_legit + b
        flows.append(
            _Flow(FlowKey(node_address(node), sink, EPHEMERAL_PORT, DISCARD_PORT, Protocol.UDP),
                  node, cfg.ddos_rate_bps, cfg.ddos_packet_bytes, starts[2 + b])
        )
    return flows


def _send_times(flow: _Flow, duration: float) -> np.ndarray:
    interval = flow.packet_bytes * 8.0 / flow.rate_bps
    if flow.start_s >= duration:
        return np.empty(0)
    n = int(math.ceil((duration - flow.start_s) / interval))
    t = flow.start_s + interval * np.arange(n)
    return t[t < duration]


def run_simulation(config: SimConfig) -> list[FlowRecord]:
    """Simulate one run and return one record per flow that transmitted.

    Sources: V0 sends paced TCP video at ``cwnd * size / rtt`` (a lost segment
    is resent in a later slot, so every slot counts as a transmission), V1
    sends constant-bit-rate VoIP, every bot floods at ``ddos_rate_bps``. All
    flows target V2.

    Loss comes from three places: the sender being out of radio range of V2,
    contention (drop probability ``max(0, 1 - capacity/offered_load)`` drawn
    per packet from the flow's own random stream), and a full sender queue.
    Because each flow's draws depend only on the packet index, raising the
    bot rate can only raise the drop probability every legitimate packet sees.
    """
    cfg = config
    ss = np.random.SeedSequence(cfg.seed)
    mob_ss, app_ss, flow_ss = ss.spawn(3)

    mobility = cfg.mobility if cfg.mobility is not None else highway_platoon(
        cfg.n_vehicles, np.random.default_rng(mob_ss), sink=SINK
    )
    tracks = load_mobility(mobility, min_nodes=cfg.n_vehicles)
    flows = _scenario_flows(cfg, np.random.default_rng(app_ss))
    streams = [np.random.default_rng(s) for s in flow_ss.spawn(len(flows))]

    # offered load on a regular grid: a source counts while its app is on
    # and it can reach the sink
    n_bins = int(math.ceil(cfg.duration_s / cfg.load_bin_s))
    centers = (np.arange(n_bins) + 0.5) * cfg.load_bin_s
    sx, sy = tracks[SINK](centers)
    active = np.zeros((len(flows), n_bins))
    for j, fl in enumerate(flows):
        x, y = tracks[fl.node](centers)
        reach = np.hypot(x - sx, y - sy) <= cfg.radio_range_m
        active[j] = (reach & (centers >= fl.start_s)).astype(np.float64)
    rates = np.array([fl.rate_bps for fl in flows])
    window = max(1, int(round(cfg.load_window_s / cfg.load_bin_s)))
    load = sliding_load(active, rates, window)
    with np.errstate(divide="ignore"):
        p_bin = np.where(load > cfg.channel_capacity_bps, 1.0 - cfg.channel_capacity_bps / load, 0.0)
    noise_bin = cfg.noise_floor_dbm + 10.0 * np.log10(1.0 + load / cfg.channel_capacity_bps)

    parts = {k: [] for k in ("t", "flow", "size", "in_range", "u", "p", "prop", "sig", "noise")}
    for j, fl in enumerate(flows):
        t = _send_times(fl, cfg.duration_s)
        x, y = tracks[fl.node](t)
        tx_, ty_ = tracks[SINK](t)
        dist = np.hypot(x - tx_, y - ty_)
        b = np.minimum((t / cfg.load_bin_s).astype(np.int64), n_bins - 1)
        parts["t"].append(t)
        parts["flow"].append(np.full(t.shape, j, dtype=np.int64))
        parts["size"].append(np.full(t.shape, fl.packet_bytes, dtype=np.int64))
        parts["in_range"].append(dist <= cfg.radio_range_m)
        parts["u"].append(streams[j].random(t.shape[0]))
        parts["p"].append(p_bin[b])
        parts["prop"].append(dist / SPEED_OF_LIGHT)
        safe = np.maximum(dist, 1e-3)
        parts["sig"].append(
            two_ray_rx_power(
                cfg.tx_power_dbm, safe,
                heights_m=(cfg.antenna_height_m, cfg.antenna_height_m),
                gains=(cfg.antenna_gain, cfg.antenna_gain),
                frequency_hz=cfg.frequency_hz,
            ) * np.ones_like(safe)
        )
        parts["noise"].append(noise_bin[b])
    arr = {k: np.concatenate(v) if v else np.empty(0) for k, v in parts.items()}
    order = np.lexsort((arr["flow"], arr["t"]))
    arr = {k: np.ascontiguousarray(v[order]) for k, v in arr.items()}

    fsum, isum = run_channel(
        arr["t"], arr["flow"], arr["size"], arr["in_range"], arr["u"], arr["p"],
        arr["prop"], arr["sig"], arr["noise"], len(flows),
        float(cfg.channel_capacity_bps), int(cfg.queue_cap_packets),
    )

    records = []
    for j, fl in enumerate(flows):
        if isum[j, I_TX_PKTS] == 0:
            continue
        acc = FlowAccumulator(
            tx_packets=int(isum[j, I_TX_PKTS]),
            rx_packets=int(isum[j, I_RX_PKTS]),
            tx_bytes=int(isum[j, I_TX_BYTES]),
            rx_bytes=int(isum[j, I_RX_BYTES]),
            delay_sum=float(fsum[j, F_DELAY_SUM]),
            time_first_tx=float(fsum[j, F_FIRST_TX]),
            time_last_rx=float(max(fsum[j, F_LAST_RX], 0.0)),
            signal_sum_dbm=float(fsum[j, F_SIGNAL_SUM]),
            noise_sum_dbm=float(fsum[j, F_NOISE_SUM]),
            samples=int(isum[j, I_SAMPLES]),
        )
        records.append(finalize_flow(acc, fl.key, flow_id=len(records) + 1))
    return records


def run_many(config: SimConfig, n_runs: int) -> list[FlowRecord]:
    """Concatenate runs with seeds ``seed, seed+1, ...``; FlowIDs renumbered 1..N."""
    out = []
    for r in range(n_runs):
        for rec in run_simulation(config.with_seed(config.seed + r)):
            out.append(replace(rec, FlowID=len(out) + 1))
    return out
