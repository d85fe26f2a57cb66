"""Flow-record schema, labeling, CSV round-tripping and deduplication."""

from __future__ import annotations

import csv
import ipaddress
import math
from dataclasses import astuple, dataclass, fields
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Sequence

SUBNET = ipaddress.ip_network("10.0.0.0/24")
LEGIT_MAX_OCTET = 3


class Protocol(str, Enum):
    TCP = "TCP"
    UDP = "UDP"


class TrafficLabel(IntEnum):
    DDoS = 0
    VideoTCP = 1
    VoIP = 2


class SchemaError(ValueError):
    pass


class RowValidationError(ValueError):
    def __init__(self, row: int, column: str, message: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: {message}")


class LabelingError(ValueError):
    pass


@dataclass(frozen=True)
class FlowRecord:
    FlowID: int
    Src: str
    Dest: str
    SrcPort: int
    DestPort: int
    Protocol: Protocol
    TimeFirstTx: float
    TimeLastRx: float
    FlowDuration: float
    TxPackets: int
    RxPackets: int
    LostPackets: int
    TxBytes: int
    RxBytes: int
    ThroughputKbps: float
    DelaySum: float
    MeanDelay: float
    AvgSignal_dBm: float
    AvgNoise_dBm: float
    Samples: int
    TrafficLabel: TrafficLabel

    def feature_tuple(self) -> tuple:
        """Every column except the FlowID identifier."""
        return astuple(self)[1:]


COLUMNS: tuple[str, ...] = tuple(f.name for f in fields(FlowRecord))
_INT_COLUMNS = {"FlowID", "SrcPort", "DestPort", "TxPackets", "RxPackets", "LostPackets", "TxBytes", "RxBytes", "Samples"}
_FLOAT_COLUMNS = {
    "TimeFirstTx", "TimeLastRx", "FlowDuration", "ThroughputKbps",
    "DelaySum", "MeanDelay", "AvgSignal_dBm", "AvgNoise_dBm",
}


def label_flow(key) -> TrafficLabel:
    """Traffic class from protocol and source address alone.

    TCP is always video; UDP from a legitimate host (last octet <= 3) is VoIP;
    any other UDP source is a bot.
    """
    try:
        addr = ipaddress.ip_address(key.src_addr)
    except ValueError as exc:
        raise LabelingError(f"bad source address {key.src_addr!r}") from exc
    if addr not in SUBNET:
        raise LabelingError(f"source {addr} outside {SUBNET}")
    if Protocol(key.protocol) is Protocol.TCP:
        return TrafficLabel.VideoTCP
    if int(addr) - int(SUBNET.network_address) <= LEGIT_MAX_OCTET:
        return TrafficLabel.VoIP
    return TrafficLabel.DDoS


def _fmt(name: str, value) -> str:
    if name in _FLOAT_COLUMNS:
        return format(float(value), ".17g")
    if name == "Protocol":
        return Protocol(value).value
    if name == "TrafficLabel":
        return TrafficLabel(value).name
    return str(value)


def _parse(name: str, text: str, row: int):
    try:
        if name in _INT_COLUMNS:
            return int(text)
        if name in _FLOAT_COLUMNS:
            return float(text)
        if name == "Protocol":
            return Protocol(text)
        if name == "TrafficLabel":
            return TrafficLabel[text]
    except (ValueError, KeyError) as exc:
        raise RowValidationError(row, name, f"cannot parse {text!r}") from exc
    if name in ("Src", "Dest"):
        try:
            ipaddress.IPv4Address(text)
        except ValueError as exc:
            raise RowValidationError(row, name, f"not a dotted quad: {text!r}") from exc
    return text


def _close(a: float, b: float, rel: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-12)


def validate_record(rec: FlowRecord, row: int = 0) -> None:
    """Raise ``RowValidationError`` if the row breaks a schema invariant."""
    if rec.LostPackets != rec.TxPackets - rec.RxPackets:
        raise RowValidationError(row, "LostPackets", "LostPackets != TxPackets - RxPackets")
    if rec.RxPackets > rec.TxPackets:
        raise RowValidationError(row, "RxPackets", "more packets received than sent")
    if rec.RxBytes > rec.TxBytes:
        raise RowValidationError(row, "RxBytes", "more bytes received than sent")
    if rec.RxPackets > 0:
        if not _close(rec.FlowDuration, rec.TimeLastRx - rec.TimeFirstTx):
            raise RowValidationError(row, "FlowDuration", "FlowDuration != TimeLastRx - TimeFirstTx")
        if not _close(rec.MeanDelay * rec.RxPackets, rec.DelaySum):
            raise RowValidationError(row, "MeanDelay", "MeanDelay * RxPackets != DelaySum")


def write_csv(records: Sequence[FlowRecord], path) -> Path:
    """Write records with the fixed header; floats carry 17 significant digits."""
    if not records:
        raise ValueError("refusing to write an empty dataset")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([_fmt(name, getattr(rec, name)) for name in COLUMNS])
    return path


def read_csv(path) -> list[FlowRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if tuple(header) != COLUMNS:
            missing = [c for c in COLUMNS if c not in header]
            extra = [c for c in header if c not in COLUMNS]
            raise SchemaError(f"{path}: header mismatch (missing={missing}, unexpected={extra})")
        out = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(COLUMNS):
                raise RowValidationError(row_no, COLUMNS[min(len(row), len(COLUMNS) - 1)], "wrong field count")
            values = {name: _parse(name, text, row_no) for name, text in zip(COLUMNS, row)}
            rec = FlowRecord(**values)
            validate_record(rec, row_no)
            out.append(rec)
    return out


def dedup(records: Iterable[FlowRecord]) -> list[FlowRecord]:
    """Drop rows identical to an earlier one on every column but FlowID."""
    seen = set()
    out = []
    for rec in records:
        key = rec.feature_tuple()
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


def class_histogram(records: Iterable[FlowRecord]) -> dict[str, int]:
    counts = {label.name: 0 for label in TrafficLabel}
    for rec in records:
        counts[TrafficLabel(rec.TrafficLabel).name] += 1
    return counts
