import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from veinguard.dataset import (
    COLUMNS, LabelingError, Protocol, RowValidationError, SchemaError, TrafficLabel, class_histogram,
    dedup, label_flow, read_csv, write_csv,
)
from veinguard.flowsim import FlowKey


def key(proto, src):
    return FlowKey(src, "10.0.0.3", 49153, 9, proto)


@pytest.mark.parametrize("proto,src,label", [
    (Protocol.TCP, "10.0.0.1", TrafficLabel.VideoTCP),
    (Protocol.UDP, "10.0.0.2", TrafficLabel.VoIP),
    (Protocol.UDP, "10.0.0.3", TrafficLabel.VoIP),
    (Protocol.UDP, "10.0.0.7", TrafficLabel.DDoS),
    (Protocol.TCP, "10.0.0.9", TrafficLabel.VideoTCP),
])
def test_label_rule(proto, src, label):
    assert label_flow(key(proto, src)) is label


def test_label_codes_fixed():
    assert [int(TrafficLabel.DDoS), int(TrafficLabel.VideoTCP), int(TrafficLabel.VoIP)] == [0, 1, 2]


@pytest.mark.parametrize("src", ["192.168.1.2", "10.0.1.2", "not-an-ip"])
def test_label_outside_subnet(src):
    with pytest.raises(LabelingError):
        label_flow(key(Protocol.UDP, src))


@given(st.sampled_from(list(Protocol)), st.integers(1, 254))
def test_label_depends_only_on_protocol_and_source(proto, octet):
    a = label_flow(FlowKey(f"10.0.0.{octet}", "10.0.0.3", 1000, 9, proto))
    b = label_flow(FlowKey(f"10.0.0.{octet}", "10.0.0.200", 2000, 80, proto))
    assert a is b


def test_header_order():
    assert ",".join(COLUMNS) == (
        "FlowID,Src,Dest,SrcPort,DestPort,Protocol,TimeFirstTx,TimeLastRx,FlowDuration,TxPackets,"
        "RxPackets,LostPackets,TxBytes,RxBytes,ThroughputKbps,DelaySum,MeanDelay,AvgSignal_dBm,"
        "AvgNoise_dBm,Samples,TrafficLabel"
    )


def test_round_trip(sim_records, tmp_path):
    recs = sim_records[:100]
    assert len(recs) == 100
    path = write_csv(recs, tmp_path / "d.csv")
    assert read_csv(path) == recs


def test_empty_write_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "d.csv")


def test_bad_row_invariant_names_row(sim_records, tmp_path):
    recs = list(sim_records[:5])
    recs[3] = dataclasses.replace(recs[3], LostPackets=recs[3].LostPackets + 1)
    path = write_csv(recs, tmp_path / "d.csv")
    with pytest.raises(RowValidationError) as err:
        read_csv(path)
    assert err.value.row == 4 and err.value.column == "LostPackets"


def test_missing_label_column(sim_records, tmp_path):
    path = write_csv(sim_records[:3], tmp_path / "d.csv")
    lines = [",".join(l.split(",")[:-1]) for l in path.read_text().splitlines()]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="TrafficLabel"):
        read_csv(path)


def test_unparseable_field(sim_records, tmp_path):
    path = write_csv(sim_records[:2], tmp_path / "d.csv")
    lines = path.read_text().splitlines()
    parts = lines[2].split(",")
    parts[COLUMNS.index("TxPackets")] = "many"
    lines[2] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(RowValidationError) as err:
        read_csv(path)
    assert (err.value.row, err.value.column) == (2, "TxPackets")


def test_dedup_definition(sim_records):
    r1, r2 = sim_records[0], sim_records[1]
    copy = dataclasses.replace(r1, FlowID=999)
    assert dedup([r1, copy, r2]) == [r1, r2]
    assert dedup(sim_records) == list(sim_records)


def test_dedup_planted_duplicates(sim_records):
    rng = np.random.default_rng(0)
    base = [dataclasses.replace(sim_records[i % len(sim_records)], FlowID=i + 1, Samples=i) for i in range(925)]
    planted = [dataclasses.replace(base[i], FlowID=10_000 + j) for j, i in enumerate(rng.choice(925, 75))]
    rows = base + planted
    order = rng.permutation(len(rows))
    # keep originals ahead of their copies so "first occurrence" is the original
    shuffled = sorted((rows[i] for i in order), key=lambda r: r.FlowID >= 10_000)
    out = dedup(shuffled)
    assert len(rows) == 1000 and len(out) == 925
    assert dedup(out) == out


def test_histogram(sim_records):
    hist = class_histogram(sim_records)
    assert list(hist) == ["DDoS", "VideoTCP", "VoIP"]
    assert hist == {"DDoS": 200, "VideoTCP": 20, "VoIP": 20}
