"""Shared-medium packet kernel.

All packet arrival times are fixed before the loop runs (every source is
open-loop), so the event queue reduces to the arrival list sorted by time.
The loop serves accepted packets first-come-first-served on one medium of
fixed capacity and folds each outcome into per-flow counters.
"""

from __future__ import annotations

import numpy as np

from .._jit import njit

# columns of the float accumulator block
F_DELAY_SUM, F_FIRST_TX, F_LAST_RX, F_SIGNAL_SUM, F_NOISE_SUM = range(5)
# columns of the integer accumulator block
I_TX_PKTS, I_RX_PKTS, I_TX_BYTES, I_RX_BYTES, I_SAMPLES, I_LOST_RANGE, I_LOST_CONTENTION, I_LOST_QUEUE = range(8)


@njit
def run_channel(
    t_arr,
    flow,
    size_bytes,
    in_range,
    u,
    p_drop,
    prop_delay,
    signal_dbm,
    noise_dbm,
    n_flows,
    capacity_bps,
    queue_cap,
):
    """Process packets in arrival order.

    A packet is lost if its sender is out of range, if its contention draw
    ``u < p_drop`` or if its sender already has ``queue_cap`` packets waiting.
    Otherwise it starts service when the medium frees up; its delay is
    waiting + transmission + propagation.
    """
    fsum = np.zeros((n_flows, 5))
    isum = np.zeros((n_flows, 8), dtype=np.int64)
    for f in range(n_flows):
        fsum[f, F_FIRST_TX] = -1.0
        fsum[f, F_LAST_RX] = -1.0
    ring = np.zeros((n_flows, queue_cap))
    head = np.zeros(n_flows, dtype=np.int64)
    qlen = np.zeros(n_flows, dtype=np.int64)
    busy_until = 0.0

    for i in range(t_arr.shape[0]):
        f = flow[i]
        a = t_arr[i]
        isum[f, I_TX_PKTS] += 1
        isum[f, I_TX_BYTES] += size_bytes[i]
        if fsum[f, F_FIRST_TX] < 0.0:
            fsum[f, F_FIRST_TX] = a
        if not in_range[i]:
            isum[f, I_LOST_RANGE] += 1
            continue
        if u[i] < p_drop[i]:
            isum[f, I_LOST_CONTENTION] += 1
            continue
        # drop queue entries whose service has already begun
        while qlen[f] > 0 and ring[f, head[f]] <= a:
            head[f] = (head[f] + 1) % queue_cap
            qlen[f] -= 1
        if qlen[f] >= queue_cap:
            isum[f, I_LOST_QUEUE] += 1
            continue
        start = a if a > busy_until else busy_until
        service = size_bytes[i] * 8.0 / capacity_bps
        busy_until = start + service
        ring[f, (head[f] + qlen[f]) % queue_cap] = start
        qlen[f] += 1

        delay = (start - a) + service + prop_delay[i]
        isum[f, I_RX_PKTS] += 1
        isum[f, I_RX_BYTES] += size_bytes[i]
        isum[f, I_SAMPLES] += 1
        fsum[f, F_DELAY_SUM] += delay
        if a + delay > fsum[f, F_LAST_RX]:
            fsum[f, F_LAST_RX] = a + delay
        fsum[f, F_SIGNAL_SUM] += signal_dbm[i]
        fsum[f, F_NOISE_SUM] += noise_dbm[i]
    return fsum, isum


def sliding_load(active: np.ndarray, rates_bps: np.ndarray, window_bins: int) -> np.ndarray:
    """Windowed mean of the offered load on a regular time grid.

    ``active`` is (n_flows, n_bins) of 0/1. The estimate at bin b averages
    bins ``b - window_bins + 1 .. b``; near t=0 the window is truncated.
    """
    inst = (rates_bps[:, None] * active).sum(axis=0)
    padded = np.concatenate((np.zeros(window_bins - 1), inst))
    # direct window sums rather than cumsum differences: floating-point
    # addition is monotone, so more offered load never yields a smaller estimate
    sums = np.lib.stride_tricks.sliding_window_view(padded, window_bins).sum(axis=1)
    counts = np.minimum(np.arange(1, inst.shape[0] + 1), window_bins)
    return sums / counts
