"""Two-ray ground reflection path loss."""

from __future__ import annotations

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def crossover_distance(heights_m=(1.5, 1.5), frequency_hz: float = 5.9e9) -> float:
    """Distance beyond which the ground-reflected ray dominates (4*pi*ht*hr/lambda)."""
    ht, hr = heights_m
    wavelength = SPEED_OF_LIGHT / frequency_hz
    return 4.0 * np.pi * ht * hr / wavelength


def two_ray_rx_power(
    tx_power_dbm,
    distance_m,
    heights_m=(1.5, 1.5),
    gains=(1.0, 1.0),
    frequency_hz: float = 5.9e9,
    system_loss: float = 1.0,
):
    """Received power in dBm.

    Beyond the crossover distance this is ``Pt*Gt*Gr*ht^2*hr^2 / d^4``; closer in
    the free-space (Friis) d^-2 law is used, which matches the two-ray value at
    the crossover itself. Gains and ``system_loss`` are linear ratios.

    Accepts scalars or arrays for ``distance_m``; raises ``ValueError`` for any
    non-positive distance.
    """
    d = np.asarray(distance_m, dtype=np.float64)
    if np.any(~(d > 0.0)):
        raise ValueError("two-ray model is undefined for distance <= 0")
    ht, hr = heights_m
    gt, gr = gains
    wavelength = SPEED_OF_LIGHT / frequency_hz
    d_cross = 4.0 * np.pi * ht * hr / wavelength

    two_ray = gt * gr * ht**2 * hr**2 / (d**4 * system_loss)
    friis = gt * gr * wavelength**2 / ((4.0 * np.pi * d) ** 2 * system_loss)
    ratio = np.where(d > d_cross, two_ray, friis)
    out = tx_power_dbm + 10.0 * np.log10(ratio)
    return float(out) if out.ndim == 0 else out
