"""Air-to-ground link: 3GPP UMi-AV path loss, LOS probability, Shannon delay.

Distances are 3-D BS-to-UAV distances with the BS on the ground at the source,
so ``sqrt(d^2 - h^2)`` is the horizontal separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


@dataclass(frozen=True)
class ChannelParams:
    fc: float = 2.0  # GHz
    h: float = 30.0  # m
    W: float = 2e6  # Hz, per direction
    N0: float = -118.0  # dBm/Hz
    P_dl: float = 20.0  # dBm, UAV -> BS
    P_ul_o: float = 23.0  # dBm, BS -> UAV default
    P_ul_max: float = 26.0  # dBm, BS -> UAV boosted

    def __post_init__(self):
        if not 22.5 <= self.h <= 300.0:
            raise ValueError(f"altitude {self.h} m outside the model range [22.5, 300]")
        if self.P_ul_o > self.P_ul_max:
            raise ValueError("P_ul_o must not exceed P_ul_max")
        if self.fc <= 0 or self.W <= 0:
            raise ValueError("fc and W must be positive")


@dataclass(frozen=True)
class LinkDraw:
    d: float
    los: bool
    loss_db: float


def los_breakpoint(h: float) -> float:
    """``d_o = max(294.05 log10 h - 432.94, 18)``."""
    return max(294.05 * math.log10(h) - 432.94, 18.0)


def los_decay(h: float) -> float:
    """``p_o = 233.98 log10 h - 0.95``."""
    return 233.98 * math.log10(h) - 0.95


def los_probability(d: float, h: float) -> float:
    if d < h:
        raise ValueError(f"distance {d} m is below the altitude {h} m")
    d_h = math.sqrt(d * d - h * h)
    d_o = los_breakpoint(h)
    if d_h <= d_o:
        return 1.0
    p_o = los_decay(h)
    p = d_o / d_h + math.exp(-d_h / p_o) * (1.0 - d_o / d_h)
    return min(max(p, 0.0), 1.0)


def path_loss(d: float, h: float, fc: float, los: bool) -> float:
    """Path loss in dB; ``fc`` in GHz."""
    if d <= 0 or h <= 0 or fc <= 0:
        raise ValueError("d, h and fc must be positive")
    logd, logh, logf = math.log10(d), math.log10(h), math.log10(fc)
    l_los = 30.9 + (22.25 - 0.5 * logh) * logd + 20.0 * logf
    if los:
        return l_los
    l_nlos = 32.4 + (43.2 - 7.6 * logh) * logd + 20.0 * logf
    return max(l_los, l_nlos)


def link_distance(r, r_bs, h: float) -> float:
    dr = np.asarray(r, dtype=float) - np.asarray(r_bs, dtype=float)
    return math.sqrt(float(dr @ dr) + h * h)


def sample_link(d: float, p: ChannelParams, u: float) -> LinkDraw:
    """One LOS/NLOS draw from a single uniform ``u``; shared by both directions."""
    los = u < los_probability(d, p.h)
    return LinkDraw(d=d, los=bool(los), loss_db=path_loss(d, p.h, p.fc, los))


def transmission_delay(bits: int, W: float, P_dbm: float, loss_db: float,
                       N0_dbm_hz: float) -> float:
    """Seconds to push ``bits`` at Shannon rate; ``inf`` if the rate underflows."""
    if bits <= 0:
        raise ValueError("bits must be positive")
    snr = dbm_to_mw(P_dbm - loss_db) / (dbm_to_mw(N0_dbm_hz) * W)
    rate = W * math.log1p(snr) / math.log(2.0)
    if rate <= 0.0:
        return math.inf
    return bits / rate


def uplink_power(d_dl: float, d_th: float, est_ul: float, p: ChannelParams,
                 power_control: bool = True) -> float:
    """BS transmit power: boost only when the default power would miss the deadline."""
    if not power_control:
        return p.P_ul_o
    return p.P_ul_o if d_dl <= d_th - est_ul else p.P_ul_max
