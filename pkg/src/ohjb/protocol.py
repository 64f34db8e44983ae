"""Control rounds between the UAV and the base station (BS).

One round: the UAV measures its state and sends it (downlink, UAV -> BS), the
BS takes one NGD step on it, then sends back either the action or the whole
weight vector (uplink, BS -> UAV). Anything not delivered inside the
deadline ``d_th`` is dropped and the UAV keeps whatever it last received.

Algorithms:

- ``ahjb`` always uploads actions.
- ``mhjb`` always uploads the model.
- ``ohjb`` uploads actions until the BS has seen ``dn_th`` states and the mean
  of the last ``n_window`` downlink delays exceeds ``alpha * d_th``, then
  latches into model upload for the rest of the mission.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import hjb
from .channel import ChannelParams, LinkDraw, transmission_delay, uplink_power
from .dynamics import CostParams, DynamicsParams, WindModel

STATE_SCALARS = 4
ACTION_SCALARS = 2


class Algo(str, enum.Enum):
    AHJB = "ahjb"
    MHJB = "mhjb"
    OHJB = "ohjb"


class Mode(str, enum.Enum):
    ACTION = "action"
    MODEL = "model"


@dataclass(frozen=True)
class ProtocolConfig:
    algo: Algo = Algo.OHJB
    d_th: float = 2.0  # s
    b: int = 10  # bytes per scalar
    dn_th: int = 50
    alpha: float = 0.2
    n_window: int = 5
    power_control: bool = True
    # how the BS estimates d(psi_hat)/dt for the residual: "backward" or "zero"
    dpsi: str = "backward"

    def __post_init__(self):
        object.__setattr__(self, "algo", Algo(self.algo))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.d_th <= 0 or self.b <= 0 or self.n_window < 1 or self.dn_th < 0:
            raise ValueError("d_th, b must be positive, n_window >= 1, dn_th >= 0")
        if self.dpsi not in ("backward", "zero"):
            raise ValueError(f"unknown dpsi estimator {self.dpsi!r}")


def payload_bytes(kind: str, b: int, M: int = hjb.M) -> int:
    """Payload size in bytes for ``'state'``, ``'action'`` or ``'model'``."""
    scalars = {"state": STATE_SCALARS, "action": ACTION_SCALARS, "model": M}[kind]
    return scalars * b


def payload_bits(kind: str, b: int, M: int = hjb.M) -> int:
    return 8 * payload_bytes(kind, b, M)


@dataclass(frozen=True)
class ActionPayload:
    a: np.ndarray


@dataclass(frozen=True)
class ModelPayload:
    model: hjb.ValueModel

    @property
    def weights(self) -> list[float]:
        return [float(x) for x in self.model.w]


@dataclass
class ControllerState:
    """BS-side bookkeeping. ``up_bytes`` counts delivered uplink bytes only."""

    n_window: int = 5
    mode: Mode = Mode.ACTION
    dn: int = 0
    up_bytes: int = 0
    dl_delay_window: deque = field(default=None)
    switched: bool = False
    switch_time: float | None = None
    switch_round: int | None = None
    switch_window_mean: float | None = None
    last_value: float | None = None
    last_time: float | None = None

    def __post_init__(self):
        if self.dl_delay_window is None:
            self.dl_delay_window = deque(maxlen=self.n_window)

    @classmethod
    def initial(cls, cfg: ProtocolConfig) -> "ControllerState":
        mode = Mode.MODEL if cfg.algo is Algo.MHJB else Mode.ACTION
        return cls(n_window=cfg.n_window, mode=mode)

    def window_mean(self) -> float | None:
        if len(self.dl_delay_window) < self.n_window:
            return None
        return float(np.mean(self.dl_delay_window))


@dataclass(frozen=True)
class RoundOutcome:
    k: int
    t_o: float
    t_dl: float | None
    t_ul: float | None
    dl_delay: float
    ul_delay: float | None
    delivered: bool
    payload_bits: int
    power_used: float | None
    mode: Mode

    @property
    def elapsed(self) -> float:
        """Time the UAV spends on this round before measuring the next state."""
        e2e = self.dl_delay + (self.ul_delay if self.ul_delay is not None else 0.0)
        return e2e


def ohjb_switch_check(ctrl: ControllerState, cfg: ProtocolConfig) -> Mode:
    """Latching switch to model upload; needs ``dn >= dn_th`` and a full slow window."""
    if ctrl.switched:
        return Mode.MODEL
    mean = ctrl.window_mean()
    if ctrl.dn >= cfg.dn_th and mean is not None and mean > cfg.alpha * cfg.d_th:
        ctrl.switched = True
        ctrl.switch_window_mean = mean
        return Mode.MODEL
    return Mode.ACTION


def _select_mode(ctrl: ControllerState, cfg: ProtocolConfig) -> Mode:
    if cfg.algo is Algo.AHJB:
        return Mode.ACTION
    if cfg.algo is Algo.MHJB:
        return Mode.MODEL
    return ohjb_switch_check(ctrl, cfg)


def train_step(model: hjb.ValueModel, ctrl: ControllerState, s, t: float,
               cfg: ProtocolConfig, wind: WindModel, dp: DynamicsParams,
               cp: CostParams) -> hjb.ValueModel:
    """One BS update on a freshly downloaded state at time ``t``."""
    s = np.asarray(s, dtype=float)
    if cfg.dpsi == "backward":
        dpsi = hjb.time_derivative(model, s, t, ctrl.last_value, ctrl.last_time)
    else:
        dpsi = 0.0
    ctx = hjb.TrainContext(s=s, dpsi_dt=dpsi, prev_value=ctrl.last_value,
                           prev_time=ctrl.last_time, cur_time=t)
    new = hjb.ngd_update(model, ctx, wind, dp, cp)
    ctrl.last_value = hjb.value(new, s)
    ctrl.last_time = t
    return new


def execute_round(k: int, t_o: float, s_measured, model: hjb.ValueModel,
                  ctrl: ControllerState, cfg: ProtocolConfig, chan: ChannelParams,
                  link: LinkDraw, wind: WindModel, dp: DynamicsParams,
                  cp: CostParams):
    """Run control round ``k``; mutates ``ctrl``.

    Returns ``(outcome, model, payload)`` where ``payload`` is the
    ``ActionPayload``/``ModelPayload`` handed to the UAV, or ``None`` when the
    round missed its deadline.
    """
    s = np.asarray(s_measured, dtype=float)
    dl_bits = payload_bits("state", cfg.b)
    dl_delay = transmission_delay(dl_bits, chan.W, chan.P_dl, link.loss_db, chan.N0)
    if not dl_delay < cfg.d_th:
        # the BS never got the state: nothing to train on, nothing to send
        return (RoundOutcome(k, t_o, None, None, dl_delay, None, False, 0, None,
                             ctrl.mode), model, None)

    t_dl = t_o + dl_delay
    model = train_step(model, ctrl, s, t_dl, cfg, wind, dp, cp)
    ctrl.dn += 1
    ctrl.dl_delay_window.append(dl_delay)

    mode = _select_mode(ctrl, cfg)
    if mode is Mode.MODEL and ctrl.mode is Mode.ACTION:
        ctrl.switch_time = t_o
        ctrl.switch_round = k
    ctrl.mode = mode

    kind = "action" if mode is Mode.ACTION else "model"
    bits = payload_bits(kind, cfg.b)
    est_ul = transmission_delay(bits, chan.W, chan.P_ul_o, link.loss_db, chan.N0)
    power = uplink_power(dl_delay, cfg.d_th, est_ul, chan, cfg.power_control)
    ul_delay = transmission_delay(bits, chan.W, power, link.loss_db, chan.N0)
    delivered = dl_delay + ul_delay <= cfg.d_th

    payload = None
    t_ul = None
    if delivered:
        t_ul = t_dl + ul_delay
        ctrl.up_bytes += bits // 8
        if mode is Mode.ACTION:
            payload = ActionPayload(hjb.optimal_action(model, s, cp.c3))
        else:
            payload = ModelPayload(model)
    out = RoundOutcome(k, t_o, t_dl, t_ul, dl_delay, ul_delay, delivered, bits,
                       power, mode)
    return out, model, payload


def round_ticks(out: RoundOutcome, d_th: float, dt: float) -> int:
    """Ticks until the next round: ``min(e2e, d_th)`` rounded up, at least one."""
    wait = min(out.elapsed, d_th)
    return max(1, math.ceil(wait / dt - 1e-9))


def uav_apply(current, held, c3: float) -> np.ndarray:
    """Action the UAV applies this tick given its last delivered payload."""
    if held is None:
        return np.zeros(2)
    if isinstance(held, ActionPayload):
        return held.a
    return hjb.optimal_action(held.model, current, c3)
