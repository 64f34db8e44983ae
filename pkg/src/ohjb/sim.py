"""Mission loop: ticks of the SDE interleaved with control rounds.

Randomness comes from two independent streams spawned from the master seed:
stream 0 feeds the wind noise (one standard-normal pair per tick, drawn before
the step), stream 1 feeds the channel (one uniform per control round).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import hjb
from .channel import ChannelParams, link_distance, sample_link
from .dynamics import (CostParams, DynamicsParams, WindModel, energy_increment,
                       step)
from .protocol import (Algo, ControllerState, Mode, ProtocolConfig,
                       execute_round, round_ticks, uav_apply)


class Status(str, enum.Enum):
    CONTINUE = "continue"
    REACHED = "reached"
    TIMED_OUT = "timed_out"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class LearnParams:
    mu: float = 0.01
    c_omega: float = 0.5
    scale: tuple = (200.0, 200.0, 5000.0, 5000.0)


@dataclass(frozen=True)
class SimConfig:
    source: tuple = (150.0, 100.0)
    wind: WindModel = field(default_factory=WindModel)
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    cost: CostParams = field(default_factory=CostParams)
    learn: LearnParams = field(default_factory=LearnParams)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    r_th: float = 5.0
    v_th: float = 1.0
    t_max: float = 600.0
    seed: int = 0
    # test hook: pin every round's path loss (dB) instead of sampling it
    fixed_loss_db: float | None = None

    def __post_init__(self):
        if not (self.t_max > 0 and self.r_th > 0 and self.v_th > 0):
            raise ValueError("t_max, r_th and v_th must be positive")
        if len(self.source) != 2:
            raise ValueError("source must be a 2-vector")

    @property
    def h(self) -> float:
        return self.channel.h

    def with_algo(self, algo, power_control: bool | None = None) -> "SimConfig":
        pc = self.protocol.power_control if power_control is None else power_control
        return replace(self, protocol=replace(self.protocol, algo=Algo(algo),
                                              power_control=pc))


@dataclass
class Series:
    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    vx: list = field(default_factory=list)
    vy: list = field(default_factory=list)
    ax: list = field(default_factory=list)
    ay: list = field(default_factory=list)
    psi_hat: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dn: list = field(default_factory=list)
    up_bytes: list = field(default_factory=list)
    mode: list = field(default_factory=list)
    power_dbm: list = field(default_factory=list)

    COLUMNS = ("t", "x", "y", "vx", "vy", "ax", "ay", "psi_hat", "energy", "dn",
               "up_bytes", "mode", "power_dbm")

    def __len__(self):
        return len(self.t)

    def rows(self):
        cols = [getattr(self, c) for c in self.COLUMNS]
        return zip(*cols)


@dataclass
class Summary:
    status: str
    algo: str
    seed: int
    power_control: bool
    reached: bool
    travel_time: float | None
    final_time: float
    final_energy: float
    switch_time: float | None
    switch_round: int | None
    switch_dn: int | None
    switch_window_mean: float | None
    rounds_total: int
    rounds_delivered: int
    dn: int
    up_bytes: int
    final_weights: list


@dataclass
class SimResult:
    series: Series
    summary: Summary
    rounds: list

    @property
    def reached(self) -> bool:
        return self.summary.reached


def check_termination(s, t: float, cfg: SimConfig) -> Status:
    s = np.asarray(s, dtype=float)
    if math.hypot(s[0], s[1]) <= cfg.r_th and math.hypot(s[2], s[3]) <= cfg.v_th:
        return Status.REACHED
    if t >= cfg.t_max - 1e-9:
        return Status.TIMED_OUT
    return Status.CONTINUE


def _streams(seed: int):
    dyn, chan = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(dyn), np.random.default_rng(chan)


def run(cfg: SimConfig) -> SimResult:
    """Simulate one mission from the source until it reaches the origin or times out."""
    dp, wind, cp, chan, pcfg = cfg.dynamics, cfg.wind, cfg.cost, cfg.channel, cfg.protocol
    dt = dp.dt
    rng_dyn, rng_chan = _streams(cfg.seed)
    r_bs = np.asarray(cfg.source, dtype=float)

    model = hjb.ValueModel(mu=cfg.learn.mu, c_omega=cfg.learn.c_omega,
                           scale=np.asarray(cfg.learn.scale, dtype=float))
    ctrl = ControllerState.initial(pcfg)
    s = np.array([r_bs[0], r_bs[1], 0.0, 0.0])
    held = None
    pending = None
    psi_bs = 0.0
    energy = 0.0
    power = math.nan
    next_round = 0
    rounds = []
    k = 0
    tick = 0
    ser = Series()
    switch_dn = None

    while True:
        t = tick * dt
        status = check_termination(s, t, cfg)
        if tick == next_round and status is Status.CONTINUE:
            if pending is not None:
                held, pending = pending, None
            if cfg.fixed_loss_db is None:
                d = link_distance(s[:2], r_bs, chan.h)
                link = sample_link(d, chan, float(rng_chan.random()))
            else:
                link = _fixed_link(s, r_bs, chan, cfg.fixed_loss_db)
            was_switched = ctrl.switched
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    out, model, payload = execute_round(k, t, s, model, ctrl, pcfg,
                                                        chan, link, wind, dp, cp)
            except hjb.NonFiniteWeights:
                status = Status.DIVERGED
                break
            if ctrl.switched and not was_switched:
                switch_dn = ctrl.dn
            rounds.append(out)
            if out.dl_delay < pcfg.d_th:
                psi_bs = hjb.value(model, s)
            if out.power_used is not None:
                power = out.power_used
            pending = payload
            next_round = tick + round_ticks(out, pcfg.d_th, dt)
            k += 1

        with np.errstate(over="ignore", invalid="ignore"):
            a = uav_apply(s, held, cp.c3)
        ser.t.append(t)
        ser.x.append(float(s[0]))
        ser.y.append(float(s[1]))
        ser.vx.append(float(s[2]))
        ser.vy.append(float(s[3]))
        ser.ax.append(float(a[0]))
        ser.ay.append(float(a[1]))
        ser.psi_hat.append(float(psi_bs))
        ser.energy.append(float(energy))
        ser.dn.append(ctrl.dn)
        ser.up_bytes.append(ctrl.up_bytes)
        ser.mode.append(ctrl.mode.value)
        ser.power_dbm.append(float(power))
        if status is not Status.CONTINUE:
            break

        noise = rng_dyn.standard_normal(2)
        with np.errstate(over="ignore", invalid="ignore"):
            s_next = step(s, a, wind, dp, noise)
            e_next = energy + energy_increment(s, a, cp, dt)
        if not (np.all(np.isfinite(s_next)) and math.isfinite(e_next)):
            # numerically blown up: end the mission as not reached
            status = Status.DIVERGED
            break
        s, energy = s_next, e_next
        tick += 1

    reached = status is Status.REACHED
    summary = Summary(
        status=status.value,
        algo=pcfg.algo.value,
        seed=cfg.seed,
        power_control=pcfg.power_control,
        reached=reached,
        travel_time=ser.t[-1] if reached else None,
        final_time=ser.t[-1],
        final_energy=ser.energy[-1],
        switch_time=ctrl.switch_time,
        switch_round=ctrl.switch_round,
        switch_dn=switch_dn,
        switch_window_mean=ctrl.switch_window_mean,
        rounds_total=len(rounds),
        rounds_delivered=sum(r.delivered for r in rounds),
        dn=ctrl.dn,
        up_bytes=ctrl.up_bytes,
        final_weights=[float(x) for x in model.w],
    )
    return SimResult(ser, summary, rounds)


def _fixed_link(s, r_bs, chan: ChannelParams, loss_db: float):
    from .channel import LinkDraw
    return LinkDraw(d=link_distance(s[:2], r_bs, chan.h), los=True, loss_db=loss_db)


@dataclass
class BatchStats:
    summaries: list
    n: int
    reach_rate: float
    mean_travel_time: float | None
    median_travel_time: float | None
    mean_final_energy: float | None
    mean_switch_time: float | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["summaries"] = [asdict(s) if not isinstance(s, dict) else s
                          for s in self.summaries]
        return d


def _mean(xs):
    return float(np.mean(xs)) if xs else None


def aggregate(summaries) -> BatchStats:
    """Order-independent aggregates over per-seed summaries (sorted by seed)."""
    summaries = sorted(summaries, key=lambda s: s.seed)
    times = sorted(s.travel_time for s in summaries if s.reached)
    energies = sorted(s.final_energy for s in summaries if s.reached)
    switches = sorted(s.switch_time for s in summaries if s.switch_time is not None)
    return BatchStats(
        summaries=summaries,
        n=len(summaries),
        reach_rate=sum(s.reached for s in summaries) / len(summaries),
        mean_travel_time=_mean(times),
        median_travel_time=float(np.median(times)) if times else None,
        mean_final_energy=_mean(energies),
        mean_switch_time=_mean(switches),
    )


def _run_summary(cfg: SimConfig) -> Summary:
    return run(cfg).summary


def run_batch(cfg: SimConfig, seeds, workers: int = 1) -> BatchStats:
    """Run one mission per seed; ``workers > 1`` fans out over processes."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    cfgs = [replace(cfg, seed=int(sd)) for sd in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            summaries = list(ex.map(_run_summary, cfgs))
    else:
        summaries = [_run_summary(c) for c in cfgs]
    return aggregate(summaries)
