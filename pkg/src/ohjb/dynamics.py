"""Planar UAV kinematics under wind, running cost and motion energy.

The state is stacked as ``s = [x, y, vx, vy]``. Positions are in meters
relative to the destination (the origin), velocities in m/s.

    ds = (A s + B (a + c0 v_o)) dt + G dW,   A = [[O, I], [O, -c0 I]],
    B = [O; I],  G = [O; V_o]
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 4
ACTION_DIM = 2


@dataclass(frozen=True)
class UavState:
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(2))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(2))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.r, self.v])

    @classmethod
    def from_array(cls, s) -> "UavState":
        s = np.asarray(s, dtype=float)
        if s.shape != (STATE_DIM,):
            raise ValueError(f"state must have shape (4,), got {s.shape}")
        return cls(s[:2], s[2:])


@dataclass(frozen=True)
class WindModel:
    """Mean wind ``v_o`` and the factor ``V_o`` multiplying the Wiener increment."""

    v_o: np.ndarray = field(default_factory=lambda: np.array([1.0, -1.0]))
    V_o: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(2))

    def __post_init__(self):
        v_o = np.asarray(self.v_o, dtype=float).reshape(2)
        V_o = np.asarray(self.V_o, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(v_o)) and np.all(np.isfinite(V_o))):
            raise ValueError("wind parameters must be finite")
        object.__setattr__(self, "v_o", v_o)
        object.__setattr__(self, "V_o", V_o)


@dataclass(frozen=True)
class DynamicsParams:
    c0: float = 0.1
    dt: float = 0.1

    def __post_init__(self):
        if not (self.c0 > 0 and self.dt > 0):
            raise ValueError("c0 and dt must be positive")


@dataclass(frozen=True)
class CostParams:
    c1: float = 0.015
    c2: float = 0.015
    c3: float = 0.005

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.c3 > 0):
            raise ValueError("c1, c2, c3 must be positive")


def system_matrices(c0: float, V_o) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the structural matrices ``(A, B, G)`` of the controlled SDE."""
    I, O = np.eye(2), np.zeros((2, 2))
    A = np.block([[O, I], [O, -c0 * I]])
    B = np.vstack([O, I])
    G = np.vstack([O, np.asarray(V_o, dtype=float)])
    return A, B, G


def drift(s, a, wind: WindModel, p: DynamicsParams) -> np.ndarray:
    """``A s + B (a + c0 v_o)``: ``dr/dt = v``, ``dv/dt = -c0 v + a + c0 v_o``."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    v = s[2:]
    return np.concatenate([v, -p.c0 * v + a + p.c0 * wind.v_o])


def step(s, a, wind: WindModel, p: DynamicsParams, noise) -> np.ndarray:
    """One Euler-Maruyama step.

    ``noise`` is a standard-normal pair; only the velocity block is perturbed,
    by ``V_o @ noise * sqrt(dt)``.
    """
    s = np.asarray(s, dtype=float)
    out = s + drift(s, a, wind, p) * p.dt
    out[2:] += wind.V_o @ np.asarray(noise, dtype=float) * np.sqrt(p.dt)
    return out


def _along_track(r: np.ndarray, v: np.ndarray) -> float:
    # (v . r) / |r|, taken as 0 at r = 0
    nr = float(np.hypot(r[0], r[1]))
    if nr == 0.0:
        return 0.0
    return float(v @ r) / nr


def stage_cost(s, cp: CostParams) -> float:
    """State part of the running cost: ``(v.r)/|r| + c1 |r|^2 + c2 |v|^2``."""
    s = np.asarray(s, dtype=float)
    r, v = s[:2], s[2:]
    return _along_track(r, v) + cp.c1 * float(r @ r) + cp.c2 * float(v @ v)


def running_cost(s, a, cp: CostParams) -> float:
    a = np.asarray(a, dtype=float)
    return stage_cost(s, cp) + cp.c3 * float(a @ a)


def energy_increment(s, a, cp: CostParams, dt: float) -> float:
    """Motion energy accrued over one tick: ``(c2 |v|^2 + c3 |a|^2) dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    v = s[2:]
    return (cp.c2 * float(v @ v) + cp.c3 * float(a @ a)) * dt
