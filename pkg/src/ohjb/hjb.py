"""Single-layer HJB value network over a fixed polynomial basis.

The basis is the expansion of ``(1 + x + vx)^6 + (1 + y + vy)^6`` with the
constant terms dropped, giving 54 features. Feature order is canonical and is
also the wire order of serialized weights:

- block 1 holds monomials ``x^i vx^j``, block 2 holds ``y^i vy^j``;
- inside a block, total degree ``i + j`` runs 1..6 and, for a given degree,
  the exponent pair ``(i, j)`` is ascending lexicographic, i.e. ``i`` ascending.

Each feature carries its multinomial coefficient ``6! / (i! j! (6-i-j)!)``.

The network may see a rescaled state ``z = s / scale``; derivatives returned
by this module are always with respect to the physical state ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial

import numpy as np

from .dynamics import CostParams, DynamicsParams, WindModel, stage_cost

DEGREE = 6


class NonFiniteWeights(ValueError):
    """Raised when an update would leave non-finite weights."""


def _block_exponents(degree: int = DEGREE) -> list[tuple[int, int]]:
    return [(i, d - i) for d in range(1, degree + 1) for i in range(d + 1)]


BLOCK_EXPONENTS = _block_exponents()
BLOCK_SIZE = len(BLOCK_EXPONENTS)
M = 2 * BLOCK_SIZE

_I = np.array([e[0] for e in BLOCK_EXPONENTS])
_J = np.array([e[1] for e in BLOCK_EXPONENTS])
_COEF = np.array(
    [factorial(DEGREE) / (factorial(i) * factorial(j) * factorial(DEGREE - i - j))
     for i, j in BLOCK_EXPONENTS]
)


def feature_labels() -> list[str]:
    """Human-readable names in canonical order, e.g. ``'6*x^1*vx^0'``."""
    out = []
    for p, q in (("x", "vx"), ("y", "vy")):
        for (i, j), c in zip(BLOCK_EXPONENTS, _COEF):
            out.append(f"{int(c)}*{p}^{i}*{q}^{j}")
    return out


def _powers(u: float) -> np.ndarray:
    return u ** np.arange(DEGREE + 1)


def _block(p: float, q: float):
    """Values, first and second partials of one 27-feature block."""
    P, Q = _powers(p), _powers(q)
    Pi, Qj = P[_I], Q[_J]
    val = _COEF * Pi * Qj
    dp = _COEF * _I * P[np.maximum(_I - 1, 0)] * Qj
    dq = _COEF * _J * Pi * Q[np.maximum(_J - 1, 0)]
    dqq = _COEF * _J * (_J - 1) * Pi * Q[np.maximum(_J - 2, 0)]
    return val, dp, dq, dqq


def features(s) -> np.ndarray:
    """The 54 feature values at the raw state ``s = [x, y, vx, vy]``."""
    x, y, vx, vy = np.asarray(s, dtype=float)
    return np.concatenate([_block(x, vx)[0], _block(y, vy)[0]])


def feature_jacobian(s) -> np.ndarray:
    """``(54, 4)`` matrix of partials with respect to ``(x, y, vx, vy)``."""
    x, y, vx, vy = np.asarray(s, dtype=float)
    _, dx, dvx, _ = _block(x, vx)
    _, dy, dvy, _ = _block(y, vy)
    J = np.zeros((M, 4))
    J[:BLOCK_SIZE, 0] = dx
    J[:BLOCK_SIZE, 2] = dvx
    J[BLOCK_SIZE:, 1] = dy
    J[BLOCK_SIZE:, 3] = dvy
    return J


def feature_hessian_vv(s) -> np.ndarray:
    """``(54, 2, 2)`` second partials with respect to ``(vx, vy)``.

    No feature mixes ``vx`` and ``vy``, so each 2x2 block is diagonal.
    """
    x, y, vx, vy = np.asarray(s, dtype=float)
    H = np.zeros((M, 2, 2))
    H[:BLOCK_SIZE, 0, 0] = _block(x, vx)[3]
    H[BLOCK_SIZE:, 1, 1] = _block(y, vy)[3]
    return H


def _default_scale() -> np.ndarray:
    return np.array([200.0, 200.0, 5000.0, 5000.0])


@dataclass(frozen=True)
class ValueModel:
    """Weights plus learning constants. ``w`` starts at zero."""

    w: np.ndarray = field(default_factory=lambda: np.zeros(M))
    mu: float = 0.01
    c_omega: float = 0.5
    scale: np.ndarray = field(default_factory=_default_scale)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(M)
        scale = np.asarray(self.scale, dtype=float).reshape(4)
        if not np.all(np.isfinite(w)):
            raise NonFiniteWeights("weights must be finite")
        if np.any(scale <= 0):
            raise ValueError("scale entries must be positive")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "scale", scale)

    def with_weights(self, w) -> "ValueModel":
        return replace(self, w=np.asarray(w, dtype=float))


@dataclass(frozen=True)
class TrainContext:
    """What one BS update sees: the downloaded state and a time-derivative estimate."""

    s: np.ndarray
    dpsi_dt: float = 0.0
    prev_value: float | None = None
    prev_time: float | None = None
    cur_time: float = 0.0


@dataclass(frozen=True)
class _Basis:
    sigma: np.ndarray  # (54,)
    J: np.ndarray  # (54, 4), d sigma / d s
    Hvv: np.ndarray  # (54, 2, 2), d2 sigma / d v2


def _basis(m: ValueModel, s) -> _Basis:
    s = np.asarray(s, dtype=float)
    z = s / m.scale
    J = feature_jacobian(z) / m.scale
    Hvv = feature_hessian_vv(z) / np.outer(m.scale[2:], m.scale[2:])
    return _Basis(features(z), J, Hvv)


def value(m: ValueModel, s) -> float:
    return float(m.w @ features(np.asarray(s, dtype=float) / m.scale))


def value_gradient(m: ValueModel, s) -> np.ndarray:
    """``grad_s psi_hat`` as a 4-vector."""
    return _basis(m, s).J.T @ m.w


def optimal_action(m: ValueModel, s, c3: float) -> np.ndarray:
    """``a* = -(1 / 2 c3) B^T grad psi_hat``."""
    if c3 <= 0:
        raise ValueError("c3 must be positive")
    x, y, vx, vy = np.asarray(s, dtype=float) / m.scale
    w1, w2 = m.w[:BLOCK_SIZE], m.w[BLOCK_SIZE:]
    gvx = w1 @ _block(x, vx)[2] / m.scale[2]
    gvy = w2 @ _block(y, vy)[2] / m.scale[3]
    return -np.array([gvx, gvy]) / (2.0 * c3)


def time_derivative(model: ValueModel, s, t: float, prev_value, prev_time) -> float:
    """Backward difference of psi_hat across consecutive updates; 0 on the first."""
    if prev_value is None or prev_time is None or t <= prev_time:
        return 0.0
    return (value(model, s) - prev_value) / (t - prev_time)


def _drift0(s, wind: WindModel, dp: DynamicsParams) -> np.ndarray:
    # A s + c0 B v_o
    v = s[2:]
    return np.concatenate([v, -dp.c0 * v + dp.c0 * wind.v_o])


def _hamiltonian_parts(m, ctx, wind, dp, cp, basis=None):
    s = np.asarray(ctx.s, dtype=float)
    b = basis or _basis(m, s)
    g = b.J.T @ m.w
    gv = g[2:]
    f0 = _drift0(s, wind, dp)
    VV = wind.V_o @ wind.V_o.T
    tr = np.einsum("ij,mji->m", VV, b.Hvv)
    H = (ctx.dpsi_dt + f0 @ g - gv @ gv / (4.0 * cp.c3)
         + 0.5 * tr @ m.w + stage_cost(s, cp))
    dH = b.J @ f0 - (b.J[:, 2:] @ gv) / (2.0 * cp.c3) + 0.5 * tr
    return float(H), dH, b, g


def hamiltonian(m: ValueModel, ctx: TrainContext, wind: WindModel,
                dp: DynamicsParams, cp: CostParams) -> float:
    """HJB residual with the infimum over actions taken in closed form."""
    return _hamiltonian_parts(m, ctx, wind, dp, cp)[0]


def hamiltonian_at_action(m: ValueModel, ctx: TrainContext, a, wind: WindModel,
                          dp: DynamicsParams, cp: CostParams) -> float:
    """The un-minimized Hamiltonian evaluated at an explicit action ``a``."""
    s = np.asarray(ctx.s, dtype=float)
    a = np.asarray(a, dtype=float)
    b = _basis(m, s)
    g = b.J.T @ m.w
    f = _drift0(s, wind, dp)
    f[2:] += a
    VV = wind.V_o @ wind.V_o.T
    tr = np.einsum("ij,mji->m", VV, b.Hvv)
    return float(ctx.dpsi_dt + f @ g + 0.5 * tr @ m.w + stage_cost(s, cp)
                 + cp.c3 * a @ a)


def loss_and_gradient(m: ValueModel, ctx: TrainContext, wind: WindModel,
                      dp: DynamicsParams, cp: CostParams):
    """Return ``(loss, grad_l, grad_omega)``.

    ``loss = H^2 / 2 + c_omega * max(0, s . ds/dt)`` with ``ds/dt`` taken at
    ``a*``. ``grad_l`` is the gradient of ``H^2 / 2`` and ``grad_omega`` the
    gradient of the hinge (0 at and below the kink). ``dpsi_dt`` is held fixed.
    """
    s = np.asarray(ctx.s, dtype=float)
    H, dH, b, g = _hamiltonian_parts(m, ctx, wind, dp, cp)
    gv = g[2:]
    a_star = -gv / (2.0 * cp.c3)
    f = _drift0(s, wind, dp)
    f[2:] += a_star
    omega_arg = float(s @ f)
    if omega_arg > 0.0:
        omega = omega_arg
        grad_omega = -(b.J[:, 2:] @ s[2:]) / (2.0 * cp.c3)
    else:
        omega = 0.0
        grad_omega = np.zeros(M)
    loss = 0.5 * H * H + m.c_omega * omega
    return loss, H * dH, grad_omega


def normalized(x: np.ndarray) -> np.ndarray:
    """``x / |x|`` with ``0`` mapped to ``0``."""
    n = float(np.linalg.norm(x))
    return x / n if n > 0.0 else np.zeros_like(x)


def ngd_update(m: ValueModel, ctx: TrainContext, wind: WindModel,
               dp: DynamicsParams, cp: CostParams) -> ValueModel:
    """``w <- w - mu * grad_l / |grad_l| - c_omega * grad_omega``."""
    _, grad_l, grad_omega = loss_and_gradient(m, ctx, wind, dp, cp)
    w = m.w - m.mu * normalized(grad_l) - m.c_omega * grad_omega
    return m.with_weights(w)
