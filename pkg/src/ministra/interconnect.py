# src/ministra/interconnect.py

"""
Interconnect delay models on RC trees.

All per-node vectors are indexed by ``RcNet`` node; node 0 is the driver and
is held at the input voltage. ``G`` is the conductance matrix with the driver
row and column removed and ``C`` the diagonal node capacitance, so a unit
step at the driver leaves an error vector ``e`` (input minus node voltage)
obeying ``G^-1 C de/dt = -e`` with ``e(0) = 1``.

Units: kOhm x fF = ps.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .parasitics import RcNet

logger = logging.getLogger(__name__)

LN9 = math.log(9.0)
_BREAKDOWN = 1e-12
_CROSSING_TOL = 1e-6  # ps


# --- Tree kernels ---


def tree_solve(rc: RcNet, x: np.ndarray) -> np.ndarray:
    """``G^-1 x`` in O(n): subtree sums bottom-up, voltage drops top-down."""
    order, parent, parent_res = rc.tree
    down = np.array(x, dtype=np.float64, copy=True)
    for v in order[:0:-1]:
        down[parent[v]] += down[v]
    out = np.zeros_like(down)
    for v in order[1:]:
        out[v] = out[parent[v]] + parent_res[v] * down[v]
    return out


def tree_apply(rc: RcNet, x: np.ndarray) -> np.ndarray:
    """``G x`` with the driver entry of ``x`` taken as 0."""
    x = np.asarray(x, dtype=np.float64).copy()
    x[0] = 0.0
    a, b = rc.res_a.astype(np.int64), rc.res_b.astype(np.int64)
    current = (x[a] - x[b]) / rc.res_val
    out = np.zeros_like(x)
    np.add.at(out, a, current)
    np.add.at(out, b, -current)
    out[0] = 0.0
    return out


def node_caps(rc: RcNet, pin_caps: dict[int, float] | None = None) -> np.ndarray:
    """Wire caps plus the load of every pin that sits on a node."""
    cap = rc.cap.copy()
    if pin_caps:
        for i, p in enumerate(rc.pin.tolist()):
            cap[i] += pin_caps.get(int(p), 0.0)
    return cap


# --- Elmore ---


def elmore(rc: RcNet, cap: np.ndarray | None = None) -> np.ndarray:
    """
    Per-node Elmore delay: the sum over resistors on the driver-to-node path of
    R times the capacitance downstream of that resistor.
    """
    cap = rc.cap if cap is None else cap
    return tree_solve(rc, cap)


def exact_moments(rc: RcNet, count: int, cap: np.ndarray | None = None) -> np.ndarray:
    """Transfer-function moments per node, shape (n, count); moment 1 is minus Elmore."""
    cap = rc.cap if cap is None else cap
    n = rc.num_nodes
    out = np.zeros((n, count))
    m = np.ones(n)
    for k in range(count):
        out[:, k] = m
        m = -tree_solve(rc, cap * m)
    return out


# --- Reduced order model ---


@dataclass(eq=False)
class ReducedModel:
    order: int
    alpha: np.ndarray
    beta: np.ndarray
    time_constants: np.ndarray  # per mode, >= 0
    residues: np.ndarray  # (nodes, modes)
    total_cap: float
    stable: bool
    elmore: np.ndarray

    def step_response(self, node: int, t: float) -> float:
        if node == 0:
            return 1.0 if t >= 0 else 0.0
        if t <= 0:
            return 0.0
        lam = self.time_constants
        decay = np.where(lam > 0, np.exp(-t / np.where(lam > 0, lam, 1.0)), 0.0)
        return float(1.0 - self.residues[node] @ decay)

    def ramp_response(self, node: int, t: float, ramp: float) -> float:
        """Response to an input rising linearly from 0 to 1 over ``ramp`` ps."""
        if ramp <= 0:
            return self.step_response(node, t)
        return (self._integral(node, t) - self._integral(node, t - ramp)) / ramp

    def _integral(self, node: int, t: float) -> float:
        if t <= 0:
            return 0.0
        if node == 0:
            return t
        lam = self.time_constants
        tail = np.where(lam > 0, lam * (1.0 - np.exp(-t / np.where(lam > 0, lam, 1.0))), 0.0)
        return float(t - self.residues[node] @ tail)

    def moments(self, node: int, count: int) -> np.ndarray:
        if node == 0:
            return np.r_[1.0, np.zeros(count - 1)]
        lam = self.time_constants
        return np.array([(-1) ** k * float(self.residues[node] @ lam**k) for k in range(count)])


def arnoldi_reduce(rc: RcNet, q: int, cap: np.ndarray | None = None) -> ReducedModel:
    """
    Lanczos reduction of ``A = G^-1 C`` in the G inner product, started from
    the all-ones vector. Each step costs one tree solve; the basis is fully
    reorthogonalized. The order is clamped to the number of non-driver nodes
    and truncated on breakdown.

    The driver-port response matches 2q moments, but every node shares one
    one-sided Krylov basis, so each node's own response matches only the
    first q moments (0..q-1); at q = n-1 it is exact.
    """
    cap = rc.cap if cap is None else np.asarray(cap, dtype=np.float64)
    n = rc.num_nodes
    delays = elmore(rc, cap)
    q = max(0, min(q, n - 1))
    if q == 0:
        empty = np.zeros(0)
        return ReducedModel(0, empty, empty, empty, np.zeros((n, 0)), float(cap.sum()), True, delays)

    def g_dot(x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ tree_apply(rc, y))

    m0 = np.ones(n)
    m0[0] = 0.0
    norm0 = math.sqrt(g_dot(m0, m0))
    basis = [m0 / norm0]
    alpha: list[float] = []
    beta: list[float] = []
    for j in range(q):
        v = basis[j]
        alpha.append(float(v @ (cap * v)))
        if j == q - 1:
            break
        w = tree_solve(rc, cap * v)
        w[0] = 0.0
        w -= alpha[j] * v
        if j > 0:
            w -= beta[j - 1] * basis[j - 1]
        for u in basis:
            w -= u * float(u @ tree_apply(rc, w))
        b = math.sqrt(max(g_dot(w, w), 0.0))
        if b <= _BREAKDOWN * max(abs(alpha[0]), 1.0):
            logger.debug("Lanczos breakdown", extra={"order": j + 1, "requested": q})
            break
        beta.append(b)
        basis.append(w / b)

    order = len(alpha)
    a = np.array(alpha)
    b = np.array(beta[: order - 1])
    lam, vecs = eigh_tridiagonal(a, b) if order > 1 else (a.copy(), np.ones((1, 1)))
    scale = max(float(np.abs(lam).max()), 1e-300)
    stable = bool(np.all(lam >= -1e-9 * scale))
    lam = np.where(np.abs(lam) <= 1e-12 * scale, 0.0, lam)
    v_mat = np.column_stack(basis[:order])
    residues = norm0 * (v_mat @ vecs) * vecs[0][None, :]
    return ReducedModel(order, a, b, np.maximum(lam, 0.0) if stable else lam, residues, float(cap.sum()), stable, delays)


@dataclass(frozen=True, slots=True)
class SinkResponse:
    delay: float
    slew: float
    fallback: bool = False


def _crossing(model: ReducedModel, node: int, ramp: float, level: float) -> float | None:
    lo = 0.0
    span = ramp + max(float(model.time_constants.max(initial=0.0)), 1e-3)
    hi = span
    for _ in range(200):
        if model.ramp_response(node, hi, ramp) >= level:
            break
        lo, hi = hi, hi * 2
    else:
        return None
    while hi - lo > _CROSSING_TOL:
        mid = 0.5 * (lo + hi)
        if model.ramp_response(node, mid, ramp) >= level:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def arnoldi_delay(model: ReducedModel, drv_slew: float, node: int,
                  thresholds: tuple[float, float] = (0.2, 0.8), ramp_scale: float = 0.8) -> SinkResponse:
    """
    Drive the reduced model with a saturated ramp of ``drv_slew / ramp_scale``
    ps. Delay is the 50% crossing at the node minus the input's 50% point;
    slew is the time between the lower and upper threshold crossings.
    Unstable models fall back to Elmore.
    """
    ramp = max(drv_slew, 0.0) / ramp_scale
    if node == 0 or model.order == 0:
        return SinkResponse(0.0, ramp * (thresholds[1] - thresholds[0]))
    if model.stable:
        t50 = _crossing(model, node, ramp, 0.5)
        t_lo = _crossing(model, node, ramp, thresholds[0])
        t_hi = _crossing(model, node, ramp, thresholds[1])
        if None not in (t50, t_lo, t_hi):
            return SinkResponse(max(t50 - ramp / 2, 0.0), max(t_hi - t_lo, 0.0))
    elmore_delay = float(model.elmore[node])
    return SinkResponse(elmore_delay, net_slew(drv_slew, LN9 * elmore_delay), fallback=True)


def net_slew(drv_slew: float, impulse: float) -> float:
    """Root-sum-square of the driver slew and the net's impulse width."""
    return math.hypot(drv_slew, impulse)
