"""Approximate duality-gap computation and the DG-descent outer step.

The duality gap of a strategy pair is

    DG(u, v) = max_{v'} M(u, v') - min_{u'} M(u', v),

estimated here by k warm-started gradient steps per inner problem.  Two
gradient modes are provided for the outer descent:

* ``envelope``   - the worst-case responses are treated as constants,
  so grad_u = grad_u M(u, v_w) and grad_v = -grad_v M(u_w, v).  Needs
  first-order information only.
* ``unrolled``   - the full total derivative through the k inner steps,
  accumulated forward with Hessian blocks.

Warm starting makes the estimate non-negative whenever the inner step
size is at most 1/L on an L-smooth game, since each ascent (descent)
step can only increase (decrease) the frozen-opponent objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .games import Array, Box, GameOracle, JointPoint, NonFiniteValueError

GRAD_MODES = ("envelope", "unrolled")
OUTER_MODES = ("constant_eta", "adagrad")


@dataclass(frozen=True)
class DGConfig:
    """Inner-loop parameters for the duality-gap estimate.

    gamma=None ties the inner step size to the outer learning rate at
    the point of use (the toy experiments run a single step size).
    """

    k: int = 10
    gamma: Optional[float] = None
    grad_mode: str = "envelope"
    outer: str = "constant_eta"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("inner step count k must be >= 0")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("inner step size gamma must be positive")
        if self.grad_mode not in GRAD_MODES:
            raise ValueError(f"grad_mode must be one of {GRAD_MODES}")
        if self.outer not in OUTER_MODES:
            raise ValueError(f"outer must be one of {OUTER_MODES}")

    def resolved_gamma(self, eta: Optional[float]) -> float:
        if self.gamma is not None:
            return self.gamma
        if eta is None:
            raise ValueError("gamma is unset and no outer eta was supplied")
        return float(eta)

    def format(self) -> str:
        gamma = "auto" if self.gamma is None else f"{self.gamma:g}"
        outer = "const" if self.outer == "constant_eta" else "adagrad"
        return f"dg:k={self.k},gamma={gamma},mode={self.grad_mode},outer={outer}"

    @staticmethod
    def parse(text: str) -> "DGConfig":
        """Parse 'dg:k=10,gamma=0.05,mode=envelope,outer=const'."""
        body = text.strip()
        if body.startswith("dg:"):
            body = body[3:]
        elif body == "dg":
            body = ""
        kwargs = {}
        for item in filter(None, body.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed dg config item {item!r}")
            key = key.strip()
            val = val.strip()
            if key == "k":
                kwargs["k"] = int(val)
            elif key == "gamma":
                kwargs["gamma"] = None if val == "auto" else float(val)
            elif key == "mode":
                kwargs["grad_mode"] = val
            elif key == "outer":
                kwargs["outer"] = ("constant_eta" if val in ("const", "constant_eta")
                                   else "adagrad")
            else:
                raise ValueError(f"unknown dg config key {key!r}")
        return DGConfig(**kwargs)


@dataclass
class DGEstimate:
    """DG value at a point plus the k-step responses and the DG gradient."""

    value: float
    u_worst: Array
    v_worst: Array
    grad_u: Array
    grad_v: Array


@dataclass
class AdaGradState:
    """Scalar-step AdaGrad accumulator with box projection.

    The effective step D / sqrt(sum of squared gradient norms) is
    non-increasing; the projection is the per-coordinate clamp, which is
    the exact orthogonal projection for a box.
    """

    sum_sq: float
    diameter: float
    box: Box

    def __post_init__(self):
        if self.diameter <= 0:
            raise ValueError("diameter must be positive")
        if self.sum_sq < 0:
            raise ValueError("squared-gradient sum cannot be negative")

    @staticmethod
    def fresh(diameter: float, box: Box) -> "AdaGradState":
        return AdaGradState(sum_sq=0.0, diameter=float(diameter), box=box)


def worst_case_responses(game: GameOracle, p: JointPoint, k: int,
                         gamma: float) -> tuple:
    """k warm-started inner gradient steps against a frozen opponent.

    u_worst descends u -> M(u, p.v) starting from p.u; v_worst ascends
    v -> M(p.u, v) starting from p.v.  Each step uses the gradient at
    the previous inner iterate (plain explicit steps).  When the game
    carries a box domain the inner iterates are clamped to it, which
    keeps the estimate below the exact box duality gap.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    u, v = p
    uw = u.copy()
    vw = v.copy()
    gamma = u.dtype.type(gamma) if hasattr(u, "dtype") else gamma
    u_box = v_box = None
    if game.domain is not None:
        u_box = (game.domain.lo[:game.dim_u], game.domain.hi[:game.dim_u])
        v_box = (game.domain.lo[game.dim_u:], game.domain.hi[game.dim_u:])
    for i in range(1, k + 1):
        uw = uw - gamma * game.grad_u(uw, v)
        if u_box is not None:
            uw = np.clip(uw, u_box[0], u_box[1])
        if not np.all(np.isfinite(uw)):
            raise NonFiniteValueError(
                f"inner descent iterate became non-finite at inner step {i}",
                point=p)
    for i in range(1, k + 1):
        vw = vw + gamma * game.grad_v(u, vw)
        if v_box is not None:
            vw = np.clip(vw, v_box[0], v_box[1])
        if not np.all(np.isfinite(vw)):
            raise NonFiniteValueError(
                f"inner ascent iterate became non-finite at inner step {i}",
                point=p)
    return uw, vw


def _unrolled_grads(game, p, k, gamma):
    """Total derivative of M(u, v_k) - M(u_k, v) through both inner chains.

    Forward accumulation: for the ascent chain y_{i+1} = y_i + gamma *
    grad_v M(u, y_i) track A = dy/du and B = dy/dv; for the descent
    chain track C = dx/du and D = dx/dv.  Domain clamping is not applied
    here: differentiating through a projection needs its (discontinuous)
    Jacobian, and every game this mode targets is unbounded.
    """
    u, v = p
    du, dv = game.dim_u, game.dim_v

    y = v.copy()
    A = np.zeros((dv, du))
    B = np.eye(dv)
    for _ in range(k):
        _, _, H_vu, H_vv = game.hessian_blocks(JointPoint(u, y))
        A = A + gamma * (H_vu + H_vv @ A)
        B = B + gamma * (H_vv @ B)
        y = y + gamma * game.grad_v(u, y)

    x = u.copy()
    C = np.eye(du)
    D = np.zeros((du, dv))
    for _ in range(k):
        H_uu, H_uv, _, _ = game.hessian_blocks(JointPoint(x, v))
        C = C - gamma * (H_uu @ C)
        D = D - gamma * (H_uv + H_uu @ D)
        x = x - gamma * game.grad_u(x, v)

    gu_first = game.grad_u(u, y)
    gv_first = game.grad_v(u, y)
    gu_second = game.grad_u(x, v)
    gv_second = game.grad_v(x, v)

    grad_u = gu_first + A.T @ gv_first - C.T @ gu_second
    grad_v = B.T @ gv_first - gv_second - D.T @ gu_second
    return x, y, grad_u, grad_v


def dg_estimate(game: GameOracle, p: JointPoint, cfg: DGConfig,
                eta: Optional[float] = None) -> DGEstimate:
    """DG value and gradient at p under the configured inner loop.

    At k = 0 the estimate is identically zero, so the total derivative
    carries no information; both modes then return the envelope
    gradients (grad_u M(u,v), -grad_v M(u,v)), which is what makes
    k = 0 DG-descent coincide with plain gradient descent-ascent.
    """
    gamma = cfg.resolved_gamma(eta)
    u, v = p

    if cfg.grad_mode == "unrolled" and cfg.k > 0:
        uw, vw, grad_u, grad_v = _unrolled_grads(game, p, cfg.k, gamma)
        value = game.value(u, vw) - game.value(uw, v)
    else:
        uw, vw = worst_case_responses(game, p, cfg.k, gamma)
        value = game.value(u, vw) - game.value(uw, v)
        grad_u = game.grad_u(u, vw)
        grad_v = -game.grad_v(uw, v)

    if not math.isfinite(value):
        raise NonFiniteValueError("duality-gap value is non-finite", point=p)
    return DGEstimate(value=float(value), u_worst=uw, v_worst=vw,
                      grad_u=grad_u, grad_v=grad_v)


def dg_metric(game: GameOracle, p: JointPoint, k: int, gamma: float) -> float:
    """Monitoring metric: the k-step DG value only, no gradients."""
    uw, vw = worst_case_responses(game, p, k, gamma)
    value = game.value(p.u, vw) - game.value(uw, p.v)
    if not math.isfinite(value):
        raise NonFiniteValueError("duality-gap metric is non-finite", point=p)
    return float(value)


def adagrad_step(state: AdaGradState, x: Array, g: Array):
    """One simplified-AdaGrad update on the joint vector.

    S' = S + ||g||^2, then x' = clamp(x - (D / sqrt(S')) * g) onto the
    box.  An all-zero gradient before any accumulation leaves the state
    untouched (the step size would be undefined).
    """
    gsq = float(np.dot(g, g))
    if state.sum_sq == 0.0 and gsq == 0.0:
        return x, state
    new_sum = state.sum_sq + gsq
    eta_t = state.diameter / math.sqrt(new_sum)
    x_new = state.box.clamp(x - eta_t * g)
    return x_new, AdaGradState(sum_sq=new_sum, diameter=state.diameter,
                               box=state.box)


def dg_descent_step(game: GameOracle, p: JointPoint, cfg: DGConfig,
                    step: Union[float, AdaGradState]):
    """One outer step: both players descend the DG gradient.

    With a float step this is plain gradient descent on the estimate;
    with an AdaGradState the joint vector takes a projected adaptive
    step and the state is advanced in place.
    """
    if isinstance(step, AdaGradState):
        if cfg.gamma is None:
            raise ValueError("the adagrad outer has no constant step to tie "
                             "gamma to; set DGConfig.gamma explicitly")
        est = dg_estimate(game, p, cfg)
        g = np.concatenate([est.grad_u, est.grad_v])
        x_new, new_state = adagrad_step(step, p.concat(), g)
        step.sum_sq = new_state.sum_sq
        return JointPoint.split(x_new, game.dim_u)
    eta = float(step)
    est = dg_estimate(game, p, cfg, eta=eta)
    return JointPoint(p.u - eta * est.grad_u, p.v - eta * est.grad_v)
