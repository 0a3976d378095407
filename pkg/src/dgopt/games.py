"""Two-player zero-sum game oracles and the analytic game catalog.

A game is a scalar objective M(u, v) that the u-player minimizes and the
v-player maximizes.  Every catalog game ships hand-coded gradients (no
symbolic differentiation anywhere) and, where cheap, closed-form Hessian
blocks.  Games without closed-form second-order information fall back to
central finite differences of their analytic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

Array = np.ndarray

HALF_PI = math.pi / 2.0


class NonFiniteValueError(RuntimeError):
    """An oracle or update produced a non-finite number."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SingularHessianError(RuntimeError):
    """A second-order solve hit a (numerically) singular block."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


def as_vector(x) -> Array:
    """Coerce a scalar/sequence to a float64 1-D array."""
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.ndim != 1:
        raise ValueError(f"expected a 1-D strategy vector, got shape {a.shape}")
    return a


class JointPoint(NamedTuple):
    """A strategy pair (u, v), each a real vector."""

    u: Array
    v: Array

    @staticmethod
    def of(u, v) -> "JointPoint":
        return JointPoint(as_vector(u), as_vector(v))

    def concat(self) -> Array:
        return np.concatenate([self.u, self.v])

    @staticmethod
    def split(x: Array, dim_u: int) -> "JointPoint":
        return JointPoint(np.asarray(x[:dim_u], dtype=float),
                          np.asarray(x[dim_u:], dtype=float))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.u, self.u) + np.dot(self.v, self.v)))

    def distance_to(self, other: "JointPoint") -> float:
        du = self.u - other.u
        dv = self.v - other.v
        return float(np.sqrt(np.dot(du, du) + np.dot(dv, dv)))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, used as a game domain or a projection set."""

    lo: Array
    hi: Array

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise ValueError("box bounds must satisfy lo <= hi elementwise")

    @staticmethod
    def square(lo: float, hi: float, dim: int = 2) -> "Box":
        return Box(np.full(dim, float(lo)), np.full(dim, float(hi)))

    def clamp(self, x: Array) -> Array:
        return np.clip(x, self.lo, self.hi)

    def contains(self, x: Array, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))


HessianBlocks = tuple  # (H_uu, H_uv, H_vu, H_vv)


@dataclass(frozen=True)
class GameOracle:
    """First-order (and optionally second-order) oracle for M(u, v).

    value/grad_u/grad_v are pure functions; repeated evaluation at the
    same point is bit-identical, so oracles are safe to share across
    threads.
    """

    name: str
    dim_u: int
    dim_v: int
    value: Callable[[Array, Array], float]
    grad_u: Callable[[Array, Array], Array]
    grad_v: Callable[[Array, Array], Array]
    second_order: Optional[Callable[[Array, Array], HessianBlocks]] = None
    domain: Optional[Box] = None

    def hessian_blocks(self, p: JointPoint, h: float = 1e-5) -> HessianBlocks:
        """Closed-form blocks when available, FD of the gradients otherwise."""
        if self.second_order is not None:
            return self.second_order(p.u, p.v)
        return second_order_fd(self, p, h)

    def joint_grad(self, p: JointPoint) -> Array:
        return np.concatenate([self.grad_u(p.u, p.v), self.grad_v(p.u, p.v)])


def _fd_steps(x: Array, h: float) -> Array:
    # step scaled by coordinate magnitude, floored at h
    return h * np.maximum(1.0, np.abs(x))


def second_order_fd(game: GameOracle, p: JointPoint, h: float = 1e-5) -> HessianBlocks:
    """Central-difference Hessian blocks from the analytic gradients.

    Diagonal blocks are symmetrized by averaging with their transpose;
    the cross blocks are averaged so that H_vu == H_uv^T exactly.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    u, v = p.u.astype(float), p.v.astype(float)
    du, dv = game.dim_u, game.dim_v
    hu, hv = _fd_steps(u, h), _fd_steps(v, h)

    H_uu = np.zeros((du, du))
    H_vu = np.zeros((dv, du))
    for j in range(du):
        e = np.zeros(du)
        e[j] = hu[j]
        H_uu[:, j] = (game.grad_u(u + e, v) - game.grad_u(u - e, v)) / (2 * hu[j])
        H_vu[:, j] = (game.grad_v(u + e, v) - game.grad_v(u - e, v)) / (2 * hu[j])

    H_vv = np.zeros((dv, dv))
    H_uv = np.zeros((du, dv))
    for j in range(dv):
        e = np.zeros(dv)
        e[j] = hv[j]
        H_vv[:, j] = (game.grad_v(u, v + e) - game.grad_v(u, v - e)) / (2 * hv[j])
        H_uv[:, j] = (game.grad_u(u, v + e) - game.grad_u(u, v - e)) / (2 * hv[j])

    H_uu = 0.5 * (H_uu + H_uu.T)
    H_vv = 0.5 * (H_vv + H_vv.T)
    cross = 0.5 * (H_uv + H_vu.T)
    return H_uu, cross, cross.T, H_vv


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _scalar_game(name, value, gx, gy, second=None, domain=None) -> GameOracle:
    """Wrap scalar callables f(x, y) into a 1-D/1-D oracle."""

    def _value(u, v):
        return float(value(float(u[0]), float(v[0])))

    def _grad_u(u, v):
        return np.array([gx(float(u[0]), float(v[0]))], dtype=float)

    def _grad_v(u, v):
        return np.array([gy(float(u[0]), float(v[0]))], dtype=float)

    second_order = None
    if second is not None:
        def second_order(u, v):
            huu, huv, hvv = second(float(u[0]), float(v[0]))
            return (np.array([[huu]]), np.array([[huv]]),
                    np.array([[huv]]), np.array([[hvv]]))

    return GameOracle(name=name, dim_u=1, dim_v=1, value=_value,
                      grad_u=_grad_u, grad_v=_grad_v,
                      second_order=second_order, domain=domain)


def make_bilinear(c: float) -> GameOracle:
    """The game c*x*y.  Pure rotation under simultaneous gradient play."""
    if c == 0:
        raise ValueError("bilinear game requires c != 0 (c = 0 is degenerate)")
    c = float(c)
    return _scalar_game(
        f"bilinear:c={c:g}",
        value=lambda x, y: c * x * y,
        gx=lambda x, y: c * y,
        gy=lambda x, y: c * x,
        second=lambda x, y: (0.0, c, 0.0),
    )


def make_quadratic_f1() -> GameOracle:
    """-3x^2 - y^2 + 4xy: the origin is the minimax solution but plain
    simultaneous gradient play repels from it."""
    return _scalar_game(
        "f1",
        value=lambda x, y: -3 * x * x - y * y + 4 * x * y,
        gx=lambda x, y: -6 * x + 4 * y,
        gy=lambda x, y: -2 * y + 4 * x,
        second=lambda x, y: (-6.0, 4.0, -2.0),
    )


def make_quadratic_f2() -> GameOracle:
    """3x^2 + y^2 + 4xy: the origin is an undesired stationary point that
    simultaneous gradient play is attracted to."""
    return _scalar_game(
        "f2",
        value=lambda x, y: 3 * x * x + y * y + 4 * x * y,
        gx=lambda x, y: 6 * x + 4 * y,
        gy=lambda x, y: 2 * y + 4 * x,
        second=lambda x, y: (6.0, 4.0, 2.0),
    )


def _f3_parts(x, y):
    w = y - 3 * x + 0.05 * x ** 3
    poly = 4 * x * x - w * w - 0.1 * y ** 4
    env = math.exp(-0.01 * (x * x + y * y))
    return w, poly, env


def make_poly_f3() -> GameOracle:
    """Sixth-order polynomial saddle damped by a Gaussian envelope."""

    def value(x, y):
        _, poly, env = _f3_parts(x, y)
        return poly * env

    def gx(x, y):
        w, poly, env = _f3_parts(x, y)
        dpoly = 8 * x - 2 * w * (-3 + 0.15 * x * x)
        return env * (dpoly - 0.02 * x * poly)

    def gy(x, y):
        w, poly, env = _f3_parts(x, y)
        dpoly = -2 * w - 0.4 * y ** 3
        return env * (dpoly - 0.02 * y * poly)

    game = _scalar_game("f3", value=value, gx=gx, gy=gy)

    def second(u, v):
        return second_order_fd(game, JointPoint(u, v))

    return GameOracle(name=game.name, dim_u=1, dim_v=1, value=game.value,
                      grad_u=game.grad_u, grad_v=game.grad_v,
                      second_order=second, domain=None)


def make_motivation() -> GameOracle:
    """x^2 - y^2 + xy + 10 sin(5x) + 12 sin(3y) on [-10, 10]^2; a rugged
    saddle landscape used for landscape demos."""
    return _scalar_game(
        "motivation",
        value=lambda x, y: x * x - y * y + x * y + 10 * math.sin(5 * x) + 12 * math.sin(3 * y),
        gx=lambda x, y: 2 * x + y + 50 * math.cos(5 * x),
        gy=lambda x, y: -2 * y + x + 36 * math.cos(3 * y),
        second=lambda x, y: (2 - 250 * math.sin(5 * x), 1.0, -2 - 108 * math.sin(3 * y)),
        domain=Box.square(-10.0, 10.0),
    )


def piecewise_f(x: float) -> float:
    """C^1 piecewise ramp used by the nonconvex-nonconcave game."""
    if x < -HALF_PI:
        return -3.0 * (x + HALF_PI)
    if x <= HALF_PI:
        return -3.0 * math.cos(x)
    return -math.cos(x) + 2.0 * x - math.pi


def piecewise_f_grad(x: float) -> float:
    # one-sided limits agree at +-pi/2, so the gradient is continuous
    if x < -HALF_PI:
        return -3.0
    if x <= HALF_PI:
        return 3.0 * math.sin(x)
    return math.sin(x) + 2.0


def piecewise_f_hess(x: float) -> float:
    if x < -HALF_PI:
        return 0.0
    if x <= HALF_PI:
        return 3.0 * math.cos(x)
    return math.cos(x)


def make_ncnc(c: float, include_separable: bool = False) -> GameOracle:
    """Coupling term c*x*y, optionally plus the piecewise ramp F(x) as the
    min player's separable term.

    The literal formula F(x) + cxy - F(x) cancels to cxy, which is the
    default here; ``include_separable=True`` keeps the +F(x) reading.
    """
    if c == 0:
        raise ValueError("ncnc game requires c != 0")
    c = float(c)
    sep = 1.0 if include_separable else 0.0
    name = f"ncnc:c={c:g}" + (",sep=1" if include_separable else "")
    return _scalar_game(
        name,
        value=lambda x, y: c * x * y + sep * piecewise_f(x),
        gx=lambda x, y: c * y + sep * piecewise_f_grad(x),
        gy=lambda x, y: c * x,
        second=lambda x, y: (sep * piecewise_f_hess(x), c, 0.0),
    )


# ---------------------------------------------------------------------------
# named specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameSpec:
    """A catalog name plus its numeric parameters, e.g. bilinear:c=3."""

    name: str
    parameters: dict = field(default_factory=dict)

    def format(self) -> str:
        if not self.parameters:
            return self.name
        params = ",".join(f"{k}={v:g}" for k, v in sorted(self.parameters.items()))
        return f"{self.name}:{params}"


_CATALOG = {
    "bilinear": (make_bilinear, ("c",)),
    "f1": (make_quadratic_f1, ()),
    "f2": (make_quadratic_f2, ()),
    "f3": (make_poly_f3, ()),
    "motivation": (make_motivation, ()),
    "ncnc": (make_ncnc, ("c",)),
}


def parse_game_spec(text: str) -> GameSpec:
    text = text.strip()
    name, _, rest = text.partition(":")
    if name not in _CATALOG:
        raise ValueError(f"unknown game {name!r}; known: {sorted(_CATALOG)}")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq or not key:
                raise ValueError(f"malformed game parameter {item!r} in {text!r}")
            params[key.strip()] = float(val)
    return GameSpec(name=name, parameters=params)


def make_game(spec) -> GameOracle:
    """Construct a catalog game from a GameSpec or a spec string."""
    if isinstance(spec, str):
        spec = parse_game_spec(spec)
    ctor, required = _CATALOG[spec.name]
    params = dict(spec.parameters)
    missing = [k for k in required if k not in params]
    if missing:
        raise ValueError(f"game {spec.name!r} needs parameters {missing}")
    if spec.name == "ncnc":
        include = bool(params.pop("sep", 0.0))
        return ctor(params.pop("c"), include_separable=include)
    extra = set(params) - set(required)
    if extra:
        raise ValueError(f"game {spec.name!r} got unknown parameters {sorted(extra)}")
    return ctor(**{k: params[k] for k in required})


def catalog_names() -> list:
    return sorted(_CATALOG)
