"""Saturating-loss GAN on a three-mode 1-D Gaussian mixture, full batch.

Generator 16 -> 64 -> 64 -> 1 and discriminator 1 -> 64 -> 64 -> 1, both
tanh MLPs, trained on one fixed batch of 5000 points with hand-written
reverse-mode backprop.  The game objective is

    M(u, v) = mean_i [ log D_v(x_i) + log(1 - D_v(G_u(z_i))) ]

which the discriminator ascends and the generator descends.  The module
exposes the game through the same oracle interface as the analytic
catalog, so the duality-gap machinery applies unchanged.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dg as dgmod
from .games import JointPoint, NonFiniteValueError
from .rates import seeded_rng

MODE_CENTERS = (-4.0, 0.0, 4.0)
MODE_STD = 0.1
NOISE_DIM = 16
HIDDEN = 64
PROB_EPS = 1e-7
HIST_BINS = 121
HIST_RANGE = (-6.0, 6.0)


def sample_dataset(seed: int, n: int = 5000) -> np.ndarray:
    """n mixture draws: a uniformly chosen center plus N(0, 0.01) noise."""
    rng = seeded_rng(seed, "mog-dataset")
    centers = rng.integers(0, len(MODE_CENTERS), size=n)
    return (np.asarray(MODE_CENTERS)[centers]
            + MODE_STD * rng.standard_normal(n))


def mode_coverage(samples, centers=MODE_CENTERS, window: float = 0.5):
    """Fraction of samples within +-window of each center."""
    if window <= 0:
        raise ValueError("window must be positive")
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample set")
    return tuple(float(np.mean(np.abs(samples - c) <= window))
                 for c in centers)


def stable_sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out


# ---------------------------------------------------------------------------
# flat-parameter MLPs
# ---------------------------------------------------------------------------


class MLPLayout:
    """Shape bookkeeping for a tanh MLP stored as one flat vector."""

    def __init__(self, sizes):
        self.sizes = tuple(sizes)
        self.slices = []
        offset = 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = (offset, offset + fan_in * fan_out, (fan_in, fan_out))
            offset = w[1]
            b = (offset, offset + fan_out, (fan_out,))
            offset = b[1]
            self.slices.append((w, b))
        self.dim = offset

    def unpack(self, params: np.ndarray):
        layers = []
        for (w0, w1, wshape), (b0, b1, bshape) in self.slices:
            layers.append((params[w0:w1].reshape(wshape), params[b0:b1]))
        return layers

    def init(self, rng: np.random.Generator, dtype) -> np.ndarray:
        """Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
        params = np.zeros(self.dim, dtype=dtype)
        layers = self.unpack(params)
        for w, _ in layers:
            fan_in, fan_out = w.shape
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            w[:] = rng.uniform(-bound, bound, size=w.shape).astype(dtype)
        return params


G_LAYOUT = MLPLayout((NOISE_DIM, HIDDEN, HIDDEN, 1))
D_LAYOUT = MLPLayout((1, HIDDEN, HIDDEN, 1))


def mlp_forward(layout: MLPLayout, params, x):
    """Forward pass with tanh hiddens and a linear head.

    Returns the (n,) output and the activation stack for backprop.
    In-place bias add and tanh keep temporary traffic down; the batch
    matmuls dominate the remaining cost.
    """
    layers = layout.unpack(params)
    acts = [x]
    h = x
    for w, b in layers[:-1]:
        t = h @ w
        t += b
        np.tanh(t, out=t)
        acts.append(t)
        h = t
    w, b = layers[-1]
    out = h @ w
    out += b
    return out[:, 0], acts


def mlp_backward(layout: MLPLayout, params, acts, dout, dtype):
    """Gradients of sum(dout * output) w.r.t. params and the input."""
    layers = layout.unpack(params)
    grad = np.zeros(layout.dim, dtype=dtype)
    glayers = layout.unpack(grad)  # views into grad
    g = dout.astype(dtype, copy=False)[:, None]
    w, _ = layers[-1]
    gw, gb = glayers[-1]
    gw[:] = acts[-1].T @ g
    gb[:] = g.sum(axis=0)
    g = g @ w.T
    for idx in range(len(layers) - 2, -1, -1):
        h = acts[idx + 1]
        tmp = np.square(h)
        np.subtract(1.0, tmp, out=tmp)
        g *= tmp
        gw, gb = glayers[idx]
        gw[:] = acts[idx].T @ g
        gb[:] = g.sum(axis=0)
        g = g @ layers[idx][0].T
    return grad, g


# ---------------------------------------------------------------------------
# the GAN game
# ---------------------------------------------------------------------------


class MogGanGame:
    """Full-batch saturating GAN objective as a two-player game oracle.

    The dataset and the generator noise are drawn once at construction,
    so value and gradients are deterministic functions of (u, v).
    """

    def __init__(self, seed: int, n: int = 5000, dtype=np.float64):
        self.seed = seed
        self.n = n
        self.dtype = np.dtype(dtype)
        self.name = f"mog:seed={seed}"
        self.dim_u = G_LAYOUT.dim
        self.dim_v = D_LAYOUT.dim
        self.second_order = None
        self.domain = None
        self.data = sample_dataset(seed, n).astype(self.dtype)
        rng = seeded_rng(seed, "mog-train-noise")
        self.noise = rng.standard_normal((n, NOISE_DIM)).astype(self.dtype)
        eval_rng = seeded_rng(seed, "mog-eval-noise")
        self.eval_noise = eval_rng.standard_normal((1000, NOISE_DIM)).astype(self.dtype)
        # small FIFO keyed by parameter bytes: the duality-gap inner loops
        # re-evaluate the same generator against a moving discriminator
        self._fake_cache = {}

    def init_params(self):
        u = G_LAYOUT.init(seeded_rng(self.seed, "mog-init-g"), self.dtype)
        v = D_LAYOUT.init(seeded_rng(self.seed, "mog-init-d"), self.dtype)
        return u, v

    # -- generator / discriminator passes ---------------------------------

    def generate(self, u, noise=None):
        z = self.noise if noise is None else noise
        out, _ = mlp_forward(G_LAYOUT, u, z)
        return out

    def _fake_with_cache(self, u):
        key = hashlib.sha1(u.tobytes()).digest()
        hit = self._fake_cache.get(key)
        if hit is not None:
            return hit
        out, acts = mlp_forward(G_LAYOUT, u, self.noise)
        if len(self._fake_cache) >= 4:
            self._fake_cache.pop(next(iter(self._fake_cache)))
        self._fake_cache[key] = (out, acts)
        return out, acts

    def discriminate(self, v, x):
        logits, acts = mlp_forward(D_LAYOUT, v, x[:, None])
        return logits, acts

    @staticmethod
    def _clamped_probs(logits):
        p = stable_sigmoid(logits)
        clamped = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
        inside = (p > PROB_EPS) & (p < 1.0 - PROB_EPS)
        return clamped, inside

    # -- oracle surface ----------------------------------------------------

    def value(self, u, v) -> float:
        fake, _ = self._fake_with_cache(u)
        logits, _ = self.discriminate(v, np.concatenate([self.data, fake]))
        p, _ = self._clamped_probs(logits)
        real_term = float(np.mean(np.log(p[:self.n])))
        fake_term = float(np.mean(np.log(1.0 - p[self.n:])))
        total = real_term + fake_term
        if not math.isfinite(total):
            raise NonFiniteValueError("GAN objective is non-finite")
        return total

    def grad_v(self, u, v) -> np.ndarray:
        fake, _ = self._fake_with_cache(u)
        x = np.concatenate([self.data, fake])
        logits, acts = self.discriminate(v, x)
        p, inside = self._clamped_probs(logits)
        dlogit = np.empty_like(logits)
        dlogit[:self.n] = (1.0 - p[:self.n]) / self.n
        dlogit[self.n:] = -p[self.n:] / self.n
        dlogit[~inside] = 0.0
        grad, _ = mlp_backward(D_LAYOUT, v, acts, dlogit, self.dtype)
        return grad

    def grad_u(self, u, v) -> np.ndarray:
        # only the fake term depends on the generator
        fake, gacts = self._fake_with_cache(u)
        logits, dacts = self.discriminate(v, fake)
        p, inside = self._clamped_probs(logits)
        dlogit = -p / self.n
        dlogit[~inside] = 0.0
        _, dx = mlp_backward(D_LAYOUT, v, dacts, dlogit, self.dtype)
        grad, _ = mlp_backward(G_LAYOUT, u, gacts, dx[:, 0], self.dtype)
        return grad

    def joint_grad(self, p: JointPoint) -> np.ndarray:
        return np.concatenate([self.grad_u(p.u, p.v), self.grad_v(p.u, p.v)])

    def value_and_grads(self, u, v):
        return self.value(u, v), self.grad_u(u, v), self.grad_v(u, v)

    def hessian_blocks(self, p, h=1e-5):
        raise NotImplementedError("the GAN game exposes first-order "
                                  "information only")

    # -- diagnostics -------------------------------------------------------

    def eval_samples(self, u) -> np.ndarray:
        out, _ = mlp_forward(G_LAYOUT, u, self.eval_noise)
        return out

    def disc_outputs(self, v, x) -> np.ndarray:
        logits, _ = self.discriminate(v, np.asarray(x, dtype=self.dtype))
        return stable_sigmoid(logits)


def gan_value_and_grads(game: MogGanGame, u, v):
    """Objective value and both parameter gradients at (u, v)."""
    return game.value_and_grads(u, v)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

MOG_ALGORITHMS = ("gda", "eg", "co", "dg")

LOG_COLUMNS = ("iter", "value", "grad_u_norm", "grad_v_norm", "dg_metric",
               "mode_frac_m4", "mode_frac_0", "mode_frac_4",
               "disc_real_median", "disc_fake_median")


@dataclass
class MogTrainingLog:
    algorithm: str
    seed: int
    iterations: int
    rows: list = field(default_factory=list)
    status: str = "ok"
    final_samples: Optional[np.ndarray] = None
    final_histogram: Optional[np.ndarray] = None
    bin_edges: Optional[np.ndarray] = None
    final_u: Optional[np.ndarray] = None
    final_v: Optional[np.ndarray] = None
    final_disc_union_median: Optional[float] = None

    def column(self, name: str) -> np.ndarray:
        idx = LOG_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(LOG_COLUMNS) + "\n")
            for row in self.rows:
                fh.write(f"{int(row[0])},"
                         + ",".join(repr(float(x)) for x in row[1:]) + "\n")

    def write_samples_csv(self, path):
        with open(path, "w") as fh:
            fh.write("sample\n")
            for x in self.final_samples:
                fh.write(repr(float(x)) + "\n")

    def write_histogram_csv(self, path):
        with open(path, "w") as fh:
            fh.write("bin_left,bin_right,count\n")
            for left, right, count in zip(self.bin_edges[:-1],
                                          self.bin_edges[1:],
                                          self.final_histogram):
                fh.write(f"{left!r},{right!r},{int(count)}\n")


def _fd_hessian_vector(game: MogGanGame, p: JointPoint, direction,
                       base_step: float = 1e-4):
    """Central-difference product of the full objective Hessian with a
    direction, via the joint raw gradient."""
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return np.zeros_like(direction)
    delta = base_step / norm
    d_u = direction[:game.dim_u]
    d_v = direction[game.dim_u:]
    plus = JointPoint(p.u + delta * d_u, p.v + delta * d_v)
    minus = JointPoint(p.u - delta * d_u, p.v - delta * d_v)
    return (game.joint_grad(plus) - game.joint_grad(minus)) / (2.0 * delta)


def train_mog(algorithm: str, seed: int, iterations: int = 20000,
              lr_g: float = 2e-4, lr_d: float = 2e-4, co_gamma: float = 1.0,
              dg_k: int = 10, log_interval: int = 100,
              dtype=np.float32, game: Optional[MogGanGame] = None,
              n: int = 5000) -> MogTrainingLog:
    """Full-batch training with one of gda / eg / co / dg.

    The dg path estimates the duality gap with dg_k warm-started inner
    steps (inner step size = the learning rate) and both players descend
    its envelope gradient.  Logging happens every log_interval steps on
    a fixed 1000-draw noise evaluation set.
    """
    if algorithm not in MOG_ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; "
                         f"known: {MOG_ALGORITHMS}")
    if game is None:
        game = MogGanGame(seed, n=n, dtype=dtype)
    u, v = game.init_params()
    lr_g = game.dtype.type(lr_g)
    lr_d = game.dtype.type(lr_d)
    dg_cfg = dgmod.DGConfig(k=dg_k, gamma=float(lr_g), grad_mode="envelope")
    log = MogTrainingLog(algorithm=algorithm, seed=seed, iterations=iterations)

    def log_row(it, u, v):
        value, gu, gv = game.value_and_grads(u, v)
        dg_val = dgmod.dg_metric(game, JointPoint(u, v), dg_k, float(lr_g))
        samples = game.eval_samples(u)
        fracs = mode_coverage(samples)
        disc_real = float(np.median(game.disc_outputs(v, game.data)))
        disc_fake = float(np.median(game.disc_outputs(v, samples)))
        log.rows.append((it, value, float(np.linalg.norm(gu)),
                         float(np.linalg.norm(gv)), dg_val,
                         fracs[0], fracs[1], fracs[2], disc_real, disc_fake))

    log_row(0, u, v)
    try:
        for it in range(1, iterations + 1):
            if algorithm == "gda":
                gu = game.grad_u(u, v)
                gv = game.grad_v(u, v)
                u = u - lr_g * gu
                v = v + lr_d * gv
            elif algorithm == "eg":
                gu = game.grad_u(u, v)
                gv = game.grad_v(u, v)
                u_mid = u - lr_g * gu
                v_mid = v + lr_d * gv
                gu_m = game.grad_u(u_mid, v_mid)
                gv_m = game.grad_v(u_mid, v_mid)
                u = u - lr_g * gu_m
                v = v + lr_d * gv_m
            elif algorithm == "co":
                gu = game.grad_u(u, v)
                gv = game.grad_v(u, v)
                joint = np.concatenate([gu, gv])
                hvp = _fd_hessian_vector(game, JointPoint(u, v), joint)
                u = u - lr_g * (gu + co_gamma * hvp[:game.dim_u])
                v = v + lr_d * gv - lr_d * co_gamma * hvp[game.dim_u:]
            else:  # dg
                est = dgmod.dg_estimate(game, JointPoint(u, v), dg_cfg)
                u = u - lr_g * est.grad_u
                v = v - lr_d * est.grad_v
            if it % log_interval == 0 or it == iterations:
                log_row(it, u, v)
    except NonFiniteValueError:
        log.status = "diverged"

    log.final_samples = game.eval_samples(u)
    log.final_histogram, log.bin_edges = np.histogram(
        log.final_samples, bins=HIST_BINS, range=HIST_RANGE)
    log.final_u = u.copy()
    log.final_v = v.copy()
    union = np.concatenate([game.disc_outputs(v, game.data),
                            game.disc_outputs(v, log.final_samples)])
    log.final_disc_union_median = float(np.median(union))
    return log
