"""Binary RBM parameters, energies, conditionals and Gibbs sampling.

The model assigns Energy(x, h) = -b.x - c.h - h.Wx to a joint binary
configuration; marginalizing the hidden layer gives the free energy
F(x) = -b.x - sum_i softplus(c_i + W_i.x), which every probability
computation here works with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import backend
from .bits import as_bit_array, as_bit_matrix
from .ioutils import atomic_write_text

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class RbmParams:
    """Visible biases b, hidden biases c and weight matrix W (n_h x n_v)."""

    n_visible: int
    n_hidden: int
    b: np.ndarray
    c: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        if self.n_visible < 1 or self.n_hidden < 1:
            raise ValueError("unit counts must be positive")
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        self.c = np.ascontiguousarray(self.c, dtype=np.float64)
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        if self.b.shape != (self.n_visible,):
            raise ValueError(f"b must have shape ({self.n_visible},)")
        if self.c.shape != (self.n_hidden,):
            raise ValueError(f"c must have shape ({self.n_hidden},)")
        if self.W.shape != (self.n_hidden, self.n_visible):
            raise ValueError(f"W must have shape ({self.n_hidden}, {self.n_visible})")
        self.check_finite()

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int) -> "RbmParams":
        return cls(n_visible, n_hidden,
                   np.zeros(n_visible), np.zeros(n_hidden),
                   np.zeros((n_hidden, n_visible)))

    def copy(self) -> "RbmParams":
        return RbmParams(self.n_visible, self.n_hidden,
                         self.b.copy(), self.c.copy(), self.W.copy())

    def check_finite(self):
        if not (np.isfinite(self.b).all() and np.isfinite(self.c).all()
                and np.isfinite(self.W).all()):
            raise ValueError("RBM parameters contain non-finite entries")

    def __eq__(self, other):
        return (isinstance(other, RbmParams)
                and self.n_visible == other.n_visible
                and self.n_hidden == other.n_hidden
                and np.array_equal(self.b, other.b)
                and np.array_equal(self.c, other.c)
                and np.array_equal(self.W, other.W))


@dataclass
class GibbsChain:
    """A single Gibbs chain: current visible state plus its generator."""

    visible: np.ndarray
    rng: np.random.Generator = field(repr=False)

    def __post_init__(self):
        self.visible = as_bit_array(self.visible)


def softplus(z):
    """log(1 + e^z), overflow-safe for large z."""
    z = np.asarray(z, dtype=np.float64)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.log1p(np.exp(np.minimum(z, 30.0)))
    big = z > 30.0
    if big.any():
        out[big] = z[big] + np.log1p(np.exp(-z[big]))
    return float(out[0]) if scalar else out


def energy(params: RbmParams, x, h) -> float:
    """Joint energy -b.x - c.h - h.Wx of one configuration."""
    xv = as_bit_array(x, params.n_visible).astype(np.float64)
    hv = as_bit_array(h, params.n_hidden).astype(np.float64)
    return float(-params.b @ xv - params.c @ hv - hv @ (params.W @ xv))


def free_energies(params: RbmParams, states) -> np.ndarray:
    """Free energies of each row state: F(x) = -b.x - sum softplus(c + Wx)."""
    X = as_bit_matrix(states, params.n_visible).astype(np.float64)
    pre = X @ params.W.T + params.c
    return -(X @ params.b) - softplus(pre).sum(axis=1)


def free_energy(params: RbmParams, x) -> float:
    return float(free_energies(params, np.asarray(x)[None, :])[0])


def hidden_probs(params: RbmParams, states) -> np.ndarray:
    """P(h_i = 1 | x) for each row state, shape (N, n_hidden)."""
    X = as_bit_matrix(states, params.n_visible).astype(np.float64)
    return expit(X @ params.W.T + params.c)


def hidden_activation_probs(params: RbmParams, x) -> np.ndarray:
    return hidden_probs(params, np.asarray(x)[None, :])[0]


def visible_probs(params: RbmParams, hiddens) -> np.ndarray:
    """P(x_j = 1 | h) for each row of hidden states, shape (N, n_visible)."""
    H = as_bit_matrix(hiddens, params.n_hidden).astype(np.float64)
    return expit(H @ params.W + params.b)


def visible_activation_probs(params: RbmParams, h) -> np.ndarray:
    return visible_probs(params, np.asarray(h)[None, :])[0]


def gibbs_update(params: RbmParams, states: np.ndarray, k: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Advance a (N, n_visible) uint8 batch of chains k Gibbs steps in place."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if (not isinstance(states, np.ndarray) or states.dtype != np.uint8
            or states.ndim != 2 or not states.flags.c_contiguous):
        raise ValueError("states must be a C-contiguous (N, n_visible) uint8 "
                         "array; it is advanced in place")
    if states.shape[1] != params.n_visible:
        raise ValueError(f"states must have {params.n_visible} columns")
    backend.gibbs_chunk(params.b, params.c, params.W, states, k, rng)
    return states


def gibbs_step(params: RbmParams, chain: GibbsChain) -> GibbsChain:
    """One block Gibbs step h ~ P(h|x), x' ~ P(x|h); advances chain.rng."""
    batch = chain.visible[None, :].copy()
    gibbs_update(params, batch, 1, chain.rng)
    return GibbsChain(batch[0], chain.rng)


def gibbs_chain_k(params: RbmParams, start, k: int, seed) -> np.ndarray:
    """The visible state after k Gibbs steps from ``start``."""
    if k < 1:
        raise ValueError("k must be >= 1 (a 0-step chain is undefined)")
    rng = np.random.default_rng(seed)
    batch = as_bit_array(start, params.n_visible)[None, :].copy()
    gibbs_update(params, batch, k, rng)
    return batch[0]


def save_checkpoint(params: RbmParams, path) -> None:
    """Write a self-describing JSON checkpoint; floats keep full precision."""
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "n_visible": params.n_visible,
        "n_hidden": params.n_hidden,
        "b": params.b.tolist(),
        "c": params.c.tolist(),
        "W": params.W.ravel().tolist(),
    }
    atomic_write_text(path, json.dumps(doc) + "\n")


def load_checkpoint(path) -> RbmParams:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format_version: {version!r}")
    n_v, n_h = int(doc["n_visible"]), int(doc["n_hidden"])
    W = np.asarray(doc["W"], dtype=np.float64).reshape(n_h, n_v)
    return RbmParams(n_v, n_h, np.asarray(doc["b"]), np.asarray(doc["c"]), W)
