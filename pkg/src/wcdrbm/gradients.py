"""Log-likelihood gradient estimators for binary RBMs.

Every estimator is a positive phase minus a pluggable negative phase. The
phases are expectations of the energy derivatives, so for a state x:

    d/db_j   -> -x_j
    d/dc_i   -> -sigma(c_i + W_i.x)
    d/dW_ij  -> -x_j * sigma(c_i + W_i.x)

The negative phase is a weighted combination of such terms over a set of
states: uniform over k-step Gibbs reconstructions (CD), uniform over
persistent chains (PCD), softmax of negative free energies over either set
(WCD / WPCD), or the exact model distribution over the whole visible space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import exact as exact_eval
from .bits import as_bit_matrix, iter_state_blocks
from .model import RbmParams, free_energies, gibbs_update

WEIGHT_SUM_TOL = 1e-9


@dataclass
class GradientDelta:
    """An additive parameter update with the same shape as RbmParams."""

    db: np.ndarray
    dc: np.ndarray
    dW: np.ndarray

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int) -> "GradientDelta":
        return cls(np.zeros(n_visible), np.zeros(n_hidden),
                   np.zeros((n_hidden, n_visible)))

    def __add__(self, other: "GradientDelta") -> "GradientDelta":
        return GradientDelta(self.db + other.db, self.dc + other.dc,
                             self.dW + other.dW)

    def __sub__(self, other: "GradientDelta") -> "GradientDelta":
        return GradientDelta(self.db - other.db, self.dc - other.dc,
                             self.dW - other.dW)

    def __mul__(self, scale) -> "GradientDelta":
        return GradientDelta(self.db * scale, self.dc * scale, self.dW * scale)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(np.abs(self.db).max(), np.abs(self.dc).max(),
                   np.abs(self.dW).max())

    def allclose(self, other: "GradientDelta", atol: float = 0.0,
                 rtol: float = 1e-12) -> bool:
        return (np.allclose(self.db, other.db, atol=atol, rtol=rtol)
                and np.allclose(self.dc, other.dc, atol=atol, rtol=rtol)
                and np.allclose(self.dW, other.dW, atol=atol, rtol=rtol))


def _phase_over(params: RbmParams, states_f: np.ndarray,
                weights: np.ndarray) -> GradientDelta:
    sig = expit(states_f @ params.W.T + params.c)
    db = -(weights @ states_f)
    dc = -(weights @ sig)
    dW = -((sig * weights[:, None]).T @ states_f)
    return GradientDelta(db, dc, dW)


def per_example_phase(params: RbmParams, x) -> GradientDelta:
    """E_{P(h|x)} of the energy derivatives for a single visible state."""
    X = as_bit_matrix(np.asarray(x)[None, :], params.n_visible).astype(np.float64)
    return _phase_over(params, X, np.ones(1))


def positive_phase(params: RbmParams, batch) -> GradientDelta:
    """Uniform mean of per-example phases over a non-empty batch."""
    X = as_bit_matrix(batch, params.n_visible).astype(np.float64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    return _phase_over(params, X, np.full(n, 1.0 / n))


def weighted_phase(params: RbmParams, states, weights) -> GradientDelta:
    """Convex combination of per-example phases with the given weights."""
    X = as_bit_matrix(states, params.n_visible).astype(np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty state list")
    if w.shape != (X.shape[0],):
        raise ValueError("one weight per state required")
    if np.any(w < 0):
        raise ValueError("negative phase weights are not allowed")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights sum to {total!r}, expected 1")
    return _phase_over(params, X, w / total)


def batch_softmax_weights(params: RbmParams, states) -> np.ndarray:
    """Relative model probabilities within a batch: softmax of -FreeEnergy.

    The partition function cancels in the ratio, so only free energies are
    needed; the max is subtracted before exponentiating.
    """
    X = as_bit_matrix(states, params.n_visible)
    if X.shape[0] == 0:
        raise ValueError("empty state list")
    neg_f = -free_energies(params, X)
    neg_f -= neg_f.max()
    w = np.exp(neg_f)
    return w / w.sum()


def cd_negative_phase(params: RbmParams, batch, k: int, seed) -> GradientDelta:
    """Uniform mean over k-step Gibbs reconstructions of the batch."""
    recon = _reconstruct(params, batch, k, seed)
    return positive_phase(params, recon)


def wcd_negative_phase(params: RbmParams, batch, k: int, seed) -> GradientDelta:
    """Reconstructions as in CD, combined by softmax free-energy weights."""
    recon = _reconstruct(params, batch, k, seed)
    return weighted_phase(params, recon, batch_softmax_weights(params, recon))


def _reconstruct(params: RbmParams, batch, k: int, seed) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be >= 1")
    X = as_bit_matrix(batch, params.n_visible)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    rng = np.random.default_rng(seed)
    recon = np.ascontiguousarray(X.copy())
    gibbs_update(params, recon, k, rng)
    return recon


def pcd_negative_phase(params: RbmParams, chains: np.ndarray, seed):
    """Advance each persistent chain one Gibbs step; uniform mean phase.

    Returns (delta, advanced_chains); the caller keeps the advanced array
    across updates. The input array is left untouched.
    """
    chains = as_bit_matrix(chains, params.n_visible)
    if chains.shape[0] == 0:
        raise ValueError("empty chain list")
    rng = np.random.default_rng(seed)
    gibbs_update(params, chains, 1, rng)
    return positive_phase(params, chains), chains


def wpcd_negative_phase(params: RbmParams, chains: np.ndarray, seed):
    """PCD advancement combined by softmax free-energy weights."""
    chains = as_bit_matrix(chains, params.n_visible)
    if chains.shape[0] == 0:
        raise ValueError("empty chain list")
    rng = np.random.default_rng(seed)
    gibbs_update(params, chains, 1, rng)
    delta = weighted_phase(params, chains, batch_softmax_weights(params, chains))
    return delta, chains


def exact_negative_phase(params: RbmParams, limit: int = 25) -> GradientDelta:
    """Exact model expectation of the phase over all 2**n_visible states.

    Accumulates block by block in ascending state-index order.
    """
    log_z = exact_eval.compute_log_z(params, limit=limit)
    delta = GradientDelta.zeros(params.n_visible, params.n_hidden)
    for _, block in iter_state_blocks(params.n_visible):
        block_f = block.astype(np.float64)
        probs = np.exp(-free_energies(params, block) - log_z)
        sig = expit(block_f @ params.W.T + params.c)
        delta.db -= probs @ block_f
        delta.dc -= probs @ sig
        delta.dW -= (sig * probs[:, None]).T @ block_f
    return delta


def exact_loglik_gradient(params: RbmParams, dataset, limit: int = 25) -> GradientDelta:
    """Ascent direction of the target-weighted exact log-likelihood."""
    dataset.validate()
    data_term = weighted_phase(params, dataset.states, dataset.target_probs)
    return exact_negative_phase(params, limit=limit) - data_term
