"""Pure-numpy implementations of the training hot kernels.

This is the fallback backend used when the compiled extension is not
available. Both backends implement the same contract:

* ``gibbs_chunk``   -- advance a batch of Gibbs chains k steps in place.
* ``update_step``   -- one full parameter update (positive phase, negative
                       phase per estimator, momentum step), in place.

Uniform draws are consumed from the supplied ``numpy.random.Generator`` in
a documented order (per Gibbs step: all hidden draws in row-major chain
order, then all visible draws), so a given seed produces the same chain
realizations in either backend up to floating-point summation order.

A unit samples to 1 when its uniform draw is strictly below the activation
probability.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

COMPILED = False

MODE_CD = 0
MODE_WCD = 1
MODE_PCD = 2
MODE_WPCD = 3

WEIGHTED_MODES = (MODE_WCD, MODE_WPCD)
PERSISTENT_MODES = (MODE_PCD, MODE_WPCD)


def gibbs_chunk(b, c, W, vis, k, rng):
    """Advance N parallel Gibbs chains by k block steps, in place.

    vis is an (N, n_visible) uint8 array; each step samples all hidden
    units given the visibles, then all visibles given the hiddens.
    """
    for _ in range(k):
        vf = vis.astype(np.float64)
        ph = expit(vf @ W.T + c)
        h = (rng.random(ph.shape) < ph).astype(np.float64)
        pv = expit(h @ W + b)
        vis[:] = rng.random(pv.shape) < pv
    return vis


def _phase_sums(b, c, W, states_f, weights):
    """Weighted sums of (x, sigma(c + Wx), outer) over states; unsigned."""
    sig = expit(states_f @ W.T + c)
    acc_b = weights @ states_f
    acc_c = weights @ sig
    acc_w = (sig * weights[:, None]).T @ states_f
    return acc_b, acc_c, acc_w


def update_step(b, c, W, vel_b, vel_c, vel_W, batch, data_weights,
                mode, k, chains, eta, momentum, weight_decay, rng):
    """One gradient-ascent update with a sampled negative phase, in place.

    batch is (N, n_visible) uint8 with data_weights summing to 1. For the
    persistent modes the negative states are the ``chains`` array advanced
    one Gibbs step in place; otherwise they are k-step reconstructions of
    the batch. Weighted modes combine negative states with a softmax of
    negative free energies instead of uniform 1/M.

    Returns True when all parameters are finite after the update.
    """
    batch_f = batch.astype(np.float64)
    pos_b, pos_c, pos_w = _phase_sums(b, c, W, batch_f, data_weights)

    if mode in PERSISTENT_MODES:
        states = chains
        gibbs_chunk(b, c, W, states, 1, rng)
    else:
        states = batch.copy()
        gibbs_chunk(b, c, W, states, k, rng)
    states_f = states.astype(np.float64)
    m = states_f.shape[0]

    if mode in WEIGHTED_MODES:
        neg_free = states_f @ b + np.logaddexp(0.0, states_f @ W.T + c).sum(axis=1)
        neg_free -= neg_free.max()
        weights = np.exp(neg_free)
        weights /= weights.sum()
    else:
        weights = np.full(m, 1.0 / m)

    neg_b, neg_c, neg_w = _phase_sums(b, c, W, states_f, weights)

    if weight_decay != 0.0:
        decay_term = (eta * weight_decay) * W
    else:
        decay_term = None
    vel_b *= momentum
    vel_b += eta * (pos_b - neg_b)
    vel_c *= momentum
    vel_c += eta * (pos_c - neg_c)
    vel_W *= momentum
    vel_W += eta * (pos_w - neg_w)
    b += vel_b
    c += vel_c
    W += vel_W
    if decay_term is not None:
        W -= decay_term

    return bool(np.isfinite(b).all() and np.isfinite(c).all() and np.isfinite(W).all())
