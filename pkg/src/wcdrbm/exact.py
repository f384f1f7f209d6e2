"""Exact partition function, state probabilities and KL by enumeration.

Feasible whenever 2**n_visible free-energy evaluations fit in memory and
patience; the benchmark problems need at most 16 bits. All arithmetic
stays in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .bits import format_bitstring, indices_of, iter_state_blocks
from .errors import EnumerationLimitError
from .model import RbmParams, free_energies

DEFAULT_ENUMERATION_LIMIT = 25

TARGET_SUM_TOL = 1e-9


@dataclass
class ExactModelDistribution:
    """log Z and per-state log probabilities, indexed by canonical index."""

    n_visible: int
    log_z: float
    log_probs: np.ndarray


def _check_limit(params: RbmParams, limit: int):
    if params.n_visible > limit:
        raise EnumerationLimitError(
            f"enumeration over {params.n_visible} visible bits exceeds the "
            f"limit of {limit}")


def compute_log_z(params: RbmParams, limit: int = DEFAULT_ENUMERATION_LIMIT) -> float:
    """log of the partition function via free-energy enumeration.

    Per-block log-sum-exp results are merged in a fixed order so the value
    is reproducible regardless of block size.
    """
    _check_limit(params, limit)
    partials = [logsumexp(-free_energies(params, block))
                for _, block in iter_state_blocks(params.n_visible)]
    return float(logsumexp(partials))


def compute_exact_distribution(params: RbmParams,
                               limit: int = DEFAULT_ENUMERATION_LIMIT
                               ) -> ExactModelDistribution:
    """Exact log probabilities of every visible state."""
    _check_limit(params, limit)
    neg_f = np.empty(1 << params.n_visible)
    for start, block in iter_state_blocks(params.n_visible):
        neg_f[start:start + block.shape[0]] = -free_energies(params, block)
    partials = [logsumexp(neg_f[start:start + (1 << 16)])
                for start in range(0, neg_f.shape[0], 1 << 16)]
    log_z = float(logsumexp(partials))
    return ExactModelDistribution(params.n_visible, log_z, neg_f - log_z)


def _target_arrays(target):
    target.validate()
    probs = np.asarray(target.target_probs, dtype=np.float64)
    total = probs.sum()
    if abs(total - 1.0) > TARGET_SUM_TOL:
        raise ValueError(f"target probabilities sum to {total!r}, expected 1")
    return target.states, probs


def kl_divergence(target, model: ExactModelDistribution) -> float:
    """KL(target || model) over the target's support."""
    states, probs = _target_arrays(target)
    if states.shape[1] != model.n_visible:
        raise ValueError("state width does not match the model distribution")
    log_model = model.log_probs[indices_of(states)]
    return float(np.sum(probs * (np.log(probs) - log_model)))


def dataset_loglikelihood(target, model: ExactModelDistribution) -> float:
    """Target-weighted average log-likelihood of the target states."""
    states, probs = _target_arrays(target)
    if states.shape[1] != model.n_visible:
        raise ValueError("state width does not match the model distribution")
    return float(probs @ model.log_probs[indices_of(states)])


def model_probabilities_of(states, model: ExactModelDistribution) -> np.ndarray:
    """Model probabilities of the given states, by index lookup."""
    idx = indices_of(states)
    if np.asarray(states).shape[-1] != model.n_visible:
        raise ValueError("state width does not match the model distribution")
    return np.exp(model.log_probs[idx])


def profile_rows(dataset, model: ExactModelDistribution):
    """(state_index, state_bits, target_prob, model_prob) per dataset state."""
    model_probs = model_probabilities_of(dataset.states, model)
    idx = indices_of(dataset.states)
    for i in range(dataset.states.shape[0]):
        yield (int(idx[i]), format_bitstring(dataset.states[i]),
               float(dataset.target_probs[i]), float(model_probs[i]))
