"""Model sampling and the Parzen-window unnormalized log-likelihood.

The estimator places an isotropic Gaussian kernel of shared width sigma on
every model sample and scores a test point by the log of the averaged
kernel density; the reported uLL is the mean score over the test set. The
normalization includes the full (2 pi sigma^2)^(-d/2) factor, so values
are comparable only between models evaluated with the same sigma, sample
budget and test set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .bits import format_bitstring, parse_bitstring
from .errors import DatasetFormatError
from .ioutils import atomic_write_text
from .model import RbmParams, gibbs_update

DEFAULT_SIGMA = 0.2
DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 10
DEFAULT_CHAINS = 100


@dataclass
class SampleSet:
    """Visible-space sample vectors plus provenance metadata."""

    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a 2-D array of row vectors")

    def __len__(self):
        return self.samples.shape[0]


def sample_model(params: RbmParams, n_samples: int, burn_in: int = DEFAULT_BURN_IN,
                 thinning: int = DEFAULT_THINNING, n_chains: int = DEFAULT_CHAINS,
                 seed=0) -> SampleSet:
    """Thinned Gibbs samples from independent chains with uniform starts.

    After burn-in, every chain contributes one visible state per
    ``thinning`` steps, collected round-robin until n_samples are stored.
    """
    if n_samples < 1 or n_chains < 1 or thinning < 1 or burn_in < 0:
        raise ValueError("counts must be positive (burn_in may be zero)")
    rng = np.random.default_rng(seed)
    chains = (rng.random((n_chains, params.n_visible)) < 0.5).astype(np.uint8)
    if burn_in > 0:
        gibbs_update(params, chains, burn_in, rng)
    blocks = []
    collected = 0
    while collected < n_samples:
        gibbs_update(params, chains, thinning, rng)
        take = min(n_chains, n_samples - collected)
        blocks.append(chains[:take].copy())
        collected += take
    samples = np.concatenate(blocks, axis=0).astype(np.float64)
    meta = {"n_chains": n_chains, "burn_in": burn_in,
            "thinning": thinning, "seed": seed}
    return SampleSet(samples, meta)


def _log_kernel_matrix(test: np.ndarray, samples: np.ndarray, sigma: float,
                       block: int = 256) -> np.ndarray:
    """log G(y_j) for every test row, computed in the log domain."""
    n_s, d = samples.shape
    norm = -0.5 * d * np.log(2.0 * np.pi * sigma * sigma) - np.log(n_s)
    out = np.empty(test.shape[0])
    inv = -0.5 / (sigma * sigma)
    for start in range(0, test.shape[0], block):
        chunk = test[start:start + block]
        d2 = ((chunk[:, None, :] - samples[None, :, :]) ** 2).sum(axis=2)
        out[start:start + chunk.shape[0]] = logsumexp(inv * d2, axis=1) + norm
    return out


def parzen_ull(test, samples: SampleSet | np.ndarray, sigma: float) -> float:
    """Mean log averaged-kernel density of the test points."""
    sample_arr = samples.samples if isinstance(samples, SampleSet) else np.asarray(
        samples, dtype=np.float64)
    test_arr = np.asarray(test, dtype=np.float64)
    if test_arr.ndim != 2 or sample_arr.ndim != 2:
        raise ValueError("test and samples must be 2-D arrays")
    if test_arr.shape[0] == 0 or sample_arr.shape[0] == 0:
        raise ValueError("test and sample sets must be non-empty")
    if test_arr.shape[1] != sample_arr.shape[1]:
        raise ValueError("test and sample dimensions differ")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(_log_kernel_matrix(test_arr, sample_arr, sigma).mean())


def ull_curve(test, samples: SampleSet, sigma: float, eval_points):
    """uLL over growing sample prefixes, one value per eval point."""
    points = [int(p) for p in eval_points]
    if any(p < 1 for p in points):
        raise ValueError("eval points must be positive")
    if any(q < p for p, q in zip(points, points[1:])):
        raise ValueError("eval points must be increasing")
    if points and points[-1] > len(samples):
        raise ValueError("eval point exceeds the number of samples")
    return [(p, parzen_ull(test, samples.samples[:p], sigma)) for p in points]


def save_sample_set(sample_set: SampleSet, path) -> None:
    """Header "d N_s", '#'-prefixed metadata lines, one bitstring per sample."""
    arr = sample_set.samples
    rounded = arr.astype(np.uint8)
    if not np.array_equal(rounded, arr):
        raise ValueError("sample-set file format stores binary states only")
    lines = [f"{arr.shape[1]} {arr.shape[0]}"]
    for key in sorted(sample_set.meta):
        lines.append(f"# {key}={sample_set.meta[key]}")
    lines.extend(format_bitstring(row) for row in rounded)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_sample_set(path) -> SampleSet:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise DatasetFormatError(f"{path}: line 1: header must be 'd N_s'")
    try:
        d, n = int(header[0]), int(header[1])
    except ValueError:
        raise DatasetFormatError(f"{path}: line 1: non-integer header") from None
    meta = {}
    rows = []
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        try:
            bits = parse_bitstring(line.strip())
        except ValueError as err:
            raise DatasetFormatError(f"{path}: line {lineno}: {err}") from None
        if bits.shape[0] != d:
            raise DatasetFormatError(
                f"{path}: line {lineno}: expected {d} bits, got {bits.shape[0]}")
        rows.append(bits)
    if len(rows) != n:
        raise DatasetFormatError(
            f"{path}: header declares {n} samples but file has {len(rows)}")
    return SampleSet(np.asarray(rows, dtype=np.float64), meta)
