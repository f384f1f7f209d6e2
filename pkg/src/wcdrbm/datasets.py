"""The nine benchmark training spaces, splitting, and dataset file I/O.

A training space is a list of distinct binary states together with a
target probability for each. Six problems use uniform (empirical) targets
over structured state sets; the 12-bit integer problems draw their targets
from a decreasing Gaussian-like profile or from fixed per-group masses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import (as_bit_matrix, format_bitstring, indices_of, parse_bitstring,
                   states_from_indices)
from .errors import DatasetFormatError
from .ioutils import atomic_write_text, format_float

NORMALIZATION_TOL = 1e-9


@dataclass
class Dataset:
    """Distinct binary states plus a target probability for each."""

    name: str
    n_bits: int
    states: np.ndarray
    target_probs: np.ndarray
    normalized: bool = field(default=True)

    def __post_init__(self):
        self.states = as_bit_matrix(self.states, self.n_bits)
        self.target_probs = np.asarray(self.target_probs, dtype=np.float64)

    def __len__(self):
        return self.states.shape[0]

    def validate(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be positive")
        if self.states.shape[0] == 0:
            raise ValueError("dataset has no states")
        if self.target_probs.shape != (self.states.shape[0],):
            raise ValueError("one target probability per state required")
        if np.any(self.target_probs <= 0):
            raise ValueError("target probabilities must be positive")
        if len(set(indices_of(self.states).tolist())) != self.states.shape[0]:
            raise ValueError("dataset states must be pairwise distinct")
        if self.normalized:
            total = self.target_probs.sum()
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"target probabilities sum to {total!r}")
        return self


def _uniform(name: str, states: np.ndarray) -> Dataset:
    states = np.ascontiguousarray(states, dtype=np.uint8)
    count = states.shape[0]
    return Dataset(name, states.shape[1], states, np.full(count, 1.0 / count))


def bars_and_stripes(rows: int, cols: int, name: str | None = None) -> Dataset:
    """All images with uniform rows, union all with uniform columns.

    The all-zero and all-one images belong to both families and are kept
    once, giving 2^rows + 2^cols - 2 states. Targets are uniform.
    """
    if rows < 2 or cols < 2:
        raise ValueError("bars-and-stripes needs at least a 2x2 grid")
    seen = set()
    flat_states = []

    def add(image):
        flat = image.reshape(-1)
        key = format_bitstring(flat)
        if key not in seen:
            seen.add(key)
            flat_states.append(flat)

    for mask in range(1 << rows):
        row_vals = np.array([(mask >> (rows - 1 - r)) & 1 for r in range(rows)],
                            dtype=np.uint8)
        add(np.repeat(row_vals[:, None], cols, axis=1))
    for mask in range(1 << cols):
        col_vals = np.array([(mask >> (cols - 1 - c)) & 1 for c in range(cols)],
                            dtype=np.uint8)
        add(np.repeat(col_vals[None, :], rows, axis=0))
    return _uniform(name or f"bars-stripes-{rows}x{cols}", np.array(flat_states))


_SHIFTER_CODES = (
    ((0, 0, 1), -1),  # rotate one position left
    ((0, 1, 0), 0),   # copy unchanged
    ((1, 0, 0), +1),  # rotate one position right
)


def labeled_shifter(n: int, name: str | None = None) -> Dataset:
    """pattern || 3-bit code || transformed pattern, for every n-bit pattern.

    The code selects the transform: 001 rotates the pattern one position
    left, 010 copies it, 100 rotates it one position right (circular, so
    the state count stays 3 * 2^n at 2n + 3 bits each).
    """
    if n < 2:
        raise ValueError("shifter patterns need at least 2 bits")
    patterns = states_from_indices(np.arange(1 << n, dtype=np.int64), n)
    out = []
    for pattern in patterns:
        for code, shift in _SHIFTER_CODES:
            moved = np.roll(pattern, shift)
            out.append(np.concatenate([pattern, np.array(code, dtype=np.uint8),
                                       moved]))
    return _uniform(name or f"shifter-{n}", np.array(out))


def parity(n: int, even: bool = True, name: str | None = None) -> Dataset:
    """All n-bit states whose popcount is even (or odd), uniform targets."""
    if n < 1:
        raise ValueError("parity needs at least 1 bit")
    states = states_from_indices(np.arange(1 << n, dtype=np.int64), n)
    keep = (states.sum(axis=1) % 2) == (0 if even else 1)
    return _uniform(name or f"parity-{n}", states[keep])


def gaussian_profile(count: int, p_max: float, p_min: float) -> np.ndarray:
    """Normalized decreasing profile with q(0)/q(count-1) = p_max/p_min.

    Realizes q(n) = p_max * (p_min/p_max)^(n^2/(count-1)^2), the
    exp(-lambda n^2) shape anchored so position 0 carries the largest and
    the last position the smallest unnormalized probability.
    """
    if count < 2:
        raise ValueError("profile needs at least 2 positions")
    if not (0 < p_min < p_max):
        raise ValueError("require p_max > p_min > 0")
    n = np.arange(count, dtype=np.float64)
    q = p_max * (p_min / p_max) ** ((n / (count - 1)) ** 2)
    return q / q.sum()


def int12(p_ratio: float = 100.0, name: str = "Int12") -> Dataset:
    """The 4096 12-bit integers with Gaussian-profile targets over n."""
    if p_ratio <= 1.0:
        raise ValueError("p_ratio must exceed 1")
    states = states_from_indices(np.arange(4096, dtype=np.int64), 12)
    probs = gaussian_profile(4096, p_ratio, 1.0)
    return Dataset(name, 12, states, probs)


def _mult3_order() -> np.ndarray:
    return np.concatenate([np.arange(0, 4096, 3, dtype=np.int64),
                           np.arange(1, 4096, 3, dtype=np.int64),
                           np.arange(2, 4096, 3, dtype=np.int64)])


def mult3(variant: str, p_ratio: float = 100.0, name: str | None = None) -> Dataset:
    """12-bit integers ordered by residue mod 3: multiples of 3, then the
    residue-1 values, then residue-2, each ascending.

    gauss: list position j gets the Gaussian-profile probability p(j).
    discrete: uniform within each residue group, group masses 0.6/0.3/0.1.
    """
    order = _mult3_order()
    states = states_from_indices(order, 12)
    if variant == "gauss":
        probs = gaussian_profile(4096, p_ratio, 1.0)
        default_name = "Mult3G"
    elif variant == "discrete":
        sizes = [len(np.arange(r, 4096, 3)) for r in range(3)]
        masses = (0.6, 0.3, 0.1)
        probs = np.concatenate([np.full(sz, mass / sz)
                                for sz, mass in zip(sizes, masses)])
        default_name = "Mult3D"
    else:
        raise ValueError(f"unknown mult3 variant: {variant!r}")
    return Dataset(name or default_name, 12, states, probs)


_GENERATORS = {
    "BS09": lambda ratio: bars_and_stripes(3, 3, name="BS09"),
    "BS16": lambda ratio: bars_and_stripes(4, 4, name="BS16"),
    "LSE11": lambda ratio: labeled_shifter(4, name="LSE11"),
    "LSE15": lambda ratio: labeled_shifter(6, name="LSE15"),
    "P08": lambda ratio: parity(8, name="P08"),
    "P10": lambda ratio: parity(10, name="P10"),
    "Int12": lambda ratio: int12(p_ratio=ratio),
    "Mult3G": lambda ratio: mult3("gauss", p_ratio=ratio),
    "Mult3D": lambda ratio: mult3("discrete", p_ratio=ratio),
}

DATASET_NAMES = tuple(_GENERATORS)


def make_dataset(dataset_name: str, p_ratio: float = 100.0) -> Dataset:
    """Build one of the nine named benchmark training spaces."""
    try:
        gen = _GENERATORS[dataset_name]
    except KeyError:
        raise ValueError(
            f"unknown dataset {dataset_name!r}; choose from {', '.join(DATASET_NAMES)}"
        ) from None
    return gen(p_ratio).validate()


def split_dataset(dataset: Dataset, train_fraction: float, seed: int):
    """Random split; train probabilities renormalized, test keeps raw mass.

    The train size rounds half up. Both halves preserve the original state
    order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be strictly between 0 and 1")
    count = len(dataset)
    n_train = int(np.floor(train_fraction * count + 0.5))
    if n_train == 0 or n_train == count:
        raise ValueError("split leaves an empty train or test set")
    perm = np.random.default_rng(seed).permutation(count)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train_probs = dataset.target_probs[train_idx]
    train = Dataset(f"{dataset.name}-train", dataset.n_bits,
                    dataset.states[train_idx], train_probs / train_probs.sum())
    test = Dataset(f"{dataset.name}-test", dataset.n_bits,
                   dataset.states[test_idx], dataset.target_probs[test_idx],
                   normalized=False)
    return train, test


def save_dataset(dataset: Dataset, path) -> None:
    """Header "name n_bits count", then one "bits prob" record per state."""
    dataset.validate()
    if any(ch.isspace() for ch in dataset.name):
        raise ValueError("dataset name must not contain whitespace")
    lines = [f"{dataset.name} {dataset.n_bits} {len(dataset)}"]
    for i in range(len(dataset)):
        lines.append(f"{format_bitstring(dataset.states[i])} "
                     f"{format_float(dataset.target_probs[i])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    """Parse and fully validate a dataset file; errors carry line numbers."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 3:
        raise DatasetFormatError(f"{path}: line 1: header must be 'name n_bits count'")
    name = header[0]
    try:
        n_bits, count = int(header[1]), int(header[2])
    except ValueError:
        raise DatasetFormatError(f"{path}: line 1: non-integer header fields") from None
    records = [ln for ln in lines[1:] if ln.strip()]
    if len(records) != count:
        raise DatasetFormatError(
            f"{path}: header declares {count} states but file has {len(records)}")
    states = np.empty((count, n_bits), dtype=np.uint8)
    probs = np.empty(count)
    for i, line in enumerate(records):
        lineno = i + 2
        parts = line.split()
        if len(parts) != 2:
            raise DatasetFormatError(f"{path}: line {lineno}: expected 'bits prob'")
        try:
            bits = parse_bitstring(parts[0])
        except ValueError as err:
            raise DatasetFormatError(f"{path}: line {lineno}: {err}") from None
        if bits.shape[0] != n_bits:
            raise DatasetFormatError(
                f"{path}: line {lineno}: expected {n_bits} bits, got {bits.shape[0]}")
        try:
            prob = float(parts[1])
        except ValueError:
            raise DatasetFormatError(
                f"{path}: line {lineno}: bad probability {parts[1]!r}") from None
        if not np.isfinite(prob) or prob <= 0:
            raise DatasetFormatError(
                f"{path}: line {lineno}: probability must be positive and finite")
        states[i] = bits
        probs[i] = prob
    dataset = Dataset(name, n_bits, states, probs)
    try:
        dataset.validate()
    except ValueError as err:
        raise DatasetFormatError(f"{path}: {err}") from None
    return dataset
