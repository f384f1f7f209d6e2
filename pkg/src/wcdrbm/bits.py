"""Binary state vectors and their canonical integer indexing.

States are numpy uint8 vectors with entries in {0, 1}. The canonical index
of a state treats bits[0] as the most significant bit, so the 12-bit
encoding of the integer n is exactly the state with index n.
"""

from __future__ import annotations

import numpy as np


def as_bit_array(bits, n_bits: int | None = None) -> np.ndarray:
    """Validate and return a 1-D uint8 bit vector."""
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D bit vector, got shape {arr.shape}")
    if n_bits is not None and arr.shape[0] != n_bits:
        raise ValueError(f"expected {n_bits} bits, got {arr.shape[0]}")
    out = arr.astype(np.uint8)
    if not np.array_equal(out, arr) or np.any(out > 1):
        raise ValueError("bit vector entries must be 0 or 1")
    return out


def as_bit_matrix(states, n_bits: int | None = None) -> np.ndarray:
    """Validate and return a 2-D uint8 matrix of row states."""
    arr = np.asarray(states)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D state matrix, got shape {arr.shape}")
    if n_bits is not None and arr.shape[1] != n_bits:
        raise ValueError(f"expected {n_bits} bits per state, got {arr.shape[1]}")
    out = arr.astype(np.uint8)
    if not np.array_equal(out, arr) or np.any(out > 1):
        raise ValueError("state entries must be 0 or 1")
    return out


def index_to_bits(index: int, n_bits: int) -> np.ndarray:
    """Decode a canonical index into its bit vector (bits[0] = MSB)."""
    if not 0 <= index < (1 << n_bits):
        raise ValueError(f"index {index} out of range for {n_bits} bits")
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((index >> shifts) & 1).astype(np.uint8)


def bits_to_index(bits) -> int:
    """Encode a bit vector into its canonical index (bits[0] = MSB)."""
    arr = as_bit_array(bits)
    n = arr.shape[0]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return int(arr.astype(np.int64) @ weights)


def indices_of(states) -> np.ndarray:
    """Canonical indices for each row of a state matrix."""
    arr = as_bit_matrix(states)
    n = arr.shape[1]
    if n > 62:
        raise ValueError("indices_of supports at most 62 bits")
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return arr.astype(np.int64) @ weights


def states_from_indices(indices, n_bits: int) -> np.ndarray:
    """Decode an array of canonical indices into a state matrix."""
    idx = np.asarray(indices, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= (1 << n_bits)):
        raise ValueError(f"index out of range for {n_bits} bits")
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def all_states(n_bits: int) -> np.ndarray:
    """All 2**n_bits states in canonical index order."""
    if n_bits > 24:
        raise ValueError("all_states would allocate too much; iterate blocks instead")
    return states_from_indices(np.arange(1 << n_bits, dtype=np.int64), n_bits)


def iter_state_blocks(n_bits: int, block_size: int = 1 << 16):
    """Yield (start_index, states) blocks covering the full space in order."""
    total = 1 << n_bits
    for start in range(0, total, block_size):
        stop = min(start + block_size, total)
        yield start, states_from_indices(np.arange(start, stop, dtype=np.int64), n_bits)


def format_bitstring(bits) -> str:
    return "".join("1" if v else "0" for v in np.asarray(bits))


def parse_bitstring(text: str) -> np.ndarray:
    if not text or any(ch not in "01" for ch in text):
        raise ValueError(f"not a bitstring: {text!r}")
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")
