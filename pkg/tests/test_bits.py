import numpy as np
import pytest

from wcdrbm.bits import (all_states, as_bit_array, bits_to_index, format_bitstring,
                         index_to_bits, indices_of, iter_state_blocks,
                         parse_bitstring, states_from_indices)


def test_round_trip_full_space():
    for n in (1, 3, 10):
        for i in range(1 << n):
            assert bits_to_index(index_to_bits(i, n)) == i


def test_msb_first_convention():
    # the 12-bit encoding of the integer n is the state with index n
    assert index_to_bits(1, 12).tolist() == [0] * 11 + [1]
    assert index_to_bits(1 << 11, 12).tolist() == [1] + [0] * 11
    assert bits_to_index([1, 0, 0]) == 4


def test_all_states_order_and_block_iteration():
    states = all_states(6)
    assert states.shape == (64, 6)
    assert np.array_equal(indices_of(states), np.arange(64))
    rebuilt = np.concatenate([blk for _, blk in iter_state_blocks(6, block_size=5)])
    assert np.array_equal(rebuilt, states)


def test_states_from_indices_matches_scalar():
    idx = np.array([0, 5, 63])
    stacked = states_from_indices(idx, 6)
    for row, i in zip(stacked, idx):
        assert np.array_equal(row, index_to_bits(int(i), 6))


def test_bitstring_round_trip():
    bits = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    assert np.array_equal(parse_bitstring(format_bitstring(bits)), bits)
    with pytest.raises(ValueError):
        parse_bitstring("10a1")
    with pytest.raises(ValueError):
        parse_bitstring("")


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        as_bit_array([0, 1, 2])
    with pytest.raises(ValueError):
        as_bit_array([[0, 1]])
    with pytest.raises(ValueError):
        index_to_bits(8, 3)
