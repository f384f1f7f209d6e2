import math

import numpy as np
import pytest

from wcdrbm.bits import bits_to_index, format_bitstring, indices_of
from wcdrbm.datasets import (DATASET_NAMES, Dataset, bars_and_stripes,
                             gaussian_profile, int12, labeled_shifter,
                             load_dataset, make_dataset, mult3, parity,
                             save_dataset, split_dataset)
from wcdrbm.errors import DatasetFormatError

TABLE_SIZES = {
    "BS09": (9, 14), "BS16": (16, 30), "LSE11": (11, 48), "LSE15": (15, 192),
    "P08": (8, 128), "P10": (10, 512), "Int12": (12, 4096),
    "Mult3G": (12, 4096), "Mult3D": (12, 4096),
}


@pytest.mark.parametrize("name", DATASET_NAMES)
def test_benchmark_cardinalities(name):
    dataset = make_dataset(name)
    bits, count = TABLE_SIZES[name]
    assert dataset.n_bits == bits
    assert len(dataset) == count
    dataset.validate()


class TestBarsAndStripes:
    def test_2x2_count(self):
        assert len(bars_and_stripes(2, 2)) == 6

    def test_brute_force_membership(self):
        dataset = bars_and_stripes(3, 3)
        for flat in dataset.states:
            image = flat.reshape(3, 3)
            rows_uniform = all(len(set(row)) == 1 for row in image.tolist())
            cols_uniform = all(len(set(col)) == 1 for col in image.T.tolist())
            assert rows_uniform or cols_uniform

    def test_uniform_targets(self):
        dataset = bars_and_stripes(4, 4)
        assert np.allclose(dataset.target_probs, 1 / 30)

    def test_degenerate_dims(self):
        with pytest.raises(ValueError):
            bars_and_stripes(1, 3)


class TestShifter:
    def test_identity_code_example(self):
        dataset = labeled_shifter(4)
        pattern = [0, 1, 0, 1]
        expected = pattern + [0, 1, 0] + pattern
        keys = {format_bitstring(s) for s in dataset.states}
        assert format_bitstring(np.array(expected, dtype=np.uint8)) in keys

    def test_rotations_are_circular(self):
        dataset = labeled_shifter(4)
        by_key = {format_bitstring(s): s for s in dataset.states}
        # pattern 1000 with left-rotation code 001 gives 0001
        assert "10000010001" in by_key
        # pattern 1000 with right-rotation code 100 gives 0100
        assert "10001000100" in by_key

    def test_sizes(self):
        assert len(labeled_shifter(5)) == 96
        assert labeled_shifter(5).n_bits == 13


class TestParity:
    def test_two_bit_even(self):
        dataset = parity(2)
        keys = sorted(format_bitstring(s) for s in dataset.states)
        assert keys == ["00", "11"]

    def test_odd_variant(self):
        dataset = parity(3, even=False)
        assert all(s.sum() % 2 == 1 for s in dataset.states)
        assert len(dataset) == 4

    def test_counts_are_half_space(self):
        assert len(parity(8)) == 128
        assert len(parity(10)) == 512


class TestGaussianProfile:
    def test_endpoint_ratio(self):
        probs = gaussian_profile(100, 0.5, 0.005)
        assert probs[0] / probs[-1] == pytest.approx(100.0, rel=1e-12)

    def test_two_point_normalization(self):
        probs = gaussian_profile(2, 2.0, 1.0)
        assert probs[0] == pytest.approx(2 / 3, abs=1e-15)
        assert probs[1] == pytest.approx(1 / 3, abs=1e-15)

    def test_large_count_normalizes(self):
        probs = gaussian_profile(4096, 1.0, 0.01)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_monotone_decreasing(self):
        probs = gaussian_profile(64, 1.0, 0.001)
        assert (np.diff(probs) < 0).all()

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            gaussian_profile(1, 1.0, 0.5)
        with pytest.raises(ValueError):
            gaussian_profile(10, 0.5, 0.5)


class TestInt12:
    def test_shape_and_order(self):
        dataset = int12()
        assert len(dataset) == 4096 and dataset.n_bits == 12
        assert np.array_equal(indices_of(dataset.states), np.arange(4096))

    def test_monotone_and_ratio(self):
        dataset = int12(p_ratio=50.0)
        probs = dataset.target_probs
        assert (np.diff(probs) < 0).all()
        assert probs[0] / probs[-1] == pytest.approx(50.0, rel=1e-9)

    def test_ratio_must_exceed_one(self):
        with pytest.raises(ValueError):
            int12(p_ratio=1.0)


class TestMult3:
    def test_group_sizes(self):
        order = indices_of(mult3("discrete").states)
        groups = [order[:1366], order[1366:2731], order[2731:]]
        assert [len(g) for g in groups] == [1366, 1365, 1365]
        for residue, group in enumerate(groups):
            assert (group % 3 == residue).all()
            assert (np.diff(group) > 0).all()

    def test_discrete_group_masses(self):
        probs = mult3("discrete").target_probs
        assert probs[:1366].sum() == pytest.approx(0.6, abs=1e-12)
        assert probs[1366:2731].sum() == pytest.approx(0.3, abs=1e-12)
        assert probs[2731:].sum() == pytest.approx(0.1, abs=1e-12)
        assert np.allclose(probs[:1366], 0.6 / 1366)

    def test_gauss_profile_peaks_at_zero(self):
        dataset = mult3("gauss")
        assert bits_to_index(dataset.states[0]) == 0
        assert dataset.target_probs[0] == dataset.target_probs.max()

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            mult3("triangular")


class TestSplit:
    def test_80_20_sizes(self):
        dataset = int12()
        train, test = split_dataset(dataset, 0.8, seed=3)
        assert len(train) == 3277
        assert len(test) == 819

    def test_union_and_disjointness(self):
        dataset = parity(6)
        train, test = split_dataset(dataset, 0.6, seed=11)
        train_idx = set(indices_of(train.states).tolist())
        test_idx = set(indices_of(test.states).tolist())
        assert not train_idx & test_idx
        assert train_idx | test_idx == set(indices_of(dataset.states).tolist())

    def test_determinism(self):
        dataset = parity(6)
        a = split_dataset(dataset, 0.4, seed=5)
        b = split_dataset(dataset, 0.4, seed=5)
        assert np.array_equal(a[0].states, b[0].states)
        assert np.array_equal(a[1].states, b[1].states)

    def test_train_renormalized_test_raw(self):
        dataset = int12()
        train, test = split_dataset(dataset, 0.8, seed=0)
        assert train.target_probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert test.target_probs.sum() < 1.0
        assert not test.normalized

    def test_bad_fraction(self):
        dataset = parity(4)
        for bad in (0.0, 1.0, 1.2):
            with pytest.raises(ValueError):
                split_dataset(dataset, bad, seed=0)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        dataset = make_dataset("BS09")
        path = tmp_path / "bs09.ds"
        save_dataset(dataset, path)
        loaded = load_dataset(path)
        assert loaded.name == "BS09"
        assert np.array_equal(loaded.states, dataset.states)
        assert np.array_equal(loaded.target_probs, dataset.target_probs)

    def test_round_trip_nonuniform(self, tmp_path):
        dataset = mult3("gauss")
        path = tmp_path / "m3g.ds"
        save_dataset(dataset, path)
        loaded = load_dataset(path)
        assert np.array_equal(loaded.target_probs, dataset.target_probs)

    def _write(self, tmp_path, text):
        path = tmp_path / "bad.ds"
        path.write_text(text)
        return path

    def test_malformed_header(self, tmp_path):
        with pytest.raises(DatasetFormatError, match="line 1"):
            load_dataset(self._write(tmp_path, "only-two fields\n"))

    def test_wrong_count(self, tmp_path):
        text = "t 2 3\n00 0.5\n11 0.5\n"
        with pytest.raises(DatasetFormatError, match="declares 3"):
            load_dataset(self._write(tmp_path, text))

    def test_bad_bits(self, tmp_path):
        text = "t 2 2\n0x 0.5\n11 0.5\n"
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_dataset(self._write(tmp_path, text))

    def test_bad_probability(self, tmp_path):
        text = "t 2 2\n00 0.5\n11 -0.5\n"
        with pytest.raises(DatasetFormatError, match="line 3"):
            load_dataset(self._write(tmp_path, text))

    def test_duplicate_state(self, tmp_path):
        text = "t 2 2\n01 0.5\n01 0.5\n"
        with pytest.raises(DatasetFormatError, match="distinct"):
            load_dataset(self._write(tmp_path, text))

    def test_unnormalized_sum(self, tmp_path):
        text = "t 2 2\n00 0.9\n11 0.9\n"
        with pytest.raises(DatasetFormatError):
            load_dataset(self._write(tmp_path, text))


def test_generators_are_pure():
    a = make_dataset("LSE11")
    b = make_dataset("LSE11")
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.target_probs, b.target_probs)


def test_validate_rejects_gaps():
    with pytest.raises(ValueError):
        Dataset("d", 2, np.array([[0, 1]], dtype=np.uint8),
                np.array([0.5])).validate()
    with pytest.raises(ValueError):
        Dataset("d", 2, np.array([[0, 1], [0, 1]], dtype=np.uint8),
                np.array([0.5, 0.5])).validate()
