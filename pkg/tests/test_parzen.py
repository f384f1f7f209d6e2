import math

import numpy as np
import pytest

from wcdrbm import (RbmParams, compute_exact_distribution, load_sample_set,
                    parzen_ull, sample_model, save_sample_set, ull_curve)
from wcdrbm.errors import DatasetFormatError
from wcdrbm.parzen import SampleSet

from conftest import random_params


class TestParzenUll:
    def test_single_point_identity(self):
        for d, sigma in ((3, 0.2), (7, 0.5), (16, 1.3)):
            y = np.zeros((1, d))
            got = parzen_ull(y, y.copy(), sigma)
            expected = -(d / 2) * math.log(2 * math.pi * sigma * sigma)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_duplication_invariance(self, rng):
        test = rng.integers(0, 2, (4, 6)).astype(float)
        samples = rng.integers(0, 2, (9, 6)).astype(float)
        doubled = np.concatenate([samples, samples])
        assert parzen_ull(test, samples, 0.3) == pytest.approx(
            parzen_ull(test, doubled, 0.3), abs=1e-12)

    def test_permutation_invariance(self, rng):
        test = rng.integers(0, 2, (5, 6)).astype(float)
        samples = rng.integers(0, 2, (11, 6)).astype(float)
        shuffled = samples[rng.permutation(11)]
        assert parzen_ull(test, samples, 0.25) == pytest.approx(
            parzen_ull(test, shuffled, 0.25), abs=1e-12)
        assert parzen_ull(test[rng.permutation(5)], samples, 0.25) == \
            pytest.approx(parzen_ull(test, samples, 0.25), abs=1e-12)

    def test_kernel_symmetry_single_points(self, rng):
        a = rng.integers(0, 2, (1, 8)).astype(float)
        b = rng.integers(0, 2, (1, 8)).astype(float)
        assert parzen_ull(a, b, 0.4) == pytest.approx(
            parzen_ull(b, a, 0.4), abs=1e-14)

    def test_extended_precision_oracle(self, rng):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 60
        d = 5
        test = rng.integers(0, 2, (5, d)).astype(float)
        samples = rng.integers(0, 2, (10, d)).astype(float)
        sigma = 0.3
        norm = mp.mpf(2) * mp.pi * mp.mpf(sigma) ** 2
        scores = []
        for y in test:
            total = mp.mpf(0)
            for x in samples:
                d2 = mp.fsum([(mp.mpf(yi) - mp.mpf(xi)) ** 2
                              for yi, xi in zip(y, x)])
                total += mp.exp(-d2 / (2 * mp.mpf(sigma) ** 2))
            g = total / len(samples) / norm ** (mp.mpf(d) / 2)
            scores.append(mp.log(g))
        expected = float(mp.fsum(scores) / len(scores))
        assert parzen_ull(test, samples, sigma) == pytest.approx(expected, abs=1e-10)

    def test_log_domain_safety(self):
        # far-apart points with a narrow kernel stay finite in log space
        test = np.zeros((1, 20))
        samples = np.ones((3, 20))
        value = parzen_ull(test, samples, 0.05)
        assert np.isfinite(value)
        assert value < -1000

    def test_input_validation(self, rng):
        good = rng.integers(0, 2, (3, 4)).astype(float)
        with pytest.raises(ValueError):
            parzen_ull(np.empty((0, 4)), good, 0.2)
        with pytest.raises(ValueError):
            parzen_ull(good, rng.integers(0, 2, (3, 5)).astype(float), 0.2)
        with pytest.raises(ValueError):
            parzen_ull(good, good, 0.0)


class TestUllCurve:
    def test_endpoint_matches_full_ull(self, rng):
        test = rng.integers(0, 2, (4, 6)).astype(float)
        samples = SampleSet(rng.integers(0, 2, (20, 6)).astype(float))
        curve = ull_curve(test, samples, 0.3, [5, 10, 20])
        assert curve[-1] == (20, parzen_ull(test, samples, 0.3))
        assert len(curve) == 3

    def test_eval_point_bounds(self, rng):
        samples = SampleSet(rng.integers(0, 2, (8, 4)).astype(float))
        test = rng.integers(0, 2, (2, 4)).astype(float)
        with pytest.raises(ValueError):
            ull_curve(test, samples, 0.3, [4, 9])
        with pytest.raises(ValueError):
            ull_curve(test, samples, 0.3, [5, 3])


class TestSampleModel:
    def test_zero_param_bit_means(self):
        params = RbmParams.zeros(6, 4)
        sample_set = sample_model(params, 10_000, burn_in=5, thinning=1,
                                  n_chains=64, seed=3)
        means = sample_set.samples.mean(axis=0)
        bound = 3 * 0.5 / math.sqrt(10_000)
        assert (np.abs(means - 0.5) < bound + 1e-12).all()

    def test_determinism_and_meta(self, rng):
        params = random_params(rng, 5, 3)
        a = sample_model(params, 500, burn_in=10, thinning=2, n_chains=7, seed=9)
        b = sample_model(params, 500, burn_in=10, thinning=2, n_chains=7, seed=9)
        assert np.array_equal(a.samples, b.samples)
        assert a.meta["n_chains"] == 7 and a.meta["thinning"] == 2

    def test_histogram_matches_exact_distribution(self, rng):
        from scipy.stats import chisquare
        params = random_params(rng, 3, 2, scale=0.5)
        expected = np.exp(compute_exact_distribution(params).log_probs)
        sample_set = sample_model(params, 30_000, burn_in=200, thinning=3,
                                  n_chains=50, seed=11)
        weights = 1 << np.arange(2, -1, -1)
        counts = np.bincount(
            sample_set.samples.astype(np.int64) @ weights, minlength=8)
        result = chisquare(counts, expected * counts.sum())
        assert result.pvalue > 0.01

    def test_bad_counts(self, rng):
        params = random_params(rng, 3, 2)
        with pytest.raises(ValueError):
            sample_model(params, 0)
        with pytest.raises(ValueError):
            sample_model(params, 10, thinning=0)


class TestSampleSetIo:
    def test_round_trip(self, tmp_path, rng):
        params = random_params(rng, 6, 3)
        sample_set = sample_model(params, 50, burn_in=5, thinning=1,
                                  n_chains=10, seed=1)
        sample_set.meta["model"] = "ckpt.json"
        path = tmp_path / "samples.txt"
        save_sample_set(sample_set, path)
        loaded = load_sample_set(path)
        assert np.array_equal(loaded.samples, sample_set.samples)
        assert loaded.meta["model"] == "ckpt.json"
        assert loaded.meta["thinning"] == "1"

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("4 2\n0101\n01\n")
        with pytest.raises(DatasetFormatError, match="line 3"):
            load_sample_set(path)
        path.write_text("4 3\n0101\n0110\n")
        with pytest.raises(DatasetFormatError, match="declares 3"):
            load_sample_set(path)
