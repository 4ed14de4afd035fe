import json

import numpy as np
import pytest
from scipy import special

from app.core.bench import central_difference
from app.core.exact_kernels import kernel_eval
from app.core.feature_map import (
    BaseSample,
    Embedding,
    embed,
    embed_derivative,
    materialize_frequencies,
    quantile,
    sample_base,
    spec_hash,
)
from app.models.kernel_spec import KernelFamily, KernelSpec
from app.utils.exceptions import ArtifactError, DimensionError, DomainError, KernelIndexError


def gaussian(sigma, m=None):
    sigma = (sigma,) * m if m else tuple(sigma)
    return KernelSpec(family=KernelFamily.GAUSSIAN, sigma=sigma)


class TestSampleBase:
    def test_same_seed_is_bit_identical(self):
        a, b = sample_base(3, 50, seed=11), sample_base(3, 50, seed=11)
        assert np.array_equal(a.omega, b.omega)
        assert np.array_equal(a.phase, b.phase)
        assert a.fingerprint == b.fingerprint

    def test_shapes_and_ranges(self):
        base = sample_base(3, 100, seed=7)
        assert base.omega.shape == (100, 3)
        assert base.phase.shape == (100,)
        assert np.all((base.omega > 0.0) & (base.omega < 1.0))
        assert np.all((base.phase >= 0.0) & (base.phase < 1.0))

    def test_omega_mean_is_one_half(self):
        base = sample_base(2, 10_000, seed=1)
        assert abs(base.omega.mean() - 0.5) < 0.02

    @pytest.mark.parametrize("m,d", [(0, 10), (2, 0), (-1, 5)])
    def test_invalid_dimensions(self, m, d):
        with pytest.raises(DimensionError):
            sample_base(m, d, seed=0)

    def test_draws_are_read_only(self):
        base = sample_base(2, 5, seed=0)
        with pytest.raises(ValueError):
            base.omega[0, 0] = 0.5

    def test_save_load_reproduces_embedding(self, tmp_path, rng):
        base = sample_base(2, 64, seed=3)
        loaded = BaseSample.load(base.save(tmp_path / "base.json"))
        X = rng.uniform(size=(10, 2))
        spec = gaussian(1.3, m=2)
        assert np.array_equal(embed(X, spec, base).values, embed(X, spec, loaded).values)

    def test_large_sample_uses_binary_payload(self, tmp_path, monkeypatch):
        monkeypatch.setattr("app.core.feature_map.sampler.BASE_SAMPLE_JSON_LIMIT", 10)
        base = sample_base(2, 20, seed=4)
        path = base.save(tmp_path / "base.json")
        assert path.with_suffix(".npz").is_file()
        assert np.array_equal(BaseSample.load(path).omega, base.omega)

    def test_tampered_artifact_is_rejected(self, tmp_path):
        path = sample_base(1, 4, seed=0).save(tmp_path / "base.json")
        path.write_text(path.read_text().replace('"seed": 0', '"seed": 1'))
        with pytest.raises(ArtifactError):
            BaseSample.load(path)

    def test_unit_frequencies_are_shared_and_read_only(self):
        base = sample_base(2, 8, seed=0)
        for family in KernelFamily:
            first = base.unit_frequencies(family)
            assert base.unit_frequencies(family.value) is first
            with pytest.raises(ValueError):
                first[0, 0] = 1.0
        with pytest.raises(TypeError):
            base._unit_frequencies[KernelFamily.GAUSSIAN] = np.zeros((8, 2))

    def test_endpoint_draws_in_artifact_are_rejected(self, tmp_path):
        path = tmp_path / "base.json"
        path.write_text(json.dumps({"kind": "base_sample", "m": 1, "d": 1, "seed": 0,
                                    "omega": [0.0], "phase": [0.5]}))
        with pytest.raises(ArtifactError):
            BaseSample.load(path)


class TestQuantile:
    def test_known_values(self):
        assert quantile(KernelFamily.GAUSSIAN, 0.5) == 0.0
        assert quantile(KernelFamily.SKEWED_CHI2, 0.5) == pytest.approx(0.0, abs=1e-15)
        assert quantile(KernelFamily.SKEWED_INTERSECTION, 0.75) == pytest.approx(1.0, rel=1e-12)

    def test_gaussian_matches_inverse_erf(self):
        u = (1.0 + special.erf(1.0)) / 2.0
        assert quantile("gaussian", u) == pytest.approx(np.sqrt(2.0), rel=1e-10)
        grid = np.linspace(0.01, 0.99, 50)
        assert np.allclose(quantile("gaussian", grid), np.sqrt(2.0) * special.erfinv(2.0 * grid - 1.0), atol=1e-12)

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_monotone_and_antisymmetric(self, family):
        u = np.linspace(1e-3, 1.0 - 1e-3, 1000)
        h = quantile(family, u)
        assert np.all(np.diff(h) > 0)
        assert np.allclose(quantile(family, 1.0 - u), -h, atol=1e-12, rtol=1e-10)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
    def test_endpoints_raise(self, u):
        with pytest.raises(DomainError):
            quantile(KernelFamily.GAUSSIAN, u)


class TestFrequencies:
    def test_unit_sigma_is_quantile(self):
        base = sample_base(2, 30, seed=0)
        gamma = materialize_frequencies(gaussian(1.0, m=2), base).gamma
        assert np.array_equal(gamma, quantile("gaussian", base.omega))

    def test_positively_homogeneous(self):
        base = sample_base(3, 30, seed=0)
        spec = KernelSpec(family=KernelFamily.SKEWED_CHI2, sigma=(0.5, 1.0, 2.0))
        doubled = spec.with_sigma(2.0 * spec.sigma_array)
        assert np.array_equal(materialize_frequencies(doubled, base).gamma,
                              2.0 * materialize_frequencies(spec, base).gamma)

    def test_scaled_oracle(self):
        u = (1.0 + special.erf(1.0)) / 2.0
        base = BaseSample(omega=np.array([[u]]), phase=np.array([0.0]), seed=0)
        gamma = materialize_frequencies(gaussian(2.0, m=1), base).gamma
        assert gamma[0, 0] == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            materialize_frequencies(gaussian(1.0, m=3), sample_base(2, 10, seed=0))


class TestEmbed:
    def test_zero_frequency_gives_sqrt_two(self):
        base = BaseSample(omega=np.array([[0.5]]), phase=np.array([0.0]), seed=0)
        values = embed(np.array([[0.3], [7.0]]), gaussian(1.0, m=1), base).values
        assert np.allclose(values, np.sqrt(2.0))

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_entries_bounded(self, family, rng):
        d = 200
        base = sample_base(3, d, seed=2)
        spec = KernelSpec(family=family, sigma=(0.7, 1.5, 3.0))
        values = embed(rng.uniform(size=(25, 3)), spec, base).values
        assert values.shape == (25, d)
        assert np.all(np.abs(values) <= np.sqrt(2.0 / d) + 1e-15)

    def test_gaussian_kernel_approximation(self, rng):
        m = 4
        base = sample_base(m, 4000, seed=5)
        spec = gaussian(1.0, m=m)
        X, Y = rng.uniform(size=(50, m)), rng.uniform(size=(50, m))
        approx = np.sum(embed(X, spec, base).values * embed(Y, spec, base).values, axis=1)
        exact = np.array([kernel_eval("gaussian", spec.sigma_array, 0.0, x, y) for x, y in zip(X, Y)])
        assert np.max(np.abs(approx - exact)) <= 0.08

    def test_parallel_matches_serial(self, rng, monkeypatch):
        monkeypatch.setattr("app.core.feature_map.embedding.EMBED_CHUNK_ROWS", 7)
        base = sample_base(3, 50, seed=0)
        spec = gaussian(1.2, m=3)
        X = rng.uniform(size=(60, 3))
        assert np.array_equal(embed(X, spec, base, n_jobs=1).values, embed(X, spec, base, n_jobs=4).values)

    def test_skewed_family_rejects_non_positive_shift(self):
        spec = KernelSpec(family=KernelFamily.SKEWED_INTERSECTION, sigma=(1.0,), c=0.1)
        with pytest.raises(DomainError):
            embed(np.array([[-0.2]]), spec, sample_base(1, 10, seed=0))

    def test_column_mismatch(self, rng):
        with pytest.raises(DimensionError):
            embed(rng.uniform(size=(4, 3)), gaussian(1.0, m=2), sample_base(2, 10, seed=0))

    def test_spec_hash_tracks_sigma_and_base(self):
        base = sample_base(2, 10, seed=0)
        spec = gaussian(1.0, m=2)
        assert spec_hash(spec, base) == spec_hash(spec, sample_base(2, 10, seed=0))
        assert spec_hash(spec, base) != spec_hash(spec.with_sigma([1.0, 2.0]), base)
        assert spec_hash(spec, base) != spec_hash(spec, sample_base(2, 10, seed=1))


class TestEmbedDerivative:
    def test_zero_inputs_give_zero_derivative(self):
        base = sample_base(3, 20, seed=0)
        assert np.all(embed_derivative(np.zeros((5, 3)), gaussian(1.0, m=3), base, 1) == 0.0)

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_matches_central_difference(self, family):
        rng = np.random.default_rng(3)
        base = sample_base(2, 30, seed=1)
        U = rng.uniform(size=(6, 2))
        for _ in range(3):
            sigma = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=2))
            spec = KernelSpec(family=family, sigma=tuple(sigma))
            for i in range(2):
                analytic = embed_derivative(U, spec, base, i)

                def column(s_i, i=i):
                    s = sigma.copy()
                    s[i] = s_i[0]
                    return embed(U, spec.with_sigma(s), base).values

                h = 1e-5 * sigma[i]
                numeric = (column([sigma[i] + h]) - column([sigma[i] - h])) / (2.0 * h)
                scale = max(np.max(np.abs(numeric)), 1e-12)
                assert np.max(np.abs(analytic - numeric)) / scale < 1e-4

    def test_scalar_projection_matches_central_difference_helper(self):
        base = sample_base(2, 25, seed=2)
        U = np.array([[0.2, 0.9], [0.6, 0.1]])
        spec = gaussian((0.8, 1.7))
        weights = np.linspace(-1.0, 1.0, 25)

        def projected(sigma):
            return float(np.sum(embed(U, spec.with_sigma(sigma), base).values @ weights))

        numeric = central_difference(projected, spec.sigma_array)
        analytic = [float(np.sum(embed_derivative(U, spec, base, i) @ weights)) for i in range(2)]
        assert np.allclose(analytic, numeric, rtol=1e-4, atol=1e-9)

    def test_derivative_reuses_projection(self, rng):
        base = sample_base(2, 15, seed=0)
        spec = gaussian((1.0, 2.0))
        X = rng.uniform(size=(8, 2))
        cached = Embedding(X, spec, base)
        assert np.array_equal(cached.derivative(0), embed_derivative(X, spec, base, 0))
        assert np.array_equal(cached.features().values, embed(X, spec, base).values)

    @pytest.mark.parametrize("i", [-1, 2, 5])
    def test_index_out_of_range(self, i):
        with pytest.raises(KernelIndexError):
            embed_derivative(np.ones((2, 2)), gaussian(1.0, m=2), sample_base(2, 5, seed=0), i)
