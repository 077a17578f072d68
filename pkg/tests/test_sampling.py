"""Tests for the sampling module."""

import hashlib
import logging

import numpy as np
import pytest

from gan import LossTrace, MLPSpec, ModelCheckpoint, NetworkState, Objective, TrainConfig, sample
from sampling import (
    CovarianceError,
    DatasetFormatError,
    EmpiricalSource,
    GaussianSource,
    GenerativeSource,
    IncompatibleStrategyError,
    PoolTooSmallError,
    SidecarError,
    Strategy,
    TaggedDataset,
    UnknownTagError,
    decode_f32d,
    derive_seed,
    draw,
    encode_f32d,
    format_sidecar,
    gaussian_sampler,
    parse_sidecar,
    read_f32d,
    read_tagged_dataset,
    split_by_tag,
    write_f32d,
    write_tagged_dataset,
)


def _rows_as_set(matrix):
    return sorted(map(tuple, matrix))


class TestDraw:

    def test_bootstrap_full_pool_is_permutation(self, rng):
        pool = rng.normal(size=(30, 3))
        replicate = draw(EmpiricalSource(pool), Strategy.BOOTSTRAP, 30, seed=1)
        assert _rows_as_set(replicate) == _rows_as_set(pool)

    def test_bootstrap_rows_come_from_pool(self, rng):
        pool = rng.normal(size=(50, 2))
        members = set(map(tuple, pool))
        for seed in range(10):
            replicate = draw(EmpiricalSource(pool), Strategy.BOOTSTRAP, 20, seed=seed)
            assert all(tuple(row) in members for row in replicate)
            assert len(set(map(tuple, replicate))) == 20

    def test_bootstrap_pool_too_small(self, rng):
        source = EmpiricalSource(rng.normal(size=(5, 2)))
        with pytest.raises(PoolTooSmallError) as excinfo:
            draw(source, Strategy.BOOTSTRAP, 6, seed=0)
        assert excinfo.value.pool_size == 5
        assert draw(source, Strategy.BOOTSTRAP, 6, seed=0, with_replacement=True).shape == (6, 2)

    def test_resample_mean(self, gaussian_pair):
        _, shifted = gaussian_pair
        replicate = draw(shifted, Strategy.RESAMPLE, 100_000, seed=3)
        assert np.all(np.abs(replicate.mean(axis=0) - 0.3) < 0.02)

    def test_incompatible_pairing(self, gaussian_pair, rng):
        with pytest.raises(IncompatibleStrategyError):
            draw(gaussian_pair[0], Strategy.BOOTSTRAP, 5, seed=0)
        with pytest.raises(IncompatibleStrategyError):
            draw(EmpiricalSource(rng.normal(size=(5, 2))), Strategy.RESAMPLE, 5, seed=0)

    def test_deterministic(self, gaussian_pair):
        first = draw(gaussian_pair[0], Strategy.RESAMPLE, 10, seed=12)
        np.testing.assert_array_equal(first, draw(gaussian_pair[0], Strategy.RESAMPLE, 10, seed=12))

    def test_disjoint_seeds_differ(self, gaussian_pair):
        digests = set()
        for seed in range(10):
            replicate = draw(gaussian_pair[0], Strategy.RESAMPLE, 5, seed=seed)
            digests.add(hashlib.sha256(replicate.tobytes()).hexdigest())
        assert len(digests) == 10

    def test_synthetic_uses_generator(self):
        spec = MLPSpec((2, 2))
        generator = NetworkState(spec, {"W0": np.array([[1.0, 0.0], [0.5, 2.0]]), "b0": np.array([[1.0, -1.0]])})
        critic = NetworkState(MLPSpec((2, 1)), {"W0": np.zeros((2, 1)), "b0": np.zeros((1, 1))})
        checkpoint = ModelCheckpoint(generator, critic, TrainConfig(objective=Objective.WGAN_GP, noise_dim=2),
                                     LossTrace(), data_dim=2)
        replicate = draw(GenerativeSource(checkpoint), Strategy.SYNTHETIC, 7, seed=4)
        np.testing.assert_array_equal(replicate, sample(checkpoint, 7, seed=4))


class TestGaussianSampler:

    def test_zero_covariance(self):
        rows = gaussian_sampler([1.0, -2.0], [0.0, 0.0], 5, seed=0)
        np.testing.assert_array_equal(rows, np.tile([1.0, -2.0], (5, 1)))

    def test_identity_covariance(self):
        rows = gaussian_sampler(np.zeros(2), np.eye(2), 200_000, seed=1)
        assert np.linalg.norm(np.cov(rows, rowvar=False) - np.eye(2)) < 0.02

    def test_same_seed(self):
        np.testing.assert_array_equal(gaussian_sampler([0.0], [1.0], 4, seed=9),
                                      gaussian_sampler([0.0], [1.0], 4, seed=9))

    def test_singular_psd_covariance(self):
        covariance = np.array([[1.0, 1.0], [1.0, 1.0]])
        rows = gaussian_sampler(np.zeros(2), covariance, 1000, seed=2)
        np.testing.assert_allclose(rows[:, 0], rows[:, 1], atol=1e-12)

    def test_not_psd(self):
        with pytest.raises(CovarianceError):
            GaussianSource(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(CovarianceError):
            GaussianSource(np.zeros(2), np.array([1.0, -1.0]))


class TestSplit:

    def _dataset(self):
        rows = np.arange(6.0).reshape(3, 2)
        return TaggedDataset(rows, [{"a"}, {"a", "b"}, {"b"}], ["a", "b"])

    def test_definition(self):
        with_tag, without = split_by_tag(self._dataset(), "a")
        np.testing.assert_array_equal(with_tag, [[0.0, 1.0], [2.0, 3.0]])
        np.testing.assert_array_equal(without, [[4.0, 5.0]])

    def test_partition(self, rng):
        tags = [set(rng.choice(["a", "b", "c"], size=int(rng.integers(0, 3)), replace=False)) for _ in range(40)]
        dataset = TaggedDataset(rng.normal(size=(40, 3)), tags, ["a", "b", "c"])
        with_tag, without = split_by_tag(dataset, "b")
        assert len(with_tag) + len(without) == 40
        assert _rows_as_set(np.vstack([with_tag, without])) == _rows_as_set(dataset.rows)

    def test_empty_sides(self, caplog):
        dataset = TaggedDataset(np.ones((2, 1)), [{"a"}, {"a"}], ["a", "b"])
        with caplog.at_level(logging.WARNING):
            with_tag, without = split_by_tag(dataset, "a")
        assert without.shape == (0, 1)
        assert "D0 is empty" in caplog.text
        with_tag, without = split_by_tag(dataset, "b")
        assert with_tag.shape == (0, 1) and without.shape == (2, 1)

    def test_unknown_tag(self):
        with pytest.raises(UnknownTagError) as excinfo:
            split_by_tag(self._dataset(), "c")
        assert excinfo.value.vocabulary == ["a", "b"]

    def test_condition_matrix(self):
        np.testing.assert_array_equal(self._dataset().condition_matrix(), [[1, 0], [1, 1], [0, 1]])


class TestDeriveSeed:

    def test_stable(self):
        assert derive_seed(7, Strategy.BOOTSTRAP, 20, 3, 0) == derive_seed(7, "bootstrap", 20, 3, 0)
        assert 0 <= derive_seed(7, 1) < 2 ** 64

    def test_components_matter(self):
        seeds = {derive_seed(7, Strategy.RESAMPLE, n, k, g) for n in (20, 40) for k in range(5) for g in (0, 1)}
        assert len(seeds) == 20
        assert derive_seed(7, 1, 2) != derive_seed(8, 1, 2)


class TestF32D:

    def test_round_trip(self, tmp_path, rng):
        matrix = rng.normal(size=(4, 3)).astype(np.float32).astype(np.float64)
        write_f32d(tmp_path / "x.f32d", matrix)
        np.testing.assert_array_equal(read_f32d(tmp_path / "x.f32d"), matrix)

    def test_layout(self):
        data = encode_f32d(np.array([[1.0, 2.0]]))
        assert data[:4] == b"F32D"
        assert data[4:16] == bytes([1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0])
        assert data[16:20] == bytes([2, 0, 0, 0])
        assert data[20:] == np.array([1.0, 2.0], dtype="<f4").tobytes()

    def test_errors(self):
        good = encode_f32d(np.ones((2, 2)))
        with pytest.raises(DatasetFormatError):
            decode_f32d(b"F64D" + good[4:])
        with pytest.raises(DatasetFormatError):
            decode_f32d(good[:-1])
        with pytest.raises(DatasetFormatError):
            decode_f32d(good[:8])
        with pytest.raises(DatasetFormatError) as excinfo:
            decode_f32d(good[:4] + bytes([2, 0, 0, 0]) + good[8:])
        assert excinfo.value.code == 3

    def test_empty_matrix(self):
        assert decode_f32d(encode_f32d(np.zeros((0, 3)))).shape == (0, 3)


class TestSidecar:

    TEXT = "#vocabulary\tvisual,auditory\n# two volumes\nvol1.nii\tvisual\nvol2.nii\tvisual, auditory\n"

    def test_parse(self):
        sidecar = parse_sidecar(self.TEXT)
        assert sidecar.vocabulary == ["visual", "auditory"]
        assert sidecar.entries == [("vol1.nii", frozenset({"visual"})),
                                   ("vol2.nii", frozenset({"visual", "auditory"}))]

    def test_unknown_tags_are_added(self, caplog):
        with caplog.at_level(logging.WARNING):
            sidecar = parse_sidecar("#vocabulary\tvisual\na\tvisual,motor\nb\t\n")
        assert sidecar.vocabulary == ["visual", "motor"]
        assert sidecar.added == ["motor"]
        assert sidecar.entries[1] == ("b", frozenset())
        assert "motor" in caplog.text

    def test_duplicate_entry(self):
        with pytest.raises(SidecarError):
            parse_sidecar("a\tx\na\ty\n")

    def test_missing_tab(self):
        with pytest.raises(SidecarError):
            parse_sidecar("a visual\n")

    def test_keys_checked(self):
        sidecar = parse_sidecar(self.TEXT)
        with pytest.raises(SidecarError):
            sidecar.tags_for(["vol1.nii"])
        with pytest.raises(SidecarError):
            sidecar.tags_for(["vol1.nii", "vol2.nii", "vol3.nii"])

    def test_format_parses_back(self):
        text = format_sidecar(["0", "1"], [frozenset({"b", "a"}), frozenset()], ["a", "b"])
        assert text == "#vocabulary\ta,b\n0\ta,b\n1\t\n"
        assert parse_sidecar(text).tags_for(["0", "1"]) == [frozenset({"a", "b"}), frozenset()]

    def test_tagged_dataset_files(self, tmp_path):
        dataset = TaggedDataset(np.arange(6.0).reshape(3, 2), [{"a"}, set(), {"a", "b"}], ["a", "b"])
        write_tagged_dataset(dataset, tmp_path / "scores.f32d")
        assert (tmp_path / "scores.tags").exists()
        loaded = read_tagged_dataset(tmp_path / "scores.f32d")
        np.testing.assert_array_equal(loaded.rows, dataset.rows)
        assert loaded.tags == dataset.tags
        assert loaded.tag_counts() == {"a": 2, "b": 1}

    def test_dataset_without_sidecar(self, tmp_path):
        write_f32d(tmp_path / "plain.f32d", np.ones((2, 2)))
        loaded = read_tagged_dataset(tmp_path / "plain.f32d")
        assert loaded.vocabulary == [] and loaded.tags == [frozenset(), frozenset()]
