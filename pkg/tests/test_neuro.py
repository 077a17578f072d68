"""Tests for the neuro module."""

import logging

import nibabel as nib
import numpy as np
import pytest

from gan import LossTrace, MLPSpec, ModelCheckpoint, NetworkState, Objective, TrainConfig
from neuro import (
    NeuroError,
    NiftiDatatypeError,
    NiftiDimensionError,
    NiftiError,
    NiftiHeaderSizeError,
    NiftiMagicError,
    NiftiTruncatedError,
    SliceIndexError,
    Volume,
    VolumeShapeError,
    encode_pgm,
    flatten,
    ingest_directory,
    load_tags,
    normalize,
    read_nifti,
    read_nifti_file,
    render_slices,
    reshape,
    synthetic_volumes,
)
from pca import fit
from sampling import SidecarError, split_by_tag


def nifti_bytes(data, endianness="<", affine=None):
    """Serialize ``data`` with nibabel, the reference NIfTI-1 writer."""
    header = nib.Nifti1Header(endianness=endianness)
    header.set_data_dtype(data.dtype)
    image = nib.Nifti1Image(data, np.eye(4) if affine is None else affine, header=header)
    return image.to_bytes()


def patch(data: bytes, offset: int, values, dtype: str) -> bytes:
    raw = np.asarray(values, dtype=dtype).tobytes()
    return data[:offset] + raw + data[offset + len(raw):]


def volume_of(voxels) -> Volume:
    voxels = np.asarray(voxels, dtype=np.float32)
    return Volume(dims=voxels.shape, voxels=voxels)


@pytest.fixture
def fixture_data():
    return np.arange(24, dtype=np.float32).reshape((4, 3, 2)) * 0.5 - 3.0


class TestReadNifti:

    @pytest.mark.parametrize("endianness", ["<", ">"])
    @pytest.mark.parametrize("dtype", [np.float32, np.int16, np.uint8])
    def test_reference_written_fixture(self, endianness, dtype):
        values = np.arange(24).reshape((4, 3, 2))
        data = (values * 3 - 20).astype(dtype) if dtype != np.uint8 else (values * 10).astype(dtype)
        volume = read_nifti(nifti_bytes(data, endianness))
        assert volume.dims == (4, 3, 2)
        assert volume.voxels.dtype == np.float32
        np.testing.assert_array_equal(volume.voxels, data.astype(np.float32))
        assert volume.nan_count == 0

    def test_x_fastest_layout(self, fixture_data):
        volume = read_nifti(nifti_bytes(fixture_data))
        row = flatten([volume]).rows[0]
        np.testing.assert_array_equal(row, fixture_data.ravel(order="F"))
        assert row[1] == fixture_data[1, 0, 0]

    def test_affine_carried(self, fixture_data):
        affine = np.array([[2.0, 0, 0, -10], [0, 3.0, 0, 5], [0, 0, 4.0, 1], [0, 0, 0, 1]])
        volume = read_nifti(nifti_bytes(fixture_data, affine=affine))
        np.testing.assert_allclose(volume.affine, affine)

    def test_slope_and_intercept(self):
        data = nifti_bytes(np.full((2, 2, 2), 3, dtype=np.int16))
        data = patch(data, 112, [2.0, 1.0], "<f4")
        np.testing.assert_array_equal(read_nifti(data).voxels, np.full((2, 2, 2), 7.0))

    def test_trailing_singleton_dimension(self):
        data = np.ones((2, 3, 2, 1), dtype=np.float32)
        assert read_nifti(nifti_bytes(data)).dims == (2, 3, 2)

    def test_nan_replaced(self, caplog):
        data = np.ones((2, 2, 1), dtype=np.float32)
        data[1, 0, 0] = np.nan
        with caplog.at_level(logging.WARNING):
            volume = read_nifti(nifti_bytes(data), name="v.nii")
        assert volume.nan_count == 1
        assert volume.voxels[1, 0, 0] == 0.0
        assert "v.nii" in caplog.text

    def test_file(self, tmp_path, fixture_data):
        (tmp_path / "a.nii").write_bytes(nifti_bytes(fixture_data))
        volume = read_nifti_file(tmp_path / "a.nii")
        assert volume.name == "a.nii"
        with pytest.raises(NeuroError):
            read_nifti_file(tmp_path / "missing.nii")


class TestCorruptFiles:

    def test_wrong_magic(self, fixture_data):
        with pytest.raises(NiftiMagicError):
            read_nifti(patch(nifti_bytes(fixture_data), 344, list(b"XXXX"), "u1"))

    def test_pair_magic(self, fixture_data):
        with pytest.raises(NiftiMagicError) as excinfo:
            read_nifti(patch(nifti_bytes(fixture_data), 344, list(b"ni1\x00"), "u1"))
        assert "pairs" in excinfo.value.message

    def test_unsupported_datatype(self, fixture_data):
        with pytest.raises(NiftiDatatypeError) as excinfo:
            read_nifti(patch(nifti_bytes(fixture_data), 70, [64], "<i2"))
        assert excinfo.value.datatype == 64

    def test_too_many_dimensions(self, fixture_data):
        with pytest.raises(NiftiDimensionError):
            read_nifti(patch(nifti_bytes(fixture_data), 40, [5], "<i2"))

    def test_truncated_payload(self, fixture_data):
        data = nifti_bytes(fixture_data)
        with pytest.raises(NiftiTruncatedError) as excinfo:
            read_nifti(data[:-1])
        assert excinfo.value.expected == len(data)

    def test_bad_header_size(self, fixture_data):
        with pytest.raises(NiftiHeaderSizeError):
            read_nifti(patch(nifti_bytes(fixture_data), 0, [540], "<i4"))

    def test_vox_offset_inside_header(self, fixture_data):
        with pytest.raises(NiftiError):
            read_nifti(patch(nifti_bytes(fixture_data), 108, [100.0], "<f4"))

    def test_every_truncation_is_an_error(self, fixture_data):
        data = nifti_bytes(fixture_data, ">")
        for length in range(len(data)):
            with pytest.raises(NiftiError):
                read_nifti(data[:length])

    def test_random_corruption_never_crashes(self, rng, fixture_data):
        data = np.frombuffer(nifti_bytes(fixture_data), dtype=np.uint8)
        for _ in range(10_000):
            corrupted = data.copy()
            positions = rng.integers(0, len(data), size=int(rng.integers(1, 4)))
            corrupted[positions] = rng.integers(0, 256, size=len(positions))
            cut = int(rng.integers(len(data) // 2, len(data) + 1))
            try:
                volume = read_nifti(corrupted[:cut].tobytes())
            except NeuroError:
                continue
            assert np.all(np.isfinite(volume.voxels))


class TestNormalize:

    def test_min_max(self):
        np.testing.assert_array_equal(normalize(volume_of([[[2.0]], [[4.0]], [[6.0]]])).voxels.ravel(),
                                      [0.0, 0.5, 1.0])

    def test_constant_volume(self):
        np.testing.assert_array_equal(normalize(volume_of(np.full((2, 2, 2), 5.0))).voxels, 0.0)

    def test_idempotent(self, rng):
        once = normalize(volume_of(rng.normal(size=(3, 4, 5))))
        assert once.voxels.min() == 0.0 and once.voxels.max() == 1.0
        np.testing.assert_array_equal(normalize(once).voxels, once.voxels)


class TestFlatten:

    def test_layout(self):
        matrix = flatten([volume_of([[[1.5]], [[2.5]]])])
        np.testing.assert_array_equal(matrix.rows, [[1.5, 2.5]])
        assert matrix.dims == (2, 1, 1)

    def test_empty(self):
        matrix = flatten([])
        assert matrix.empty
        assert matrix.rows.shape == (0, 0)

    def test_reshape_inverts(self, rng):
        volumes = [volume_of(rng.normal(size=(3, 4, 2))) for _ in range(3)]
        matrix = flatten(volumes)
        for row, volume in zip(matrix.rows, volumes):
            np.testing.assert_array_equal(reshape(row, matrix.dims), volume.voxels)

    def test_dims_mismatch(self):
        with pytest.raises(VolumeShapeError) as excinfo:
            flatten([volume_of(np.ones((2, 2, 2))), volume_of(np.ones((2, 2, 3)))])
        assert excinfo.value.index == 1

    def test_reshape_length(self):
        with pytest.raises(VolumeShapeError):
            reshape(np.ones(7), (2, 2, 2))


class TestLoadTags:

    def test_counts(self):
        tags, vocabulary = load_tags("a.nii\tvisual\nb.nii\tvisual,auditory\n", ["a.nii", "b.nii"])
        assert vocabulary == ["visual", "auditory"]
        assert tags == [frozenset({"visual"}), frozenset({"visual", "auditory"})]

    def test_duplicate_entry(self):
        with pytest.raises(SidecarError):
            load_tags("a.nii\tvisual\na.nii\tauditory\n", ["a.nii"])

    def test_missing_volume(self):
        with pytest.raises(SidecarError):
            load_tags("a.nii\tvisual\n", ["a.nii", "b.nii"])

    def test_untagged_volume_in_d0(self, tmp_path, fixture_data):
        for name in ("a.nii", "b.nii", "c.nii"):
            (tmp_path / name).write_bytes(nifti_bytes(fixture_data))
        (tmp_path / "tags.tsv").write_text("#vocabulary\tvisual,auditory\na.nii\tvisual\nb.nii\tauditory\nc.nii\t\n")
        ingested = ingest_directory(tmp_path, threads=2)
        for tag in ("visual", "auditory"):
            _, without = split_by_tag(ingested.dataset, tag)
            assert len(without) == 2
        assert ingested.dataset.keys == ["a.nii", "b.nii", "c.nii"]
        assert ingested.dims == (4, 3, 2)
        assert ingested.dataset.rows.max() == 1.0


class TestIngest:

    def test_missing_sidecar(self, tmp_path, fixture_data):
        (tmp_path / "a.nii").write_bytes(nifti_bytes(fixture_data))
        with pytest.raises(NeuroError):
            ingest_directory(tmp_path)

    def test_empty_directory(self, tmp_path):
        with pytest.raises(NeuroError):
            ingest_directory(tmp_path)

    def test_thread_count_does_not_matter(self, tmp_path, rng):
        names = [f"v{i}.nii" for i in range(5)]
        for name in names:
            (tmp_path / name).write_bytes(nifti_bytes(rng.normal(size=(3, 3, 3)).astype(np.float32)))
        (tmp_path / "tags.tsv").write_text("".join(f"{name}\tx\n" for name in names))
        serial = ingest_directory(tmp_path, threads=1).dataset.rows
        np.testing.assert_array_equal(serial, ingest_directory(tmp_path, threads=4).dataset.rows)


class TestRenderSlices:

    def test_gradient(self, tmp_path):
        voxels = np.array([[0.0, 3.0], [1.0, 4.0], [2.0, 5.0]])[:, :, None]
        (path,) = render_slices(volume_of(voxels), 2, [0], tmp_path, stem="ramp")
        assert path.name == "ramp_axis2_000.pgm"
        assert path.read_bytes() == b"P5\n3 2\n255\n" + bytes([0, 51, 102, 153, 204, 255])

    def test_constant_volume_is_gray(self, tmp_path):
        (path,) = render_slices(volume_of(np.full((2, 2, 2), 9.0)), 2, [1], tmp_path)
        assert path.read_bytes().endswith(bytes([128] * 4))

    def test_single_bright_voxel(self, tmp_path):
        voxels = np.zeros((4, 3, 2))
        voxels[2, 1, 1] = 1.0
        paths = render_slices(volume_of(voxels), 2, [0, 1], tmp_path)
        header = len(b"P5\n4 3\n255\n")
        assert set(paths[0].read_bytes()[header:]) == {0}
        pixels = np.frombuffer(paths[1].read_bytes()[header:], dtype=np.uint8).reshape(3, 4)
        assert list(zip(*np.nonzero(pixels))) == [(1, 2)]
        assert pixels[1, 2] == 255

    def test_out_of_range(self, tmp_path):
        with pytest.raises(SliceIndexError):
            render_slices(volume_of(np.ones((2, 2, 2))), 2, [2], tmp_path)
        with pytest.raises(SliceIndexError):
            render_slices(volume_of(np.ones((2, 2, 2))), 3, [0], tmp_path)
        assert not list(tmp_path.iterdir())

    def test_encode_pgm(self):
        assert encode_pgm(np.array([[1, 2]], dtype=np.uint8)) == b"P5\n2 1\n255\n\x01\x02"


class TestSyntheticVolumes:

    def test_scores_map_back_to_voxels(self, rng):
        rows = rng.normal(size=(6, 8))
        model = fit(rows, k=2)
        generator = NetworkState(MLPSpec((2, 2)), {"W0": np.zeros((2, 2)), "b0": np.zeros((1, 2))})
        critic = NetworkState(MLPSpec((2, 1)), {"W0": np.zeros((2, 1)), "b0": np.zeros((1, 1))})
        checkpoint = ModelCheckpoint(generator, critic, TrainConfig(objective=Objective.WGAN_GP, noise_dim=2),
                                     LossTrace(), data_dim=2)
        volumes = synthetic_volumes(checkpoint, model, (2, 2, 2), 3, seed=1)
        assert len(volumes) == 3
        np.testing.assert_allclose(volumes[0].voxels, reshape(model.mean, (2, 2, 2)), atol=1e-6)
        with pytest.raises(VolumeShapeError):
            synthetic_volumes(checkpoint, model, (2, 2, 3), 1)
