import numpy as np
import pytest

from lcc.dataset import (BlobSpec, LatentDataset, generate_blobs, load_dataset,
                         save_dataset)
from lcc.errors import FormatError, ValidationError


def test_binary_round_trip_bit_exact(tmp_path, rng):
    Z = rng.standard_normal((17, 5)).astype(np.float32)
    y = rng.integers(0, 7, size=17)
    ds = LatentDataset(Z=Z, y=y)
    p = tmp_path / "d.lccd"
    save_dataset(ds, p, format="binary")
    back = load_dataset(p, format="binary")
    assert np.array_equal(back.Z.view(np.uint32), ds.Z.view(np.uint32))
    assert np.array_equal(back.y, ds.y)


def test_binary_byte_count_n1_d1(tmp_path):
    ds = LatentDataset(Z=np.array([[1.5]]), y=np.array([3]))
    p = tmp_path / "one.lccd"
    save_dataset(ds, p)
    assert p.stat().st_size == 32  # magic + version + N + d + one f32 + one u32


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "bad.lccd"
    p.write_bytes(b"XXXX" + bytes(28))
    with pytest.raises(FormatError, match="magic"):
        load_dataset(p)


def test_truncated_rejected(tmp_path, rng):
    ds = LatentDataset(Z=rng.standard_normal((4, 3)), y=np.zeros(4, dtype=int))
    p = tmp_path / "t.lccd"
    save_dataset(ds, p)
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(FormatError):
        load_dataset(p)


def test_csv_single_row(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("y,z0,z1\n3,0.5,-1.25\n")
    ds = load_dataset(p, format="csv")
    assert ds.n_samples == 1 and ds.dim == 2
    assert ds.y.tolist() == [3]
    assert np.allclose(ds.Z, [[0.5, -1.25]])


def test_csv_round_trip_f32_exact(tmp_path, rng):
    ds = LatentDataset(Z=rng.standard_normal((9, 4)), y=rng.integers(0, 3, 9))
    p = tmp_path / "d.csv"
    save_dataset(ds, p, format="csv")
    back = load_dataset(p, format="csv")
    assert np.array_equal(back.Z, ds.Z)
    assert np.array_equal(back.y, ds.y)


def test_empty_dataset_rejected():
    with pytest.raises(ValidationError):
        LatentDataset(Z=np.empty((0, 3)), y=np.empty(0, dtype=int))


def test_nonfinite_rejected():
    Z = np.ones((3, 2))
    Z[1, 0] = np.nan
    with pytest.raises(ValidationError, match="row 1"):
        LatentDataset(Z=Z, y=np.zeros(3, dtype=int))


def test_blobs_zero_sigma_points_equal_center():
    spec = BlobSpec(n_labels=2, clusters_per_label=1, samples_per_cluster=4,
                    dim=3, cluster_sigma=0.0, seed=9)
    ds = generate_blobs(spec)
    for c in range(2):
        block = ds.Z[ds.ground_truth_clusters == c]
        assert np.all(block == block[0])


def test_blobs_label_counts():
    spec = BlobSpec(n_labels=2, clusters_per_label=1, samples_per_cluster=3, dim=2, seed=0)
    ds = generate_blobs(spec)
    assert ds.n_samples == 6
    assert sorted(ds.y.tolist()).count(0) == 3
    assert sorted(ds.y.tolist()).count(1) == 3


def test_blobs_determinism(tmp_path):
    spec = BlobSpec(n_labels=3, clusters_per_label=2, samples_per_cluster=5,
                    dim=4, cluster_sigma=0.5, mislabel_fraction=0.2, seed=42)
    a = generate_blobs(spec)
    b = generate_blobs(spec)
    assert np.array_equal(a.Z, b.Z) and np.array_equal(a.y, b.y)
    c = generate_blobs(BlobSpec(n_labels=3, clusters_per_label=2, samples_per_cluster=5,
                                dim=4, cluster_sigma=0.5, mislabel_fraction=0.2, seed=43))
    assert not np.array_equal(a.Z, c.Z)
    pa, pb = tmp_path / "a.lccd", tmp_path / "b.lccd"
    save_dataset(a, pa)
    save_dataset(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_blobs_mislabel_fraction():
    spec = BlobSpec(n_labels=4, clusters_per_label=1, samples_per_cluster=50,
                    dim=2, cluster_sigma=0.1, mislabel_fraction=0.1, seed=5)
    ds = generate_blobs(spec)
    intended = ds.ground_truth_clusters  # one cluster per label here
    n_flipped = int(np.sum(ds.y != intended))
    assert n_flipped == int(0.1 * spec.n_samples)
