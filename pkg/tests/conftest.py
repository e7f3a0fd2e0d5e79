"""Shared fixtures: a tiny IDX dataset directory built from blobs."""

import struct

import numpy as np
import pytest

from phasornet.data import IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC, synthetic_blobs


def write_idx_pair(directory, prefix, images01, labels, side):
    """Write one split as IDX files; images01 is (n, side*side) in [0, 1]."""
    raw = np.clip(np.round(images01 * 255), 0, 255).astype(np.uint8)
    n = len(raw)
    img_blob = struct.pack(">IIII", IDX_IMAGE_MAGIC, n, side, side) + raw.tobytes()
    lbl_blob = struct.pack(">II", IDX_LABEL_MAGIC, n) + bytes(int(v) for v in labels)
    (directory / f"{prefix}-images-idx3-ubyte").write_bytes(img_blob)
    (directory / f"{prefix}-labels-idx1-ubyte").write_bytes(lbl_blob)


@pytest.fixture(scope="session")
def blob_idx_dir(tmp_path_factory):
    """Directory with train/test IDX splits of an easy 4x4 blob problem."""
    directory = tmp_path_factory.mktemp("blob-idx")
    train = synthetic_blobs(2, 16, 40, spread=0.04, seed=12)
    test = synthetic_blobs(2, 16, 10, spread=0.04, seed=12)
    write_idx_pair(directory, "train", train.images, train.labels, side=4)
    write_idx_pair(directory, "t10k", test.images, test.labels, side=4)
    return directory
