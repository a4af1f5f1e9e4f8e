"""Container round trips, byte-level layout, and rejection cases."""

import struct

import numpy as np
import pytest

from encoder_adapters.featureio import (FeatureIOError, read_array,
                                        write_array)

from conftest import raw_container


@pytest.mark.parametrize("shape", [(5,), (2, 3), (3, 4, 5), (1, 1, 1, 7)])
def test_round_trip_bit_exact(tmp_path, shape):
    rng = np.random.default_rng(42)
    arr = rng.standard_normal(shape).astype(np.float32)
    path = tmp_path / "a.vfmf"
    write_array(path, arr)
    back = read_array(path)
    assert back.shape == arr.shape
    assert back.dtype == np.float32
    assert np.array_equal(back, arr)
    assert back.tobytes() == arr.tobytes()


def test_header_byte_layout(tmp_path):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "a.vfmf"
    write_array(path, arr)
    blob = path.read_bytes()
    assert blob[:4] == b"VFMF"
    assert struct.unpack_from("<I", blob, 4)[0] == 1
    assert struct.unpack_from("<I", blob, 8)[0] == 2
    assert struct.unpack_from("<2I", blob, 12) == (2, 3)
    assert blob[20:] == arr.tobytes(order="C")
    assert len(blob) == 20 + 6 * 4


def test_reads_independently_built_file(tmp_path):
    arr = np.linspace(-1.0, 1.0, 12, dtype=np.float32).reshape(3, 4)
    path = tmp_path / "hand.vfmf"
    path.write_bytes(raw_container((3, 4), arr.tobytes(order="C")))
    assert np.array_equal(read_array(path), arr)


def test_scalar_promoted_to_rank_one(tmp_path):
    path = tmp_path / "s.vfmf"
    write_array(path, np.float32(2.5))
    back = read_array(path)
    assert back.shape == (1,)
    assert back[0] == np.float32(2.5)


def test_write_rejections(tmp_path):
    path = tmp_path / "bad.vfmf"
    with pytest.raises(FeatureIOError, match="empty"):
        write_array(path, np.zeros((0,), dtype=np.float32))
    with pytest.raises(FeatureIOError, match="non-finite"):
        write_array(path, np.array([1.0, np.nan], dtype=np.float32))
    with pytest.raises(FeatureIOError, match="rank 33"):
        write_array(path, np.zeros((1,) * 33, dtype=np.float32))


def test_read_rejections(tmp_path):
    payload = np.ones(6, dtype=np.float32).tobytes()

    def bad(name, blob):
        p = tmp_path / name
        p.write_bytes(blob)
        return p

    with pytest.raises(FeatureIOError, match="magic"):
        read_array(bad("magic", raw_container((6,), payload, magic=b"XXXX")))
    with pytest.raises(FeatureIOError, match="version 2"):
        read_array(bad("ver", raw_container((6,), payload, version=2)))
    with pytest.raises(FeatureIOError, match="rank 0"):
        read_array(bad("rank0", raw_container((), b"", rank=0)))
    with pytest.raises(FeatureIOError, match="rank 33"):
        read_array(bad("rank33", struct.pack("<4sII", b"VFMF", 1, 33)))
    with pytest.raises(FeatureIOError, match="smaller than"):
        read_array(bad("tiny", b"VFMF\x01"))
    with pytest.raises(FeatureIOError, match="dims table"):
        read_array(bad("dims", struct.pack("<4sII", b"VFMF", 1, 3)
                       + struct.pack("<I", 6)))
    with pytest.raises(FeatureIOError, match="zero dimension"):
        read_array(bad("zero", raw_container((0,), b"")))
    with pytest.raises(FeatureIOError, match="requires 24"):
        read_array(bad("short", raw_container((6,), payload[:-4])))
    with pytest.raises(FeatureIOError, match="requires 24"):
        read_array(bad("long", raw_container((6,), payload + b"\x00" * 4)))
