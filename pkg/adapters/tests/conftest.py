"""Shared helpers: raw container builders and adapter process driving.

The raw builders use struct directly so featureio is cross-validated
against an independent spelling of the wire format, and the protocol
helpers speak to adapters exactly the way the benchmark host does:
one JSON line out, one JSON line back.
"""

import json
import struct
import subprocess
import sys

import numpy as np
import pytest

ADAPTER_CMD = [sys.executable, "-m", "encoder_adapters"]


def raw_container(dims, payload: bytes, magic=b"VFMF", version=1,
                  rank=None) -> bytes:
    rank = len(dims) if rank is None else rank
    return (struct.pack("<4sII", magic, version, rank)
            + struct.pack(f"<{len(dims)}I", *dims) + payload)


def raw_image_file(path, array: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(array, dtype=np.float32)
    path.write_bytes(raw_container(arr.shape, arr.tobytes(order="C")))
    return arr


def raw_read_payload(path) -> bytes:
    blob = path.read_bytes()
    _, _, rank = struct.unpack_from("<4sII", blob)
    return blob[12 + 4 * rank:]


class AdapterProc:
    """A live adapter subprocess plus its parsed handshake."""

    def __init__(self, *args):
        self.proc = subprocess.Popen(
            ADAPTER_CMD + list(args), stdin=subprocess.PIPE,
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        self.handshake = json.loads(self.proc.stdout.readline())

    def request(self, rid, image_path) -> dict:
        self.proc.stdin.write(
            json.dumps({"id": rid, "image": str(image_path)}) + "\n")
        self.proc.stdin.flush()
        return json.loads(self.proc.stdout.readline())

    def send_line(self, line: str) -> None:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    @property
    def alive(self) -> bool:
        return self.proc.poll() is None

    def close(self) -> int:
        if self.proc.stdin:
            self.proc.stdin.close()
        try:
            return self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            return self.proc.wait()


@pytest.fixture
def identity_adapter():
    adapter = AdapterProc("identity")
    assert adapter.handshake.get("ready") is True
    yield adapter
    adapter.close()
