"""Encoder abstraction: raw-pixel baseline, subprocess adapters, pooling.

Every encoder exposes ``encoder_id`` and ``features(display_image)``
returning a 1-D float array.  Encoders consume display-encoded images
(float sRGB values in [0, 1], shape H x W x 3); conversion from
luminance happens in the scoring layer.

External models plug in as subprocess adapters speaking newline-
delimited JSON on stdin/stdout:

    handshake (adapter -> host):  {"ready": true, "name": "<id>"}
    request   (host -> adapter):  {"id": <u64>, "image": "<path>"}
    response  (adapter -> host):  {"id": <u64>, "feature": "<path>"}
                              or  {"id": <u64>, "error": "<message>"}

Image and feature payloads are exchanged as feature files (see
featurefile module); images are written with dims [H, W, 3].  One
request is in flight per adapter instance; AdapterPool provides
parallelism and crash recovery with a bounded relaunch budget.
"""

from __future__ import annotations

import hashlib
import json
import os
import queue
import subprocess
import tempfile
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .featurefile import FeatureFileError, read_feature_file, \
    write_feature_file

__all__ = [
    "EncoderError", "ProtocolError", "EncoderFailure", "FeatureVector",
    "RawPixelEncoder", "SubprocessEncoder", "AdapterPool", "encode",
    "open_encoder",
]


class EncoderError(RuntimeError):
    """Base class for encoder faults."""


class ProtocolError(EncoderError):
    """The adapter violated the request/response contract."""


class EncoderFailure(EncoderError):
    """The adapter could not produce features (crash, timeout, error)."""


@dataclass(frozen=True)
class FeatureVector:
    """1-D float32 features plus provenance (encoder id + input digest)."""

    values: np.ndarray
    provenance: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32).ravel()
        if v.size < 1:
            raise EncoderFailure("empty feature vector")
        if not np.all(np.isfinite(v)):
            raise EncoderFailure("non-finite values in feature vector")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)


def _check_display_image(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 display image, got shape "
                         f"{img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("display image contains non-finite values")
    return img


class RawPixelEncoder:
    """Identity baseline: the flattened display image is the feature map.

    Row-major, channel-fastest flattening of the H x W x 3 image, so the
    reference display yields length 224 * 224 * 3 = 150528.
    """

    encoder_id = "raw-pixels"

    def features(self, image: np.ndarray) -> np.ndarray:
        img = _check_display_image(image)
        return np.ascontiguousarray(img, dtype=np.float32).ravel()


def encode(encoder, image: np.ndarray) -> FeatureVector:
    """Run an encoder on a display image, validating and tagging the result.

    Provenance is "<encoder_id>:<sha256 prefix of the float32 image
    bytes>", which identifies both the model and the exact input.
    """
    img = _check_display_image(image)
    digest = hashlib.sha256(
        np.ascontiguousarray(img, dtype=np.float32).tobytes()).hexdigest()
    raw = np.asarray(encoder.features(img))
    return FeatureVector(values=raw.ravel(),
                         provenance=f"{encoder.encoder_id}:{digest[:16]}")


class _StreamReader:
    """Background line reader; None on the queue signals EOF."""

    def __init__(self, stream):
        self.lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._thread = threading.Thread(target=self._run, args=(stream,),
                                        daemon=True)
        self._thread.start()

    def _run(self, stream) -> None:
        try:
            for line in stream:
                self.lines.put(line)
        except ValueError:
            pass
        finally:
            self.lines.put(None)

    def next_line(self, timeout: float) -> Optional[str]:
        try:
            return self.lines.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError


class SubprocessEncoder:
    """Client for one adapter process; one request in flight at a time."""

    def __init__(self, command: Sequence[str], *, timeout: float = 60.0,
                 name: Optional[str] = None,
                 workdir: Optional[Union[str, Path]] = None):
        if not command:
            raise ValueError("empty adapter command")
        self._command = [str(c) for c in command]
        self._timeout = float(timeout)
        self._workdir = str(workdir) if workdir is not None else None
        self._next_id = 0
        self._proc: Optional[subprocess.Popen] = None
        self._reader: Optional[_StreamReader] = None
        self._stderr_tail: deque = deque(maxlen=40)
        self._tmp = tempfile.TemporaryDirectory(prefix="hvsbench-adapter-")
        self.encoder_id = name or "subprocess"
        try:
            self._launch(name)
        except Exception:
            self._tmp.cleanup()
            raise

    def _launch(self, name_override: Optional[str]) -> None:
        try:
            self._proc = subprocess.Popen(
                self._command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, text=True, bufsize=1,
                cwd=self._workdir)
        except OSError as exc:
            raise EncoderFailure(
                f"could not launch adapter {self._command!r}: {exc}") from exc
        self._reader = _StreamReader(self._proc.stdout)
        threading.Thread(target=self._drain_stderr, daemon=True).start()
        line = self._read_line("handshake")
        msg = self._parse(line, "handshake")
        if msg.get("ready") is not True or not isinstance(msg.get("name"),
                                                          str):
            self._shutdown()
            raise ProtocolError(
                f"bad handshake {line.strip()!r}; expected "
                '{"ready": true, "name": "<id>"}')
        self.encoder_id = name_override or msg["name"]

    def _drain_stderr(self) -> None:
        proc = self._proc
        if proc is None or proc.stderr is None:
            return
        try:
            for line in proc.stderr:
                self._stderr_tail.append(line.rstrip("\n"))
        except ValueError:
            pass

    def _context(self) -> str:
        tail = "; ".join(list(self._stderr_tail)[-5:])
        return f" [adapter stderr: {tail}]" if tail else ""

    def _read_line(self, what: str) -> str:
        try:
            line = self._reader.next_line(self._timeout)
        except TimeoutError:
            self._shutdown()
            raise EncoderFailure(
                f"adapter timed out after {self._timeout:.6g}s waiting for "
                f"{what}{self._context()}") from None
        if line is None:
            code = self._proc.poll()
            self._shutdown()
            raise EncoderFailure(
                f"adapter exited (code {code}) before {what}"
                f"{self._context()}")
        return line

    @staticmethod
    def _parse(line: str, what: str) -> dict:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"non-JSON {what} line "
                                f"{line.strip()!r}") from exc
        if not isinstance(msg, dict):
            raise ProtocolError(f"{what} must be a JSON object, got "
                                f"{line.strip()!r}")
        return msg

    @property
    def alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    def features(self, image: np.ndarray) -> np.ndarray:
        if not self.alive:
            raise EncoderFailure("adapter process is not running")
        img = _check_display_image(image)
        rid = self._next_id
        self._next_id += 1
        img_path = os.path.join(self._tmp.name, f"img-{rid:08d}.vfmf")
        write_feature_file(img_path, img.astype(np.float32))
        try:
            try:
                self._proc.stdin.write(
                    json.dumps({"id": rid, "image": img_path}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                self._shutdown()
                raise EncoderFailure(
                    f"adapter pipe closed{self._context()}") from exc
            line = self._read_line(f"response {rid}")
            msg = self._parse(line, "response")
            if msg.get("id") != rid:
                self._shutdown()
                raise ProtocolError(
                    f"response id {msg.get('id')!r} does not match request "
                    f"{rid}")
            if "error" in msg:
                raise EncoderFailure(
                    f"adapter reported: {msg['error']}")
            path = msg.get("feature")
            if not isinstance(path, str):
                self._shutdown()
                raise ProtocolError(
                    f"response {line.strip()!r} has neither 'feature' nor "
                    "'error'")
            try:
                values = read_feature_file(path)
            except (OSError, FeatureFileError) as exc:
                raise EncoderFailure(
                    f"unreadable feature file {path}: {exc}") from exc
            finally:
                _unlink_quiet(path)
            flat = values.ravel()
            if not np.all(np.isfinite(flat)):
                raise EncoderFailure(
                    f"adapter returned non-finite features for request {rid}")
            return flat
        finally:
            _unlink_quiet(img_path)

    def close(self) -> None:
        self._shutdown()
        self._tmp.cleanup()

    def _shutdown(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        for stream in (proc.stdin,):
            try:
                stream.close()
            except (OSError, AttributeError):
                pass
        try:
            proc.terminate()
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):  # pragma: no cover - GC-order dependent
        try:
            self._shutdown()
        except Exception:
            pass


def _unlink_quiet(path: str) -> None:
    try:
        os.unlink(path)
    except OSError:
        pass


class _PoolClosed:
    """Sentinel occupying a pool slot after the relaunch budget runs out."""


_DEAD = _PoolClosed()


class AdapterPool:
    """N adapter instances of one command with bounded crash recovery.

    ``features`` is thread-safe: callers borrow an instance, and a failed
    instance is replaced (relaunching the command) while the pool-wide
    restart budget lasts.  Every request ends in exactly one outcome:
    a feature vector or a raised/recorded EncoderError.
    """

    def __init__(self, command: Sequence[str], size: int = 1, *,
                 restart_budget: int = 3, timeout: float = 60.0,
                 name: Optional[str] = None,
                 workdir: Optional[Union[str, Path]] = None):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self._command = list(command)
        self._size = size
        self._timeout = timeout
        self._name = name
        self._workdir = workdir
        self._budget = int(restart_budget)
        self._lock = threading.Lock()
        self._slots: "queue.Queue" = queue.Queue()
        self._instances: List[SubprocessEncoder] = []
        try:
            for _ in range(size):
                inst = self._spawn()
                self._instances.append(inst)
                self._slots.put(inst)
        except Exception:
            self.close()
            raise
        self.encoder_id = name or self._instances[0].encoder_id

    def _spawn(self) -> SubprocessEncoder:
        return SubprocessEncoder(self._command, timeout=self._timeout,
                                 name=self._name, workdir=self._workdir)

    @property
    def restarts_left(self) -> int:
        with self._lock:
            return self._budget

    def _replace(self, dead: SubprocessEncoder):
        with self._lock:
            if dead in self._instances:
                self._instances.remove(dead)
            dead.close()
            if self._budget <= 0:
                return _DEAD
            self._budget -= 1
            try:
                inst = self._spawn()
            except EncoderError:
                return _DEAD
            self._instances.append(inst)
            return inst

    def features(self, image: np.ndarray) -> np.ndarray:
        while True:
            inst = self._slots.get()
            if inst is _DEAD:
                self._slots.put(_DEAD)
                raise EncoderFailure(
                    "adapter pool exhausted its restart budget")
            try:
                out = inst.features(image)
            except EncoderError as exc:
                if isinstance(exc, EncoderFailure) and inst.alive:
                    # per-request failure (error response, bad feature
                    # file): the process is healthy and the stream is in
                    # sync, so a retry would just repeat it
                    self._slots.put(inst)
                    raise
                replacement = self._replace(inst)
                self._slots.put(replacement)
                if replacement is _DEAD:
                    raise EncoderFailure(
                        f"restart budget exhausted; last failure: {exc}"
                    ) from exc
                continue
            self._slots.put(inst)
            return out

    def features_many(self, images: Sequence[np.ndarray]) -> list:
        """One outcome per image, in order: an array or an EncoderError."""
        results: list = [None] * len(images)
        with ThreadPoolExecutor(max_workers=self._size) as pool:
            futures = {pool.submit(self.features, img): k
                       for k, img in enumerate(images)}
            for fut in as_completed(futures):
                k = futures[fut]
                try:
                    results[k] = fut.result()
                except EncoderError as exc:
                    results[k] = exc
        return results

    def close(self) -> None:
        with self._lock:
            instances, self._instances = self._instances, []
            self._budget = 0
        for inst in instances:
            inst.close()
        while True:
            try:
                self._slots.get_nowait()
            except queue.Empty:
                break
        self._slots.put(_DEAD)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_encoder(config: dict):
    """Build an encoder from a run-configuration entry.

    builtin-raw ignores launch options; subprocess entries accept
    command (required), pool_size, restart_budget, timeout, and workdir.
    """
    kind = config.get("kind", "builtin-raw")
    if kind == "builtin-raw":
        return RawPixelEncoder()
    if kind == "subprocess":
        command = config.get("command")
        if not command:
            raise ValueError("subprocess encoder config needs a command")
        return AdapterPool(
            command, size=int(config.get("pool_size", 1)),
            restart_budget=int(config.get("restart_budget", 3)),
            timeout=float(config.get("timeout", 60.0)),
            name=config.get("id"), workdir=config.get("workdir"))
    raise ValueError(f"unknown encoder kind {kind!r}")
