"""Pluggable base classifiers: lookup tables, nearest-centroid, constants,
and a client for external classifier processes speaking newline-delimited JSON.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PointCloud
from .errors import (
    ClassifierBackendError,
    EmptyInputError,
    TrainingError,
)
from .partition import HashRule, partition


def cloud_key(cloud: PointCloud) -> bytes:
    """Order-insensitive lookup key: sorted canonical encodings, newline-joined."""
    return b"\n".join(cloud.sorted_encodings())


class BaseClassifier:
    """Deterministic mapping from a non-empty cloud to a label in [1, classes]."""

    classes: int

    def classify(self, cloud: PointCloud) -> int:
        raise NotImplementedError

    def _require_nonempty(self, cloud: PointCloud) -> None:
        if len(cloud) == 0:
            raise EmptyInputError("cannot classify an empty cloud")


class ConstantClassifier(BaseClassifier):
    def __init__(self, label: int, classes: int):
        if not 1 <= label <= classes:
            raise TrainingError(f"label {label} outside [1, {classes}]")
        self.label = label
        self.classes = classes

    def classify(self, cloud: PointCloud) -> int:
        self._require_nonempty(cloud)
        return self.label


class LookupClassifier(BaseClassifier):
    """Arbitrary finite function: exact-match on the cloud's sorted encodings."""

    def __init__(self, table: dict[bytes, int], default: int, classes: int):
        self.table = dict(table)
        self.default = default
        self.classes = classes

    def classify(self, cloud: PointCloud) -> int:
        self._require_nonempty(cloud)
        return self.table.get(cloud_key(cloud), self.default)


class CentroidClassifier(BaseClassifier):
    """Nearest prototype (squared Euclidean) to the cloud's mean point.

    Equidistant prototypes resolve to the smallest label index.
    """

    def __init__(self, prototypes: np.ndarray):
        prototypes = np.asarray(prototypes, dtype=float)
        if prototypes.ndim != 2 or prototypes.shape[0] < 2:
            raise TrainingError("need a (c, o) prototype matrix with c >= 2")
        self.prototypes = prototypes
        self.classes = prototypes.shape[0]

    def classify(self, cloud: PointCloud) -> int:
        self._require_nonempty(cloud)
        mean = np.asarray(cloud.mean_point())
        d2 = ((self.prototypes - mean) ** 2).sum(axis=1)
        return int(np.argmin(d2)) + 1  # argmin takes the first minimum


@dataclass(frozen=True)
class FullClouds:
    """Fit prototypes from whole training clouds."""


@dataclass(frozen=True)
class SubClouds:
    """Fit prototypes from hashed sub-point clouds, each inheriting its
    source cloud's label."""

    m: int
    rule: HashRule


def fit_centroid(
    train: Sequence[tuple[PointCloud, int]],
    classes: int,
    mode: FullClouds | SubClouds = FullClouds(),
) -> CentroidClassifier:
    """Class prototype = mean of the member clouds' mean points."""
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for cloud, label in train:
        if not 1 <= label <= classes:
            raise TrainingError(f"label {label} outside [1, {classes}]")
        if isinstance(mode, SubClouds):
            members = [
                sub
                for sub in partition(cloud, mode.m, mode.rule).subclouds
                if len(sub) > 0
            ]
        else:
            members = [cloud]
        for member in members:
            mean = np.asarray(member.mean_point())
            if label in sums:
                sums[label] += mean
                counts[label] += 1
            else:
                sums[label] = mean.copy()
                counts[label] = 1
    missing = [l for l in range(1, classes + 1) if l not in sums]
    if missing:
        raise TrainingError(f"classes without training examples: {missing}")
    protos = np.stack([sums[l] / counts[l] for l in range(1, classes + 1)])
    return CentroidClassifier(protos)


class _LineSession:
    """One child process speaking newline-delimited JSON on stdin/stdout."""

    def __init__(self, cmd: Sequence[str], timeout: float):
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                list(cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            raise ClassifierBackendError(f"cannot spawn backend: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._next_id = 0

    def _pump(self) -> None:
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_message(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            raise ClassifierBackendError(f"backend timed out after {self.timeout}s")
        if line is None:
            raise ClassifierBackendError("backend closed its output stream")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ClassifierBackendError(f"backend emitted invalid JSON: {line!r}") from exc
        if not isinstance(msg, dict):
            raise ClassifierBackendError(f"backend emitted a non-object: {line!r}")
        return msg

    def handshake(self) -> dict:
        msg = self._read_message()
        if msg.get("type") != "hello" or msg.get("protocol") != 1:
            raise ClassifierBackendError(f"bad handshake: {msg!r}")
        return msg

    def request(self, req_type: str, payload: dict) -> dict:
        req_id = self._next_id
        self._next_id += 1
        msg = {"type": req_type, "id": req_id, **payload}
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(json.dumps(msg) + "\n")
            self.proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise ClassifierBackendError(f"backend write failed: {exc}") from exc
        resp = self._read_message()
        if resp.get("id") != req_id:
            raise ClassifierBackendError(
                f"id mismatch: sent {req_id}, got {resp.get('id')!r}"
            )
        if resp.get("type") == "error":
            raise ClassifierBackendError(f"backend error: {resp.get('message')!r}")
        return resp

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                try:
                    self.proc.stdin.close()
                except OSError:
                    pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


class ExternalClassifier(BaseClassifier):
    """Stateful session with a classifier child process.

    Requests on one session are serialized; open several sessions for
    concurrency. Closing is idempotent.
    """

    def __init__(self, cmd: Sequence[str], classes: int, timeout: float = 30.0):
        self.cmd = list(cmd)
        self.classes = classes
        self._session = _LineSession(cmd, timeout)
        hello = self._session.handshake()
        advertised = hello.get("classes")
        if advertised != classes:
            self._session.close()
            raise ClassifierBackendError(
                f"backend advertises {advertised} classes, expected {classes}"
            )
        self._lock = threading.Lock()

    def classify(self, cloud: PointCloud) -> int:
        self._require_nonempty(cloud)
        points = [list(pt) for pt in cloud]
        with self._lock:
            resp = self._session.request("predict", {"points": points})
        if resp.get("type") != "label":
            raise ClassifierBackendError(f"unexpected response: {resp!r}")
        label = resp.get("label")
        if not isinstance(label, int) or not 1 <= label <= self.classes:
            raise ClassifierBackendError(f"label out of range: {label!r}")
        return label

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "ExternalClassifier":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def open_external(cmd: Sequence[str], classes: int, timeout: float = 30.0) -> ExternalClassifier:
    return ExternalClassifier(cmd, classes, timeout=timeout)
