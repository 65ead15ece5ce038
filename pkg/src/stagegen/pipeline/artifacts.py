"""Content-addressed artifact store and job-record persistence.

Layout:
    store/objects/{first2}/{digest}   raw artifact bytes, SHA-256 addressed
    store/jobs/{job_id}.json          job metadata
    store/jobs/_idempotency.json      submit idempotency index
    store/cache/{key}                 prompt-optimization memo (digest refs)
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

from ..canonical import sha256_hex


class StoreUnavailable(Exception):
    pass


class ArtifactNotFound(KeyError):
    pass


class TransitionConflict(Exception):
    """The job state on disk no longer matches the expected state."""


def _atomic_write(path: Path, data: bytes) -> None:
    # Unique temp name per writer: concurrent writers of the same object
    # must not share a staging file.
    tmp = path.with_name(f"{path.name}.{uuid.uuid4().hex}.tmp")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise StoreUnavailable(f"cannot write {path}: {exc}") from exc


class ArtifactStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        try:
            for sub in ("objects", "jobs", "cache"):
                (self.root / sub).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreUnavailable(f"cannot create store at {self.root}: {exc}") from exc

    # ---- content-addressed objects --------------------------------------

    def _object_path(self, digest: str) -> Path:
        return self.root / "objects" / digest[:2] / digest

    def put(self, data: bytes) -> str:
        digest = sha256_hex(data)
        path = self._object_path(digest)
        if not path.exists():
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StoreUnavailable(str(exc)) from exc
            _atomic_write(path, data)
        return digest

    def get(self, digest: str) -> bytes:
        path = self._object_path(digest)
        if not path.exists():
            raise ArtifactNotFound(digest)
        return path.read_bytes()

    def has(self, digest: str) -> bool:
        return self._object_path(digest).exists()

    # ---- job records -----------------------------------------------------

    def _job_path(self, job_id: str) -> Path:
        return self.root / "jobs" / f"{job_id}.json"

    def load_job(self, job_id: str) -> dict:
        path = self._job_path(job_id)
        if not path.exists():
            raise ArtifactNotFound(job_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def save_job(self, record: dict, *, expected_state: str | None = None,
                 is_new: bool = False) -> None:
        """Persist a job record; expected_state makes the write compare-and-swap."""
        job_id = record["job_id"]
        path = self._job_path(job_id)
        with self._lock:
            if is_new and path.exists():
                raise TransitionConflict(f"job {job_id} already exists")
            if expected_state is not None:
                current = json.loads(path.read_text(encoding="utf-8"))
                if current["state"] != expected_state:
                    raise TransitionConflict(
                        f"job {job_id} is {current['state']!r}, "
                        f"expected {expected_state!r}"
                    )
            _atomic_write(path, json.dumps(record, indent=1, sort_keys=True).encode("utf-8"))

    def list_jobs(self) -> list[str]:
        return sorted(
            p.stem for p in (self.root / "jobs").glob("*.json")
            if not p.stem.startswith("_")
        )

    # ---- idempotency index -------------------------------------------------

    def _index_path(self) -> Path:
        return self.root / "jobs" / "_idempotency.json"

    def idempotency_lookup(self, key: str) -> str | None:
        path = self._index_path()
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8")).get(key)

    def idempotency_record(self, key: str, job_id: str) -> None:
        with self._lock:
            path = self._index_path()
            index = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
            index[key] = job_id
            _atomic_write(path, json.dumps(index, indent=1, sort_keys=True).encode("utf-8"))

    # ---- derivation cache ---------------------------------------------------

    def cache_get(self, key: str) -> str | None:
        path = self.root / "cache" / key
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8").strip()

    def cache_put(self, key: str, digest: str) -> None:
        _atomic_write(self.root / "cache" / key, digest.encode("utf-8"))
