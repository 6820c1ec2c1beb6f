"""Versioned array bundles, content hashes and output-directory manifests."""

import hashlib
import json
import logging
import zipfile
from pathlib import Path
from typing import Any

import numpy as np

from seizure.errors import DataError, HeaderError

logger = logging.getLogger(__name__)

BUNDLE_FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
_META_KEY = "__meta__"
_FIXED_TIMESTAMP = (1980, 1, 1, 0, 0, 0)


def save_bundle(path: str | Path, kind: str, arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> None:
    """Write named arrays plus a JSON header to a single .npz file.

    The zip entries carry fixed timestamps, so identical inputs give identical bytes.
    """
    header = {"kind": kind, "version": BUNDLE_FORMAT_VERSION, "meta": meta or {}}
    encoded = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    entries = [(_META_KEY, encoded)] + sorted(arrays.items())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
            for name, value in entries:
                info = zipfile.ZipInfo(f"{name}.npy", date_time=_FIXED_TIMESTAMP)
                with zf.open(info, "w", force_zip64=True) as fh:
                    np.lib.format.write_array(fh, np.ascontiguousarray(value), allow_pickle=False)
    except OSError as e:
        raise DataError(f"Cannot write bundle {path}: {e}") from e


def load_bundle(path: str | Path, kind: str) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Read a bundle written by save_bundle and check its kind and version."""
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {k: data[k] for k in data.files}
    except FileNotFoundError as e:
        raise DataError(f"Bundle not found: {path}") from e
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise HeaderError(f"Unreadable bundle {path}: {e}") from e

    raw_header = arrays.pop(_META_KEY, None)
    if raw_header is None:
        raise HeaderError(f"Bundle {path} has no header entry.")
    header = json.loads(raw_header.tobytes().decode("utf-8"))
    if header.get("kind") != kind:
        raise HeaderError(f"Bundle {path} holds '{header.get('kind')}', expected '{kind}'.")
    if header.get("version") != BUNDLE_FORMAT_VERSION:
        raise HeaderError(f"Bundle {path} has unsupported version {header.get('version')}.")
    return arrays, header["meta"]


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(directory: str | Path) -> Path:
    """Hash every file below *directory* (except the manifest) into manifest.json."""
    root = Path(directory)
    entries = {
        p.relative_to(root).as_posix(): file_sha256(p)
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != MANIFEST_NAME
    }
    manifest_path = root / MANIFEST_NAME
    manifest_path.write_text(json.dumps({"files": entries}, indent=2, sort_keys=True) + "\n")
    logger.debug("Wrote manifest with %d entries to %s", len(entries), manifest_path)
    return manifest_path


def verify_manifest(directory: str | Path) -> None:
    """Raise DataError when a file listed in the manifest is missing or changed."""
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"No manifest in {root}")
    entries = json.loads(manifest_path.read_text())["files"]
    for name, expected in entries.items():
        target = root / name
        if not target.is_file():
            raise DataError(f"Manifest lists missing file {target}")
        if file_sha256(target) != expected:
            raise DataError(f"Content hash mismatch for {target}")
