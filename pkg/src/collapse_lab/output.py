"""CSV emission and run manifests.

Every file is written to a temporary sibling under a ``portalocker`` lock
and then moved into place, so readers never see half-written output.
"""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import csv
import hashlib
import io
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

import portalocker  # to lock output files while they are replaced

from ._version import __version__
from .config import _MANIFEST_PREFIX, _SUBCOMMAND_KEY, ExperimentConfig

MANIFEST_NAME = "manifest.txt"


def _format(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp_path = f"{path}.tmp"
    with portalocker.Lock(f"{path}.lock", mode="w"):
        with open(tmp_path, "w", newline="") as fopen:
            fopen.write(text)
        os.replace(tmp_path, path)
    try:
        os.remove(f"{path}.lock")
    except OSError:
        pass


def write_csv(
    path: str, header: Sequence[str], rows: Iterable[Sequence]
) -> str:
    """Write ``rows`` under ``header``; floats are written with ``repr``.

    Fields holding the delimiter or quotes are quoted the ``csv`` way.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(
                f"row has {len(row)} fields, header has {len(header)}"
            )
        writer.writerow([_format(value) for value in row])
    _atomic_write(path, buffer.getvalue())
    return path


def file_checksum(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fopen:
        for chunk in iter(lambda: fopen.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Record of one subcommand run, readable back as its config."""

    config: ExperimentConfig
    outputs: List[str] = field(default_factory=list)
    duration: float = 0.0

    def lines(self) -> List[str]:
        entries: Dict[str, str] = {_SUBCOMMAND_KEY: self.config.subcommand}
        entries.update(self.config.snapshot())
        meta = {
            "version": __version__,
            "master_seed": str(self.config["seed"]),
            "duration_seconds": f"{self.duration:.3f}",
        }
        for path in self.outputs:
            meta[f"sha256.{os.path.basename(path)}"] = file_checksum(path)
        entries.update({_MANIFEST_PREFIX + k: v for k, v in meta.items()})
        return [f"{key}={value}" for key, value in entries.items()]

    def write(self, directory: str) -> str:
        path = os.path.join(directory, MANIFEST_NAME)
        _atomic_write(path, "\n".join(self.lines()) + "\n")
        return path
