"""Canonical certificate documents shared by the command-line tools."""
from __future__ import annotations

import hashlib
import json
from typing import Dict, Iterable, Optional

CERT_SCHEMA = "cert.v1"
VERIFIED, FAILED, INCOMPLETE = "VERIFIED", "FAILED", "INCOMPLETE"
EXIT_CODES = {VERIFIED: 0, FAILED: 1, INCOMPLETE: 3}
EXIT_MALFORMED = 2


def canonical_dumps(data) -> str:
    """Sorted keys, fixed indentation, trailing newline: equal data, equal bytes."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def digests(paths: Dict[str, str]) -> Dict[str, dict]:
    return {name: {"path": p, "sha256": sha256_file(p)} for name, p in sorted(paths.items())}


def make_certificate(subcommand: str, argv: Iterable[str], inputs: Dict[str, str],
                     status: str, result: dict, seed: Optional[int] = None) -> dict:
    return {
        "schema": CERT_SCHEMA,
        "command": {"subcommand": subcommand, "argv": list(argv)},
        "inputs": digests(inputs),
        "seed": seed,
        "status": status,
        "result": result,
    }


def write_json(path: str, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(data))


def read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
