"""Small shared helpers: seed derivation, digests, canonical JSON."""

import hashlib
import json


def derive_seed(*parts) -> int:
    """Derive a uint64 seed from arbitrary labeled parts.

    sha256 over the string forms of the parts joined with an ASCII unit
    separator, first 8 bytes little-endian. Stable across runs and platforms,
    so downstream draws do not shift when unrelated parts of a run change.
    """
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def config_digest(obj) -> str:
    """Digest of a JSON-serializable config, invariant to key order."""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()
