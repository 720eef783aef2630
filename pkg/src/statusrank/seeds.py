"""Deterministic seed derivation.

Every random component of a run draws its seed from a single master seed
and a fixed text label, so any stage can be reproduced in isolation.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, label: str) -> int:
    """Derive a child seed from a master seed and a component label.

    The derivation is a SHA-256 hash of ``"<master>:<label>"``, truncated to
    63 bits, so it is stable across platforms and Python versions.
    """
    digest = hashlib.sha256(f"{int(master)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF
