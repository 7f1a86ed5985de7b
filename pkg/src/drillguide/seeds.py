"""Named deterministic seed streams.

Every random draw in the package flows from a master seed through a
named substream, so components can be regenerated in isolation (one
trial, one subject, one permutation test) without replaying anything
else, and results cannot depend on execution order.
"""
from __future__ import annotations

import hashlib


def stream_seed(master_seed: int, tag: str) -> int:
    """Stable 64-bit seed for a named substream of the master seed."""
    digest = hashlib.sha256(f"{master_seed}|{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
