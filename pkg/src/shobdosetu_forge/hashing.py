"""Stable 64-bit hashing for per-item seeds and split assignment.

Keys are hashed as the UTF-8 bytes of ``"<master_seed>:<item_id>"`` with
64-bit FNV-1a, followed by the splitmix64 finalizer. Plain FNV-1a leaves
the high bits nearly untouched by the last few bytes of a key, so
sequential ids like ``chunk_00017`` would cluster when the hash is read as
a fraction of 2**64. The finalizer fixes that while keeping the function
trivial to reimplement elsewhere.
"""

from __future__ import annotations

MASK64 = 0xFFFF_FFFF_FFFF_FFFF
FNV_OFFSET = 0xCBF2_9CE4_8422_2325
FNV_PRIME = 0x0000_0100_0000_01B3


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def splitmix64_finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB) & MASK64
    return z ^ (z >> 31)


def item_hash(master_seed: int, item_id: str) -> int:
    """64-bit hash of ``(master_seed, item_id)``; identical across runs and platforms."""
    key = f"{int(master_seed)}:{item_id}".encode("utf-8")
    return splitmix64_finalize(fnv1a_64(key))


def unit_fraction(master_seed: int, item_id: str) -> float:
    """``item_hash / 2**64``, a value in [0, 1)."""
    return item_hash(master_seed, item_id) / 2.0**64
