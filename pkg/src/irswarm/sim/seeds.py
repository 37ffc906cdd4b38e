"""Seed derivation for replications.

``derive(master, i)`` is one splitmix64 step applied to ``master`` mixed with
the replication index, so every replication gets a fixed, well-spread seed no
matter in which order (or on which worker) it runs.
"""

from ..kernels import splitmix64

MASK64 = 0xFFFFFFFFFFFFFFFF
_STRIDE = 0xD1B54A32D192ED03


def derive(master: int, index: int) -> int:
    """Seed of replication ``index`` under ``master`` (64-bit)."""
    _, out = splitmix64((int(master) ^ ((int(index) + 1) * _STRIDE)) & MASK64)
    return int(out)


def derive_many(master: int, count: int) -> list[int]:
    return [derive(master, i) for i in range(count)]
