"""Reproducible random streams for path simulation.

Streams come from NumPy's Philox counter-based generator. The 128-bit key
is ``(seed, stream)`` and path ``p`` starts at counter ``(0, p, 0, 0)``;
successive draws advance the low counter word, which acts as the step index.
A path's draws therefore depend only on ``(seed, stream, path, step)``, not
on how many other paths ran or in what order.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 64) - 1


def stream_id(*parts) -> int:
    """Stable 64-bit id for a tuple of labels (independent of PYTHONHASHSEED)."""
    text = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def path_generator(seed: int, stream: int, path_index: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=np.array([seed & _MASK, stream & _MASK], dtype=np.uint64),
                              counter=np.array([0, path_index & _MASK, 0, 0], dtype=np.uint64))
    return np.random.Generator(bitgen)


def path_uniforms(seed: int, stream: int, num_paths: int, steps: int, width: int = 1) -> np.ndarray:
    """``(num_paths, steps, width)`` uniforms on [0, 1), row ``p`` from path ``p``'s stream.

    Step ``k`` always receives the same values whatever ``steps`` is, so a
    longer simulation extends a shorter one with common random numbers.
    """
    out = np.empty((num_paths, steps, width))
    for p in range(num_paths):
        out[p] = path_generator(seed, stream, p).random((steps, width))
    return out
