"""Sub-seed derivation.

Every random object is drawn from a generator keyed by
``(root seed, tag code, *indices)`` where the tag code is the CRC-32 of the
tag string. The key is fed to :class:`numpy.random.SeedSequence`, and the
generator is PCG64. Changing this derivation changes every output file, so
treat it as part of the file format.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode("ascii"))


def _entropy(root: int, tag: str, index: tuple[int, ...]) -> list[int]:
    root = int(root) & MASK64
    # SeedSequence wants non-negative words; split the 64-bit root in two.
    return [root & 0xFFFFFFFF, root >> 32, tag_code(tag), *(int(i) for i in index)]


def rng_for(root: int, tag: str, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy(root, tag, index))))


def sub_seed(root: int, tag: str, *index: int) -> int:
    """A 64-bit seed derived from ``root`` for ``tag`` and ``index``."""
    state = np.random.SeedSequence(_entropy(root, tag, index)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
