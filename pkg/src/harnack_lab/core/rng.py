"""
Counter-based noise streams for reproducible parallel Monte Carlo.

Replicates are grouped in blocks of ``Config.MC_BLOCK_SIZE``. Block ``b`` of a
stream with seed ``s`` owns a Philox generator keyed by ``(s, b)`` and its
increments are drawn in step order, so the noise seen by a replicate depends
only on (seed, replicate index, step index) and never on how blocks are
scheduled across workers.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from .config import Config

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, label: str) -> int:
    """Derive a 64-bit seed from a parent seed and a text label (job name, purpose)"""
    digest = hashlib.sha256(f"{int(seed) & _MASK64}:{label}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


@dataclass(frozen=True)
class NoiseStream:
    """Seeded source of Gaussian increments, addressed by block"""

    seed: int
    block_size: int = Config.MC_BLOCK_SIZE

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError(f"block_size must be positive, got {self.block_size}")

    def generator(self, block: int) -> np.random.Generator:
        """Fresh generator for one block; calling twice gives identical draws"""
        key = np.array([int(self.seed) & _MASK64, int(block) & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def blocks(self, n_paths: int) -> Iterator[Tuple[int, int, int]]:
        """Yield (block index, first replicate, replicate count) covering n_paths"""
        for block, start in enumerate(range(0, n_paths, self.block_size)):
            yield block, start, min(self.block_size, n_paths - start)

    def child(self, label: str) -> 'NoiseStream':
        """Independent stream for a labelled sub-task"""
        return NoiseStream(seed=derive_seed(self.seed, label), block_size=self.block_size)


def get_stream(seed: int, block_size: int = Config.MC_BLOCK_SIZE) -> NoiseStream:
    """Factory used by services and tests"""
    logger.debug(f"Noise stream seed={seed} block_size={block_size}")
    return NoiseStream(seed=int(seed), block_size=block_size)
