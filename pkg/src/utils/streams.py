"""Named random streams derived from one master seed."""

import zlib
from dataclasses import dataclass

import numpy as np


def named_stream(seed: int, name: str) -> np.random.Generator:
    """Philox generator for the substream ``name`` of ``seed``.

    The same (seed, name) always yields the same stream, and distinct names
    yield independent streams.

    Examples:
        >>> a = named_stream(7, "bootstrap").uniform()
        >>> b = named_stream(7, "bootstrap").uniform()
        >>> a == b
        True
    """
    key = zlib.crc32(name.encode("utf-8"))
    sequence = np.random.SeedSequence(seed, spawn_key=(key,))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class RandomStreams:
    """Master seed with the substreams a pipeline run draws from.

    Attributes:
        seed: Master seed
    """

    seed: int

    def simulation(self) -> np.random.Generator:
        return named_stream(self.seed, "simulation")

    def pit(self) -> np.random.Generator:
        return named_stream(self.seed, "pit")

    def ranks(self) -> np.random.Generator:
        return named_stream(self.seed, "ranks")

    def bootstrap_seed(self) -> int:
        """Integer seed for the bootstrap, which spawns its own chunk streams."""
        return int(named_stream(self.seed, "bootstrap").integers(0, 2**31 - 1))
