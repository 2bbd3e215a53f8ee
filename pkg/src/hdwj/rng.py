"""Seeding for the counter-based generators in the kernel backends.

A variate is a pure function of (seed, stream, path, counter), so chunking
paths over threads or calls never changes results.  Streams separate the
independent ingredients of one experiment.
"""

from dataclasses import dataclass
import hashlib

MASK64 = (1 << 64) - 1

# stream layout of one driver: Gaussian part, then two streams per jump kernel
STREAM_GAUSS = 0
STREAM_JUMPS = 2
STREAMS_PER_DRIVER = 8


def mix64(z):
    """SplitMix64 finaliser on Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, *tags):
    """Deterministic child seed for a labelled sub-experiment."""
    h = hashlib.sha256(repr(tags).encode()).digest()
    return mix64((seed & MASK64) ^ int.from_bytes(h[:8], "little"))


@dataclass(frozen=True)
class RngSpec:
    """Master seed plus the thread count (which never affects results)."""

    seed: int = 20240601
    threads: int = 1

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def child(self, *tags):
        return RngSpec(derive_seed(self.seed, *tags), self.threads)
