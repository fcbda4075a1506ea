"""
Portable seedable random numbers.

SplitMix64 has a 64-bit state advanced by the golden-ratio increment
``0x9E3779B97F4A7C15`` and finalised with the mixing constants
``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB`` (shifts 30, 27, 31).
Doubles are formed from the top 53 bits. Any implementation following
these constants reproduces the same sample sets from the same seed.

The generator exposes ``uniform(low, high, size)`` so it can be used
wherever a :class:`numpy.random.Generator` is accepted by the samplers.
"""
import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """SplitMix64 stream. ``state`` is the raw 64-bit counter."""

    def __init__(self, seed=0):
        self.state = int(seed) & _MASK

    def next_u64(self, n=None):
        """Return the next output (``n=None``) or an array of ``n`` outputs."""
        count = 1 if n is None else int(n)
        k = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * GAMMA
        self.state = (self.state + count * int(GAMMA)) & _MASK
        out = _mix(z)
        return int(out[0]) if n is None else out

    def random(self, size=None):
        """Uniform doubles in [0, 1)."""
        n = 1 if size is None else int(np.prod(size))
        bits = self.next_u64(n) >> np.uint64(11)
        out = bits.astype(np.float64) * (1.0 / (1 << 53))
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        r = self.random(size)
        return low + (high - low) * r

    def spawn(self, key):
        """Independent child stream derived from this seed and an integer key."""
        z = _mix(np.array([(self.state + (int(key) + 1) * int(GAMMA)) & _MASK], dtype=np.uint64))
        return SplitMix64(int(z[0]))


def make_rng(seed):
    return SplitMix64(seed)
