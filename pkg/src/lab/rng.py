"""Counter-based splittable random streams

Every stream is a Philox generator keyed by ``(seed, stream_id)``, so any
replica can be regenerated without replaying the others and parallel work
never depends on scheduling order.
"""

import hashlib
import struct
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import special

_MASK64 = (1 << 64) - 1

# Floor for open uniforms; gen.random() already stays below 1.
_OPEN_FLOOR = 2.0 ** -54

Label = Union[str, int, float]


def _hash_labels(*labels: Label) -> int:
    digest = hashlib.blake2b(digest_size=8)
    for label in labels:
        if isinstance(label, float):
            digest.update(b"f" + struct.pack("<d", label))
        elif isinstance(label, int):
            digest.update(b"i" + (label & _MASK64).to_bytes(8, "little"))
        else:
            digest.update(b"s" + str(label).encode("utf-8"))
        digest.update(b"|")
    return int.from_bytes(digest.digest(), "little")


def stream_id_for(experiment: str, replica: int) -> int:
    """Stream id of replica ``replica`` of experiment ``experiment``."""
    return _hash_labels(experiment, replica)


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one independent random stream.

    The value itself is immutable; each call to :meth:`generator` returns a
    fresh generator positioned at the start of the stream. A generator must
    not be shared by two concurrent simulations.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def spawn(self, *labels: Label) -> "RngStream":
        """Child stream derived deterministically from this one and ``labels``."""
        return RngStream(self.seed, _hash_labels(self.stream_id, *labels))


def as_stream(rng: Union[RngStream, int]) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(int(rng), 0)


def open_uniforms(gen: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Uniform draws on the open interval (0, 1)."""
    return np.maximum(gen.random(shape), _OPEN_FLOOR)


def gaussian_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Standard normals by inversion, one per open uniform."""
    return special.ndtri(u)
