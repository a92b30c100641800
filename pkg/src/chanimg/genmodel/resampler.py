"""Nearest-condition empirical resampler.

A deliberately model-free backend: "sampling" an image under a condition
returns a stored training image whose condition is among the k nearest in
normalized condition space, drawn with replacement.  Because its outputs
are real encoded images, any distributional mismatch after decoding
isolates codec problems from generative-model quality.
"""

import numpy as np

from ..errors import DataError
from ..rng import substream

__all__ = ["EmpiricalResampler"]


class EmpiricalResampler:
    """k-nearest-condition resampling over an encoded dataset."""

    def __init__(self, images, conditions, k: int = 50):
        self.images = np.asarray(images)
        self.conditions = np.asarray(conditions, dtype=np.float64)
        if len(self.images) == 0:
            raise DataError("resampler needs a non-empty dataset")
        if len(self.images) != len(self.conditions):
            raise DataError("images and conditions must pair up")
        self.k = int(min(k, len(self.images)))
        if self.k < 1:
            raise DataError("k must be >= 1")
        self.cond_min = self.conditions.min(axis=0)
        self.cond_max = self.conditions.max(axis=0)
        span = self.cond_max - self.cond_min
        self._span = np.where(span > 0, span, 1.0)
        self._norm = (self.conditions - self.cond_min) / self._span

    @classmethod
    def from_links(cls, links, codec, rng, k: int = 50) -> "EmpiricalResampler":
        """Encode a link dataset once and resample from it."""
        images = np.stack([codec.encode_link(lk, rng) for lk in links])
        conds = np.array([[lk.condition().dist2d, lk.condition().height] for lk in links])
        return cls(images, conds, k)

    def _neighbors(self, cond_pair) -> np.ndarray:
        q = (np.asarray(cond_pair, dtype=np.float64) - self.cond_min) / self._span
        d2 = np.sum((self._norm - q) ** 2, axis=1)
        # lexsort gives a deterministic order under distance ties
        order = np.lexsort((np.arange(len(d2)), d2))
        return order[: self.k]

    def sample(self, cond, n: int, seed: int) -> np.ndarray:
        """n stored images resampled near the condition(s).

        cond is one (dist2d, height) pair, or an (n, 2) array pairing one
        condition per output image.
        """
        if n == 0:
            return self.images[:0].copy()
        cond = np.asarray(cond, dtype=np.float64)
        rng = substream(seed, "resampler")
        if cond.ndim == 1:
            nb = self._neighbors(cond)
            picks = nb[rng.integers(self.k, size=n)]
        else:
            if cond.shape != (n, 2):
                raise DataError("cond must be one pair or an (n, 2) array")
            picks = np.empty(n, dtype=int)
            for i in range(n):
                nb = self._neighbors(cond[i])
                picks[i] = nb[rng.integers(self.k)]
        return self.images[picks].copy()
