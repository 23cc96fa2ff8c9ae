"""Monotone piecewise-linear reparametrizations of a parameter interval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class TimeChange:
    """Increasing PL map sending ``x[k]`` to ``y[k]``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.shape != y.shape or x.size < 2:
            raise DomainError("time change needs matching arrays of length >= 2")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise DomainError("time change must be strictly increasing")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def identity(cls, t0: float, t1: float) -> "TimeChange":
        return cls([t0, t1], [t0, t1])

    @classmethod
    def from_slopes(cls, x, slopes, y0: float | None = None) -> "TimeChange":
        """Map starting at ``y0`` (default ``x[0]``) with the given slope per piece."""
        x = np.asarray(x, dtype=float)
        y0 = x[0] if y0 is None else y0
        return cls(x, np.r_[y0, y0 + np.cumsum(np.diff(x) * np.asarray(slopes, dtype=float))])

    def __call__(self, t):
        return np.interp(t, self.x, self.y)

    def inverse(self) -> "TimeChange":
        return TimeChange(self.y, self.x)

    def compose(self, inner: "TimeChange") -> "TimeChange":
        """``self`` after ``inner``: ``x -> self(inner(x))``."""
        pts = np.union1d(inner.x, inner.inverse()(np.clip(self.x, inner.y[0], inner.y[-1])))
        return TimeChange(pts, self(inner(pts)))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.x)

    @property
    def image_length(self) -> float:
        return float(self.y[-1] - self.y[0])

    def as_dict(self) -> dict:
        return {"kind": "timechange", "breakpoints": self.x.tolist(), "values": self.y.tolist()}
