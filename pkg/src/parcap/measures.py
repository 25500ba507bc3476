"""Weighted point clouds standing in for nonnegative Radon measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DiscreteMeasure"]


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nodes w_i with masses m_i >= 0; the numerical face of a measure."""

    xs: np.ndarray  # (M, N)
    ts: np.ndarray  # (M,)
    masses: np.ndarray  # (M,)

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        ts = np.asarray(self.ts, dtype=float).reshape(-1)
        ms = np.asarray(self.masses, dtype=float).reshape(-1)
        if xs.shape[0] != ts.shape[0] or ts.shape[0] != ms.shape[0]:
            raise ValueError(
                f"inconsistent lengths: {xs.shape[0]} nodes, {ts.shape[0]} times, "
                f"{ms.shape[0]} masses"
            )
        if np.any(ms < 0):
            raise ValueError("masses must be nonnegative")
        if not np.all(np.isfinite(ms)):
            raise ValueError("masses must be finite")
        for a in (xs, ts, ms):
            a.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "masses", ms)

    def __len__(self) -> int:
        return self.ts.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @staticmethod
    def empty(dim: int) -> "DiscreteMeasure":
        return DiscreteMeasure(
            np.zeros((0, dim)), np.zeros(0), np.zeros(0)
        )
