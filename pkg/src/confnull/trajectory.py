"""Piecewise-linear trajectories of spectral states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import RangeError, ShapeError
from .spectral import SpectralState


def interp_weights(nodes: np.ndarray, query) -> tuple[np.ndarray, np.ndarray]:
    """Left index and fraction for linear interpolation of ``query`` on ``nodes``."""
    query = np.asarray(query, dtype=float)
    slack = 1e-12 * max(1.0, abs(nodes[-1]))
    if np.any(query < nodes[0] - slack) or np.any(query > nodes[-1] + slack):
        raise RangeError(f"time outside trajectory span [{nodes[0]}, {nodes[-1]}]")
    q = np.clip(query, nodes[0], nodes[-1])
    idx = np.clip(np.searchsorted(nodes, q, side="right") - 1, 0, nodes.size - 2)
    frac = (q - nodes[idx]) / (nodes[idx + 1] - nodes[idx])
    return idx.astype(np.int64), frac


@dataclass(frozen=True)
class Trajectory:
    """States (``(K, N)``) at increasing node times (``(K,)``)."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or times.ndim != 1 or states.shape[0] != times.size:
            raise ShapeError("trajectory needs times (K,) and states (K, N)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def modes(self) -> int:
        return self.states.shape[1]

    @property
    def final(self) -> SpectralState:
        return SpectralState(self.states[-1])

    @property
    def initial(self) -> SpectralState:
        return SpectralState(self.states[0])

    def at(self, t) -> np.ndarray:
        """Linearly interpolated coefficients; shape ``t.shape + (N,)``."""
        idx, frac = interp_weights(self.times, t)
        return _kernels.interp_rows(self.states, idx, frac)

    def state_at(self, t: float) -> SpectralState:
        return SpectralState(self.at(float(t)))

    def sup_distance(self, other: Trajectory) -> float:
        """``max_k ||x(t_k) - y(t_k)||`` over shared nodes."""
        if other.states.shape != self.states.shape:
            raise ShapeError("trajectories differ in shape")
        return float(np.max(np.linalg.norm(self.states - other.states, axis=1)))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.states, axis=1)))

    @classmethod
    def constant(cls, times, state) -> Trajectory:
        coeffs = state.coeffs if isinstance(state, SpectralState) else np.asarray(state, dtype=float)
        return cls(times, np.tile(coeffs, (len(times), 1)))
