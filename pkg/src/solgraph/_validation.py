"""Argument checks shared by the estimator and the command-line front end."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .exhaustion import MODES as EXHAUSTION_MODES

SOLVE_MODES = ("dirichlet",) + EXHAUSTION_MODES


def check_real(name: str, value, *, positive: bool = False, nonnegative: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {v}")
    if positive and not v > 0:
        raise ValueError(f"{name} must be positive, got {v}")
    if nonnegative and v < 0:
        raise ValueError(f"{name} must be non-negative, got {v}")
    return v


def check_H(H, allow_zero: bool = False) -> float:
    return check_real("H", H, nonnegative=allow_zero, positive=not allow_zero)


def check_points(X) -> np.ndarray:
    """An (m, 2) float array of upper half-plane points."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"points must have shape (m, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    if np.any(arr[:, 1] <= 0):
        raise ValueError("points must lie in the upper half-plane (y > 0)")
    return arr


def check_n_values(n_values: Sequence[float]) -> list[float]:
    ns = [check_real("n", v, positive=True) for v in n_values]
    if not ns:
        raise ValueError("the n list is empty")
    if any(b <= a for a, b in zip(ns[:-1], ns[1:])):
        raise ValueError("the n list must be strictly increasing")
    return ns


def check_mode(mode: str, allowed: Sequence[str] = SOLVE_MODES) -> str:
    if mode not in allowed:
        raise ValueError(f"mode must be one of {tuple(allowed)}, got {mode!r}")
    return mode


def parse_n_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"--n expects a comma-separated list of numbers, got {text!r}") from None
    return check_n_values(values)
