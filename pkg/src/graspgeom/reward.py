"""Shaped lifting reward:

    r = c1 / (|h_bar - dh| + eps_h) + c2 * [dh >= h_bar] + c3 * r_sdf
    r_sdf = 1 / (d_t + eps_sdf),  d_t = sum_i max(d_i, 0)

Defaults: c1 = 0.5, c2 = 5000, c3 = 1, eps_h = 0.02 m, eps_sdf = 0.025 m,
h_bar = 0.2 m. Negative fingertip distances (penetration) are clamped to
zero inside d_t so the reward stays bounded; set clamp_penetration=False to
study the raw signed sum. Success is dh >= h_bar, the same threshold that
triggers the c2 bonus. All functions are pure.
"""

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class RewardConfig:
    c1: float = 0.5
    c2: float = 5000.0
    c3: float = 1.0
    eps_h: float = 0.02    # m
    eps_sdf: float = 0.025  # m
    h_bar: float = 0.2     # m, target lift height
    clamp_penetration: bool = True

    def __post_init__(self):
        if self.eps_h <= 0 or self.eps_sdf <= 0 or self.h_bar <= 0:
            raise ValueError("eps_h, eps_sdf, and h_bar must be positive")


@dataclass(eq=False)
class StepSignal:
    """One environment step: lift height and the 5 fingertip distances."""

    delta_h: float
    fingertip_d: np.ndarray  # (5,) m

    def __post_init__(self):
        d = np.asarray(self.fingertip_d, dtype=np.float64).reshape(-1)
        if d.shape != (5,):
            raise ValueError(f"fingertip_d must have 5 entries, got {d.shape}")
        if not (np.isfinite(self.delta_h) and np.all(np.isfinite(d))):
            raise ValueError("step signal contains non-finite values")
        d.flags.writeable = False
        object.__setattr__(self, "fingertip_d", d)
        object.__setattr__(self, "delta_h", float(self.delta_h))


def sdf_reward(fingertip_d, eps_sdf: float = 0.025,
               clamp_penetration: bool = True) -> float:
    """Contact-seeking term 1 / (d_t + eps_sdf), strictly positive and
    bounded above by 1 / eps_sdf."""
    d = np.asarray(fingertip_d, dtype=np.float64)
    d_t = float(np.maximum(d, 0.0).sum()) if clamp_penetration else float(d.sum())
    return 1.0 / (d_t + eps_sdf)


def lift_reward(delta_h: float, config: RewardConfig = RewardConfig()) -> float:
    """Height-tracking term plus the one-time bonus at the target height."""
    r = config.c1 / (abs(config.h_bar - delta_h) + config.eps_h)
    if delta_h >= config.h_bar:
        r += config.c2
    return r


def total_reward(signal: StepSignal, config: RewardConfig = RewardConfig()) -> float:
    return lift_reward(signal.delta_h, config) + config.c3 * sdf_reward(
        signal.fingertip_d, config.eps_sdf, config.clamp_penetration)


def com_shaping_reward(fingertip_pos, com_world, eps_sdf: float = 0.025) -> float:
    """Naive ablation: distances to the center of mass instead of the surface."""
    tips = np.asarray(fingertip_pos, dtype=np.float64).reshape(-1, 3)
    com = np.asarray(com_world, dtype=np.float64).reshape(3)
    d_t = float(np.linalg.norm(tips - com, axis=1).sum())
    return 1.0 / (d_t + eps_sdf)


def is_success(delta_h: float, h_bar: float = 0.2) -> bool:
    """Episode success: the object was raised by at least h_bar (inclusive)."""
    return bool(delta_h >= h_bar)


class RewardBatch(NamedTuple):
    r_sdf: np.ndarray
    lift: np.ndarray
    total: np.ndarray
    success: np.ndarray


def reward_batch(delta_h, fingertip_d, config: RewardConfig = RewardConfig()) -> RewardBatch:
    """Vectorized rewards for n environments: delta_h (n,), fingertip_d (n, 5)."""
    dh = np.asarray(delta_h, dtype=np.float64).reshape(-1)
    d = np.asarray(fingertip_d, dtype=np.float64).reshape(-1, 5)
    if len(d) != len(dh):
        raise ValueError(f"batch length mismatch: {len(dh)} heights, {len(d)} distance rows")
    d_t = np.maximum(d, 0.0).sum(axis=1) if config.clamp_penetration else d.sum(axis=1)
    r_sdf = 1.0 / (d_t + config.eps_sdf)
    success = dh >= config.h_bar
    lift = config.c1 / (np.abs(config.h_bar - dh) + config.eps_h) + config.c2 * success
    total = lift + config.c3 * r_sdf
    return RewardBatch(r_sdf=r_sdf, lift=lift, total=total, success=success)


# ---------------------------------------------------------------------------
# reward traces (CSV rows: step, delta_h, d1..d5)
# ---------------------------------------------------------------------------

TRACE_FIELDS = ("step", "delta_h", "d1", "d2", "d3", "d4", "d5")
TRACE_OUT_FIELDS = TRACE_FIELDS + ("r_sdf", "lift", "total", "success")


def annotate_trace(lines, config: RewardConfig = RewardConfig()):
    """Evaluate a reward trace, appending r_sdf, lift, total, success columns.

    Returns (output_lines, errors) where errors is a list of
    (line_number, message); malformed rows are skipped, valid rows keep their
    order. A header row is recognized and echoed with the new columns.
    """
    out = []
    errors = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        cells = next(csv.reader(io.StringIO(line)))
        cells = [c.strip() for c in cells]
        if lineno == 1 and cells[:2] == ["step", "delta_h"]:
            out.append(",".join(TRACE_OUT_FIELDS))
            continue
        if len(cells) != len(TRACE_FIELDS):
            errors.append((lineno, f"expected {len(TRACE_FIELDS)} fields "
                                   f"(step, delta_h, d1..d5), got {len(cells)}"))
            continue
        try:
            step = cells[0]
            dh = float(cells[1])
            d = np.array([float(c) for c in cells[2:7]])
        except ValueError as exc:
            errors.append((lineno, f"bad numeric value: {exc}"))
            continue
        if not (np.isfinite(dh) and np.all(np.isfinite(d))):
            errors.append((lineno, "non-finite value"))
            continue
        r = sdf_reward(d, config.eps_sdf, config.clamp_penetration)
        lift = lift_reward(dh, config)
        total = lift + config.c3 * r
        ok = is_success(dh, config.h_bar)
        out.append(",".join([step, repr(dh)] + [repr(float(v)) for v in d]
                            + [repr(r), repr(lift), repr(total), str(int(ok))]))
    return out, errors
