"""Estimate-vs-truth evaluation: circle fit, RMSE metrics, event counters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .frames import wrap_angle
from .tracking import KinematicState


class MetricsError(ValueError):
    pass


class Collinear(MetricsError):
    pass


class NoOverlap(MetricsError):
    pass


def circle_fit(points: Sequence[Sequence[float]]) -> tuple[tuple[float, float], float]:
    """Algebraic (Kasa) least-squares circle through planar points.

    Minimizes sum (x^2 + y^2 + D x + E y + F)^2; returns ((cx, cy), radius).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise MetricsError("need at least 3 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    a = np.column_stack([x, y, np.ones_like(x)])
    b = -(x**2 + y**2)
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        raise Collinear("points are collinear; no unique circle")
    dd, ee, ff = sol
    cx, cy = -dd / 2.0, -ee / 2.0
    rad2 = cx * cx + cy * cy - ff
    if rad2 <= 0:
        raise Collinear("degenerate circle fit")
    return (float(cx), float(cy)), float(math.sqrt(rad2))


@dataclass(frozen=True)
class TruthSeries:
    """Ground-truth trajectory sampled on the simulation grid."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    psi: np.ndarray          # continuous (unwrapped)
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    r: np.ndarray
    fill: np.ndarray


@dataclass(frozen=True)
class FrameAlignment:
    """Maps NED truth into a pipeline segment's recovered world frame.

    ``rotation`` is the camera-to-recovered-world basis composed with the
    world-to-camera extrinsics; ``origin_xyz`` is the truth position at the
    segment's first detection.  The recovered planar basis may be a
    reflection of the truth basis, which flips sway and yaw rate; the sign
    is the determinant of the planar block.
    """

    rotation: np.ndarray
    origin_xyz: np.ndarray

    @property
    def planar_sign(self) -> float:
        m = self.rotation[:2, :2]
        return 1.0 if (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) >= 0 else -1.0

    @staticmethod
    def identity() -> "FrameAlignment":
        return FrameAlignment(np.eye(3), np.zeros(3))


def _interp_truth(truth: TruthSeries, times: np.ndarray) -> dict[str, np.ndarray]:
    return {
        name: np.interp(times, truth.t, getattr(truth, name))
        for name in ("x", "y", "z", "psi", "u", "v", "r")
    }


def truth_in_estimate_frame(
    truth: TruthSeries, times: np.ndarray, align: FrameAlignment
) -> dict[str, np.ndarray]:
    """Truth kinematics at ``times``, expressed in the estimate's frame.

    Surge is invariant under the rigid planar change of basis; sway and yaw
    rate pick up the handedness sign; yaw maps through the planar block.
    """
    s = _interp_truth(truth, times)
    rot = align.rotation
    p = np.column_stack([s["x"], s["y"], s["z"]]) - align.origin_xyz
    pw = p @ rot.T
    bx = np.column_stack([np.cos(s["psi"]), np.sin(s["psi"]), np.zeros_like(s["psi"])])
    bw = bx @ rot.T
    psi = np.arctan2(bw[:, 1], bw[:, 0])
    sign = align.planar_sign
    return {
        "x": pw[:, 0],
        "y": pw[:, 1],
        "psi": psi,
        "u": s["u"],
        "v": sign * s["v"],
        "r": sign * s["r"],
    }


def _segment_slices(times: np.ndarray, rate: float) -> list[slice]:
    if times.size == 0:
        return []
    gaps = np.where(np.diff(times) > 1.5 / rate)[0]
    starts = [0] + [int(g) + 1 for g in gaps]
    ends = [int(g) + 1 for g in gaps] + [times.size]
    return [slice(a, b) for a, b in zip(starts, ends)]


def residuals(
    truth: TruthSeries,
    estimates: Sequence[KinematicState],
    alignment: FrameAlignment | None = None,
    smoothing_window: int = 12,
    output_rate: float = 30.0,
) -> dict[str, np.ndarray]:
    """Per-sample estimate-minus-truth residuals for one pipeline segment.

    Samples within one smoothing window of either segment edge are
    excluded.  Velocity channels are compared against truth sampled one
    filter group delay ((window-1)/2 samples) earlier, since the trailing
    moving average lags by that amount.
    """
    align = alignment or FrameAlignment.identity()
    est = [e for e in estimates]
    if not est:
        raise NoOverlap("no estimates")
    t = np.array([e.timestamp for e in est])
    keep = np.zeros(t.size, dtype=bool)
    for sl in _segment_slices(t, output_rate):
        n = sl.stop - sl.start
        if n > 2 * smoothing_window:
            keep[sl.start + smoothing_window : sl.stop - smoothing_window] = True
    t = t[keep]
    if t.size == 0 or t[0] > truth.t[-1] or t[-1] < truth.t[0]:
        raise NoOverlap("estimate and truth time ranges do not overlap")
    est = [e for e, k in zip(est, keep) if k]

    pose_truth = truth_in_estimate_frame(truth, t, align)
    lag = (smoothing_window - 1) / 2.0 / output_rate
    vel_truth = truth_in_estimate_frame(truth, t - lag, align)

    ex = np.array([e.x for e in est]) - pose_truth["x"]
    ey = np.array([e.y for e in est]) - pose_truth["y"]
    epsi = np.array(
        [wrap_angle(e.psi - p) for e, p in zip(est, pose_truth["psi"])]
    )
    eu = np.array([e.u for e in est]) - vel_truth["u"]
    ev = np.array([e.v for e in est]) - vel_truth["v"]
    er = np.array([e.r for e in est]) - vel_truth["r"]
    return {"t": t, "x": ex, "y": ey, "psi": epsi, "u": eu, "v": ev, "r": er}


def metrics_from_residuals(res: dict[str, np.ndarray]) -> dict[str, float]:
    out = {
        "rmse_xy": float(np.sqrt(np.mean(res["x"] ** 2 + res["y"] ** 2))),
        "rmse_psi": float(np.sqrt(np.mean(res["psi"] ** 2))),
        "rmse_u": float(np.sqrt(np.mean(res["u"] ** 2))),
        "rmse_v": float(np.sqrt(np.mean(res["v"] ** 2))),
        "rmse_r": float(np.sqrt(np.mean(res["r"] ** 2))),
        "mean_v": float(np.mean(res["v"])),
        "n_compared": float(res["t"].size),
    }
    return out


def compute_metrics(
    truth: TruthSeries,
    estimates: Sequence[KinematicState],
    alignment: FrameAlignment | None = None,
    smoothing_window: int = 12,
    output_rate: float = 30.0,
    n_frames: int | None = None,
    n_detections: int | None = None,
) -> dict[str, float]:
    """RMSE metrics for one estimate segment against ground truth."""
    res = residuals(truth, estimates, alignment, smoothing_window, output_rate)
    out = metrics_from_residuals(res)
    if n_frames:
        out["detection_coverage"] = (n_detections or 0) / n_frames
    return out


def path_length(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(np.hypot(np.diff(x), np.diff(y))))


def count_sign_changes(values: Sequence[float], hysteresis: float) -> int:
    """Sign changes that swing past +/-hysteresis (small wiggles ignored)."""
    state = 0
    changes = 0
    for v in values:
        if v > hysteresis:
            if state == -1:
                changes += 1
            state = 1
        elif v < -hysteresis:
            if state == 1:
                changes += 1
            state = -1
    return changes


def count_reversals(depth: Sequence[float], min_excursion: float = 0.05) -> int:
    """Direction reversals of a depth profile, ignoring excursions smaller
    than ``min_excursion``."""
    d = np.asarray(depth, dtype=float)
    if d.size < 3:
        return 0
    reversals = 0
    direction = 0
    anchor = d[0]
    for v in d[1:]:
        delta = v - anchor
        if direction == 0:
            if abs(delta) >= min_excursion:
                direction = 1 if delta > 0 else -1
                anchor = v
        elif direction * delta >= 0:
            anchor = max(anchor, v) if direction > 0 else min(anchor, v)
        elif abs(delta) >= min_excursion:
            reversals += 1
            direction = -direction
            anchor = v
    return reversals
