"""
Gated pixel-array photon counting.

Post-selected pointer fields are integrated over the pixels of an
``n x n`` array, sampled into count frames with optional dark counts
and turned back into moment estimates.  Counts are stored row-major
with rows along y: ``counts[iy, ix]``.

Random streams are keyed by ``(seed, *stream, frame_index)`` through
:class:`numpy.random.SeedSequence` feeding a counter-based Philox
generator, so any frame can be regenerated independently of the order
in which frames are produced.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import InvalidArgumentError, NoSignalError, VanishingPostselectionError
from .pointer import NORM_EPSILON, PointerField

FRAME_FORMAT = "seqweak-frame/1"


@dataclass(frozen=True)
class DetectorConfig:
    """Geometry and noise of the pixel array.

    ``origin_offset`` is the pointer coordinate of the lower-left corner
    of pixel ``(0, 0)``; by default the array is centred on the origin.
    ``mask`` (optional, ``n x n`` bool) marks live pixels.
    """

    n_pixels: int = 32
    pixel_pitch: float = 0.25
    origin_offset: tuple | None = None
    dark_count_prob: float = 0.0
    n_gates: int = 0
    seed: int = 0
    mask: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.n_pixels) != self.n_pixels or self.n_pixels < 2:
            raise InvalidArgumentError("n_pixels must be an integer >= 2")
        if not (np.isfinite(self.pixel_pitch) and self.pixel_pitch > 0):
            raise InvalidArgumentError("pixel_pitch must be positive")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise InvalidArgumentError("dark_count_prob must lie in [0, 1)")
        if int(self.n_gates) != self.n_gates or self.n_gates < 0:
            raise InvalidArgumentError("n_gates must be a non-negative integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidArgumentError("seed must be a non-negative integer")
        object.__setattr__(self, "n_pixels", int(self.n_pixels))
        object.__setattr__(self, "n_gates", int(self.n_gates))
        object.__setattr__(self, "seed", int(self.seed))
        if self.origin_offset is None:
            half = -0.5 * self.n_pixels * self.pixel_pitch
            object.__setattr__(self, "origin_offset", (half, half))
        else:
            ox, oy = (float(v) for v in self.origin_offset)
            object.__setattr__(self, "origin_offset", (ox, oy))
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != (self.n_pixels, self.n_pixels):
                raise InvalidArgumentError("mask shape must match the pixel grid")
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)

    @property
    def alive(self) -> np.ndarray:
        if self.mask is None:
            return np.ones((self.n_pixels, self.n_pixels), dtype=bool)
        return self.mask

    @property
    def dark_level(self) -> float:
        """Expected dark counts per live pixel per frame."""
        return self.dark_count_prob * self.n_gates

    def edges(self, axis: int) -> np.ndarray:
        return self.origin_offset[axis] + self.pixel_pitch * np.arange(self.n_pixels + 1)

    def centers(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])


@dataclass(frozen=True)
class DetectionFrame:
    counts: np.ndarray
    config: DetectorConfig
    n_signal_photons: int | None = None
    frame_index: int = 0
    stream: tuple = ()

    def __post_init__(self):
        counts = np.asarray(self.counts)
        n = self.config.n_pixels
        if counts.shape != (n, n):
            raise InvalidArgumentError(f"counts shape {counts.shape} does not match {n}x{n}")
        if not np.issubdtype(counts.dtype, np.integer) or np.any(counts < 0):
            raise InvalidArgumentError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))


@dataclass(frozen=True)
class MomentEstimate:
    """Moments averaged over frames.  ``cov`` is the covariance matrix of
    the three point estimates (order: mean_x, mean_y, raw_xy)."""

    mean_x: float
    mean_y: float
    raw_xy: float
    mean_x_se: float
    mean_y_se: float
    raw_xy_se: float
    n_events: int
    n_frames: int = 1
    cov: np.ndarray | None = field(default=None, compare=False)


def pixel_probabilities(field: PointerField, config: DetectorConfig) -> tuple[np.ndarray, float]:
    """Probability of a post-selected photon landing in each pixel.

    Every pair of terms contributes ``conj(c_k) c_l S_kl`` times a
    separable normal density, so each pixel integral is a product of
    two normal-CDF differences.  Returns ``(grid, outside)`` where
    ``outside`` is the probability of missing the array (dead pixels
    count as misses).
    """
    norm = field.norm
    if not norm > NORM_EPSILON:
        raise VanishingPostselectionError(f"field norm {norm:.3e} is vanishing")
    w, mx, my = field.pair_tables()
    s = field.sigma
    ex, ey = config.edges(0), config.edges(1)
    px = np.diff(ndtr((ex[None, :] - mx.reshape(-1, 1)) / s), axis=1)
    py = np.diff(ndtr((ey[None, :] - my.reshape(-1, 1)) / s), axis=1)
    grid = np.real(np.einsum("p,pi,pj->ji", w.reshape(-1), px, py)) / norm
    grid = np.where(config.alive, np.clip(grid, 0.0, None), 0.0)
    return grid, max(0.0, 1.0 - float(grid.sum()))


def frame_rng(seed: int, frame_index: int = 0, stream=()) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed), *(int(s) for s in stream), int(frame_index)])
    return np.random.Generator(np.random.Philox(key))


def sample_frame(field: PointerField, config: DetectorConfig, n_signal_photons: int,
                 frame_index: int = 0, stream=(), probabilities=None) -> DetectionFrame:
    """Draw one frame: ``n_signal_photons`` multinomially distributed over
    the pixels (misses discarded) plus binomial dark counts over
    ``n_gates`` gates in each live pixel.

    ``probabilities`` may carry a precomputed ``pixel_probabilities``
    result when many frames share a field.
    """
    if int(n_signal_photons) != n_signal_photons or n_signal_photons < 0:
        raise InvalidArgumentError("n_signal_photons must be a non-negative integer")
    grid, outside = probabilities if probabilities is not None else pixel_probabilities(field, config)
    rng = frame_rng(config.seed, frame_index, stream)
    pvals = np.append(grid.ravel(), outside)
    pvals = pvals / pvals.sum()
    hits = rng.multinomial(int(n_signal_photons), pvals)[:-1].reshape(grid.shape)
    if config.dark_count_prob > 0 and config.n_gates > 0:
        dark = rng.binomial(config.n_gates, config.dark_count_prob, size=grid.shape)
        hits = hits + np.where(config.alive, dark, 0)
    return DetectionFrame(hits, config, int(n_signal_photons), int(frame_index), tuple(stream))


def sample_frames(field, config, n_signal_photons, n_frames, stream=()):
    probs = pixel_probabilities(field, config)
    return [sample_frame(field, config, n_signal_photons, i, stream, probabilities=probs)
            for i in range(n_frames)]


def subtract_background(frame: DetectionFrame) -> np.ndarray:
    """Remove the expected dark level from every live pixel.  Negative
    values are kept so the correction stays mean-unbiased."""
    cfg = frame.config
    return np.where(cfg.alive, frame.counts - cfg.dark_level, 0.0)


def grid_moments(weights: np.ndarray, config: DetectorConfig) -> tuple[float, float, float, float]:
    """Count-weighted pixel-centre moments ``(mean_x, mean_y, raw_xy, total)``."""
    total = float(weights.sum())
    if not total > 0:
        raise NoSignalError("no net counts after background subtraction")
    xc, yc = config.centers(0), config.centers(1)
    col = weights.sum(axis=0)
    row = weights.sum(axis=1)
    mean_x = float(col @ xc) / total
    mean_y = float(row @ yc) / total
    raw_xy = float(yc @ weights @ xc) / total
    return mean_x, mean_y, raw_xy, total


def frame_moments(frames) -> np.ndarray:
    """Per-frame ``(mean_x, mean_y, raw_xy)`` as an ``(n_frames, 3)`` array."""
    return np.array([grid_moments(subtract_background(f), f.config)[:3] for f in frames])


def bootstrap_means(samples: np.ndarray, n_boot: int = 1000, seed: int = 0) -> np.ndarray:
    """Means of ``n_boot`` resamples (with replacement) of the rows of
    ``samples``."""
    rng = np.random.default_rng(seed)
    n = samples.shape[0]
    idx = rng.integers(0, n, size=(n_boot, n))
    return samples[idx].mean(axis=1)


def estimate_moments(frames, method: str = "frames", n_boot: int = 1000,
                     boot_seed: int = 0) -> MomentEstimate:
    """Moments from repeated frames and their standard errors.

    The point estimate is the mean of the per-frame moments.  With
    ``method="frames"`` the error is the frame-to-frame standard
    deviation over ``sqrt(n_frames)``; ``method="bootstrap"`` resamples
    whole frames instead.  Errors are NaN for a single frame.
    """
    frames = list(frames)
    if not frames:
        raise InvalidArgumentError("at least one frame is required")
    if method not in ("frames", "bootstrap"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    per = frame_moments(frames)
    n = per.shape[0]
    point = per.mean(axis=0)
    if n < 2:
        cov = np.full((3, 3), np.nan)
    elif method == "frames":
        cov = np.cov(per, rowvar=False, ddof=1) / n
    else:
        cov = np.cov(bootstrap_means(per, n_boot, boot_seed), rowvar=False, ddof=1)
    se = np.sqrt(np.diag(cov))
    n_events = int(sum(int(f.counts.sum()) for f in frames))
    return MomentEstimate(*map(float, point), *map(float, se), n_events, n, cov)


def calibrate_origin(config: DetectorConfig, calibration_frames) -> DetectorConfig:
    """Shift ``origin_offset`` so that frames taken with the couplings
    switched off have their centroid at the pointer origin."""
    est = estimate_moments(calibration_frames)
    ox, oy = config.origin_offset
    return replace(config, origin_offset=(ox - est.mean_x, oy - est.mean_y))


def frame_to_dict(frame: DetectionFrame) -> dict:
    cfg = frame.config
    out = {
        "format": FRAME_FORMAT,
        "n_pixels": cfg.n_pixels,
        "pixel_pitch": cfg.pixel_pitch,
        "origin_offset": list(cfg.origin_offset),
        "dark_count_prob": cfg.dark_count_prob,
        "n_gates": cfg.n_gates,
        "seed": cfg.seed,
        "frame_index": frame.frame_index,
        "stream": list(frame.stream),
        "n_signal_photons": frame.n_signal_photons,
        "mask": None if cfg.mask is None else cfg.mask.astype(int).tolist(),
        "counts": frame.counts.tolist(),
    }
    return out


def frame_from_dict(data: dict) -> DetectionFrame:
    if data.get("format") != FRAME_FORMAT:
        raise InvalidArgumentError(f"not a {FRAME_FORMAT} document")
    mask = data.get("mask")
    cfg = DetectorConfig(
        n_pixels=data["n_pixels"],
        pixel_pitch=data["pixel_pitch"],
        origin_offset=tuple(data["origin_offset"]),
        dark_count_prob=data["dark_count_prob"],
        n_gates=data["n_gates"],
        seed=data["seed"],
        mask=None if mask is None else np.array(mask, dtype=bool),
    )
    return DetectionFrame(np.array(data["counts"], dtype=np.int64), cfg,
                          data.get("n_signal_photons"), data.get("frame_index", 0),
                          tuple(data.get("stream", ())))


def write_frame(frame: DetectionFrame, path) -> Path:
    """Write one frame as JSON; header keys come first in a fixed order and
    counts follow as one row-major line per pixel row."""
    path = Path(path)
    doc = frame_to_dict(frame)
    counts = doc.pop("counts")
    lines = ["{"]
    lines += [f"  {json.dumps(k)}: {json.dumps(v)}," for k, v in doc.items()]
    lines.append('  "counts": [')
    lines.append(",\n".join("    " + json.dumps(row) for row in counts))
    lines.append("  ]")
    lines.append("}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_frame(path) -> DetectionFrame:
    return frame_from_dict(json.loads(Path(path).read_text()))
