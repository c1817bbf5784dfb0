"""
First-order weak-measurement relations and their inversion.

To first order in ``g / sigma`` the post-selected pointer moments read

    <X>  = g_x Re<A>_w
    <Y>  = g_y Re<B>_w
    <XY> = g_x g_y / 2 * Re[<AB>_w + conj(<A>_w) <B>_w]   (sequential)
    <XY> = g_x g_y / 4 * Re[<AB + BA>_w + 2 conj(<A>_w) <B>_w]   (joint)

with ``B = Pi_V`` coupled first and ``A = Pi_psi`` second.  The exact
pointer model in :mod:`seqweak.pointer` is used to measure how far the
inverted moments sit from the analytic weak values.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InvalidArgumentError
from .pointer import Moments, couple_sequence, exact_moments, post_select
from .polarization import (
    PI_V,
    PolarizationState,
    WeakValue,
    joint_weak_value,
    linear_state,
    projector,
    sequential_weak_value,
    weak_value,
)

WEAKNESS_WARN_RATIO = 0.5
QUANTITIES = ("pi_psi_w", "pi_v_w", "seq_w")


class WeaknessWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CouplingConfig:
    g_x: float
    g_y: float
    sigma: float
    theta: float
    pre: PolarizationState
    post: PolarizationState

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma!r}")
        if self.weakness > WEAKNESS_WARN_RATIO:
            warnings.warn(
                f"coupling ratio g/sigma = {self.weakness:.3g} is outside the weak regime",
                WeaknessWarning,
                stacklevel=3,
            )

    @property
    def weakness(self) -> float:
        return max(abs(self.g_x), abs(self.g_y)) / self.sigma

    @property
    def pi_psi(self):
        return projector(linear_state(self.theta))

    def scaled(self, ratio: float) -> CouplingConfig:
        """Copy with both couplings rescaled so that ``weakness == ratio``;
        the ``g_x : g_y`` proportion is kept."""
        big = max(abs(self.g_x), abs(self.g_y))
        if big == 0:
            raise InvalidArgumentError("cannot rescale a configuration with no coupling")
        k = ratio * self.sigma / big
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WeaknessWarning)
            return CouplingConfig(self.g_x * k, self.g_y * k, self.sigma, self.theta,
                                  self.pre, self.post)


class AnalyticRefs(NamedTuple):
    pi_psi_w: float
    pi_v_w: float
    seq_w: float


@dataclass(frozen=True)
class WeakValueReport:
    """Weak values estimated from pointer moments.

    Standard errors are zero for exact moments and NaN when they could
    not be estimated.  ``assumes_real`` records that the inversion
    discards imaginary parts by construction.
    """

    pi_psi_w: float
    pi_v_w: float
    seq_w: float
    pi_psi_w_se: float = 0.0
    pi_v_w_se: float = 0.0
    seq_w_se: float = 0.0
    analytic_refs: AnalyticRefs | None = None
    assumes_real: bool = field(default=True)

    def values(self) -> np.ndarray:
        return np.array([self.pi_psi_w, self.pi_v_w, self.seq_w])

    def errors(self) -> np.ndarray:
        return np.array([self.pi_psi_w_se, self.pi_v_w_se, self.seq_w_se])


def analytic_weak_values(cfg: CouplingConfig) -> tuple[WeakValue, WeakValue, WeakValue]:
    """``(<Pi_psi>_w, <Pi_V>_w, <Pi_psi Pi_V>_w)`` for the configuration."""
    a = cfg.pi_psi
    return (
        weak_value(a, cfg.pre, cfg.post),
        weak_value(PI_V, cfg.pre, cfg.post),
        sequential_weak_value(PI_V, a, cfg.pre, cfg.post),
    )


def analytic_refs(cfg: CouplingConfig) -> AnalyticRefs:
    return AnalyticRefs(*(w.real for w in analytic_weak_values(cfg)))


def predict_mean(g: float, wv) -> float:
    return g * complex(wv).real


def xy_sequential(obs_first, obs_second, g_first, g_second, pre, post) -> float:
    """Sequential <XY> for arbitrary observables; ``obs_first`` drives the
    pointer displaced by ``g_first``."""
    a_w = weak_value(obs_second, pre, post).value
    b_w = weak_value(obs_first, pre, post).value
    ab_w = sequential_weak_value(obs_first, obs_second, pre, post).value
    return 0.5 * g_first * g_second * (ab_w + a_w.conjugate() * b_w).real


def xy_joint(obs_a, obs_b, g_a, g_b, pre, post, symmetrized: bool = True) -> float:
    a_w = weak_value(obs_a, pre, post).value
    b_w = weak_value(obs_b, pre, post).value
    pair = joint_weak_value(obs_a, obs_b, pre, post, symmetrized=symmetrized).value
    return 0.25 * g_a * g_b * (pair + 2.0 * a_w.conjugate() * b_w).real


def predict_xy_sequential(cfg: CouplingConfig) -> float:
    return xy_sequential(PI_V, cfg.pi_psi, cfg.g_y, cfg.g_x, cfg.pre, cfg.post)


def predict_xy_joint(cfg: CouplingConfig, symmetrized: bool = True) -> float:
    """Simultaneous-coupling <XY>.  ``symmetrized=False`` uses the
    literal ``<2 AB>_w`` in place of the anticommutator."""
    return xy_joint(cfg.pi_psi, PI_V, cfg.g_x, cfg.g_y, cfg.pre, cfg.post, symmetrized)


def predict_moments(cfg: CouplingConfig) -> Moments:
    """First-order moments (post-selection probability to zeroth order)."""
    psi_w, v_w, _ = analytic_weak_values(cfg)
    prob = abs(cfg.post.overlap(cfg.pre)) ** 2
    return Moments(predict_mean(cfg.g_x, psi_w), predict_mean(cfg.g_y, v_w),
                   predict_xy_sequential(cfg), prob)


def _require_linear(states):
    for s in states:
        if not s.is_linear:
            raise InvalidArgumentError(
                "moment inversion assumes real weak values; got an elliptical state"
            )


def invert_moments(moments, g_x: float, g_y: float, states=(),
                   analytic: AnalyticRefs | None = None) -> WeakValueReport:
    """Invert pointer moments to (Re<Pi_psi>_w, Re<Pi_V>_w, Re<Pi_psi Pi_V>_w).

    ``moments`` is either exact :class:`~seqweak.pointer.Moments` or a
    :class:`~seqweak.detector.MomentEstimate`; with the latter, standard
    errors are propagated to first order using the covariance of the
    three estimated moments.  Pass the pre/post states in ``states`` to
    have elliptical polarizations rejected.
    """
    if g_x == 0 or g_y == 0:
        raise InvalidArgumentError("both couplings must be non-zero to invert moments")
    _require_linear(states)
    mx, my, xy = moments.mean_x, moments.mean_y, moments.raw_xy
    a = mx / g_x
    b = my / g_y
    seq = 2.0 * xy / (g_x * g_y) - a * b
    cov = getattr(moments, "cov", None)
    if cov is None:
        se = (0.0, 0.0, 0.0)
    else:
        # rows: d(a, b, seq) / d(mx, my, xy)
        jac = np.array([
            [1.0 / g_x, 0.0, 0.0],
            [0.0, 1.0 / g_y, 0.0],
            [-my / (g_x * g_y), -mx / (g_x * g_y), 2.0 / (g_x * g_y)],
        ])
        var = np.diag(jac @ np.asarray(cov) @ jac.T)
        se = tuple(float(np.sqrt(v)) if v >= 0 else math.nan for v in var)
    return WeakValueReport(a, b, seq, *se, analytic_refs=analytic)


def exact_report(cfg: CouplingConfig) -> tuple[WeakValueReport, Moments]:
    """Run the exact pointer model for ``cfg`` and invert its moments."""
    state = couple_sequence(cfg.pre, cfg.theta, cfg.g_x, cfg.g_y, cfg.sigma)
    moments = exact_moments(post_select(state, cfg.post))
    report = invert_moments(moments, cfg.g_x, cfg.g_y, states=(cfg.pre, cfg.post),
                            analytic=analytic_refs(cfg))
    return report, moments


@dataclass
class ScanResult:
    ratios: np.ndarray
    deviations: np.ndarray  # (n_ratios, 3), columns ordered as QUANTITIES
    slopes: dict
    second_order: dict
    degenerate: dict

    def rows(self):
        for r, d in zip(self.ratios, self.deviations):
            yield (float(r), *map(float, d))


def approximation_error_scan(cfg: CouplingConfig, ratios, c2_floor: float = 0.02,
                             slope_window=(1.7, 2.3), check: bool = True) -> ScanResult:
    """Absolute error of exact-model inversion against analytic weak
    values for each coupling ratio ``g / sigma``.

    The log-log slope is fitted per quantity over the positive ratios.
    A quantity counts as degenerate when its second-order coefficient,
    estimated as ``deviation / ratio**2`` at the smallest positive ratio,
    is below ``c2_floor``; this covers both relations that are exact and
    points where the coefficient passes through zero.  With ``check``
    set, a non-degenerate slope outside ``slope_window`` raises
    :class:`ConvergenceError`.
    """
    ratios = np.asarray(ratios, dtype=float)
    if ratios.ndim != 1 or ratios.size == 0 or np.any(ratios < 0) or not np.all(np.isfinite(ratios)):
        raise InvalidArgumentError("ratios must be a non-empty list of non-negative numbers")
    refs = np.array(analytic_refs(cfg))
    devs = np.zeros((ratios.size, 3))
    for i, r in enumerate(ratios):
        if r == 0:
            continue
        report, _ = exact_report(cfg.scaled(r))
        devs[i] = np.abs(report.values() - refs)

    positive = ratios > 0
    slopes, c2, degenerate = {}, {}, {}
    r_min = ratios[positive].min() if positive.any() else None
    for j, name in enumerate(QUANTITIES):
        if r_min is None:
            slopes[name], c2[name], degenerate[name] = None, 0.0, True
            continue
        c2[name] = float(devs[ratios == r_min, j][0] / r_min ** 2)
        degenerate[name] = c2[name] < c2_floor
        d = devs[positive, j]
        if degenerate[name] or positive.sum() < 2 or np.any(d <= 0):
            slopes[name] = None
            continue
        slopes[name] = float(np.polyfit(np.log(ratios[positive]), np.log(d), 1)[0])
        if check and not slope_window[0] <= slopes[name] <= slope_window[1]:
            raise ConvergenceError(
                f"{name}: approximation slope {slopes[name]:.3f} outside {slope_window}"
            )
    return ScanResult(ratios, devs, slopes, c2, degenerate)
