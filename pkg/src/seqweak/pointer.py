"""
Exact evolution of polarization (x) two transverse Gaussian pointers.

The photon state is kept as a finite list of branches, each a Jones
vector attached to a displaced copy of the unperturbed transverse mode
``G(x, y) = F(x) F(y)`` with

    F(z) = (2 pi sigma^2)^(-1/4) exp(-z^2 / (4 sigma^2)),

so that ``|F|^2`` is a normal density of standard deviation ``sigma``.
Couplings ``exp(-i g Pi (x) P)`` act exactly: the ``Pi = 1`` component
of each branch is displaced by ``g``, the ``Pi = 0`` component stays.
No expansion in ``g / sigma`` is made anywhere in this module.

All pointer integrals reduce to the 1D identity

    int F(z - a) F(z - b) dz = exp(-(a - b)^2 / (8 sigma^2))

whose integrand is that overlap times a normal density centred at
``(a + b) / 2`` with standard deviation ``sigma``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    InvalidArgumentError,
    UndefinedCoherenceError,
    VanishingPostselectionError,
)
from .polarization import PolarizationState, linear_state

NORM_EPSILON = 1e-14
MERGE_TOLERANCE = 1e-12
# components below this fraction of the largest amplitude are roundoff
PRUNE_RELATIVE = 1e-15


def overlap_1d(a, b, sigma):
    """Overlap ``<F_a|F_b>`` of two displaced pointer modes (broadcasts)."""
    d = np.subtract(a, b)
    return np.exp(-d * d / (8.0 * sigma * sigma))


def _merge(centers, amps, sigma):
    """Sum amplitudes of entries whose centres coincide within tolerance."""
    tol = MERGE_TOLERANCE * sigma
    out_c, out_a = [], []
    for c, a in zip(centers, amps):
        for k, oc in enumerate(out_c):
            if abs(oc[0] - c[0]) <= tol and abs(oc[1] - c[1]) <= tol:
                out_a[k] = out_a[k] + a
                break
        else:
            out_c.append(c)
            out_a.append(a)
    return np.array(out_c, dtype=float).reshape(-1, 2), np.array(out_a)


class GaussianTerm(NamedTuple):
    amplitude: complex
    center_x: float
    center_y: float


class Branch(NamedTuple):
    polarization: str
    amplitude: complex
    center_x: float
    center_y: float


@dataclass(frozen=True)
class Moments:
    """Post-selected pointer moments.

    ``raw_xy`` is the raw product moment <XY> about the unshifted-beam
    origin, not the mean-subtracted covariance.
    """

    mean_x: float
    mean_y: float
    raw_xy: float
    postselect_prob: float = 1.0

    def __post_init__(self):
        if not -1e-12 <= self.postselect_prob <= 1.0 + 1e-10:
            raise InvalidArgumentError(
                f"postselect_prob {self.postselect_prob} outside [0, 1]"
            )


@dataclass(frozen=True)
class PointerField:
    """Unnormalized post-selected transverse wavefunction
    ``sum_k c_k G(x - a_k, y - b_k)``."""

    terms: tuple
    sigma: float
    norm_cache: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")
        terms = tuple(GaussianTerm(complex(a), float(x), float(y)) for a, x, y in self.terms)
        for t in terms:
            if not (np.isfinite(t.amplitude) and np.isfinite(t.center_x) and np.isfinite(t.center_y)):
                raise InvalidArgumentError(f"non-finite Gaussian term {t}")
        object.__setattr__(self, "terms", terms)
        norm = self._bilinear(np.ones(len(terms))[:, None] * np.ones(len(terms)))
        if self.norm_cache is not None and abs(self.norm_cache - norm) > 1e-10 * max(norm, 1e-300):
            raise InvalidArgumentError("norm_cache disagrees with the closed-form norm")
        object.__setattr__(self, "norm_cache", norm)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([t.amplitude for t in self.terms], dtype=complex)

    @property
    def centers(self) -> np.ndarray:
        return np.array([(t.center_x, t.center_y) for t in self.terms], dtype=float).reshape(-1, 2)

    @property
    def norm(self) -> float:
        return self.norm_cache

    def pair_tables(self):
        """Per term pair (k, l): weight ``conj(c_k) c_l S_kl`` and the
        midpoint centres of the product Gaussian."""
        c = self.amplitudes
        xy = self.centers
        sx = overlap_1d(xy[:, None, 0], xy[None, :, 0], self.sigma)
        sy = overlap_1d(xy[:, None, 1], xy[None, :, 1], self.sigma)
        w = np.conj(c)[:, None] * c[None, :] * sx * sy
        mx = 0.5 * (xy[:, None, 0] + xy[None, :, 0])
        my = 0.5 * (xy[:, None, 1] + xy[None, :, 1])
        return w, mx, my

    def _bilinear(self, factor) -> float:
        if not self.terms:
            return 0.0
        w, _, _ = self.pair_tables()
        return float(np.real(np.sum(w * factor)))

    def wavefunction(self, x, y):
        x = np.asarray(x, dtype=float)[..., None]
        y = np.asarray(y, dtype=float)[..., None]
        xy = self.centers
        s2 = self.sigma ** 2
        g = np.exp(-((x - xy[:, 0]) ** 2 + (y - xy[:, 1]) ** 2) / (4 * s2)) / np.sqrt(2 * np.pi * s2)
        return np.sum(self.amplitudes * g, axis=-1)

    def density(self, x, y):
        """Unnormalized detection density ``|psi(x, y)|^2``."""
        return np.abs(self.wavefunction(x, y)) ** 2


@dataclass(frozen=True)
class CoupledState:
    """Polarization-pointer state as branches of Jones vectors on
    displaced modes.  ``initial`` remembers the pre-selected state."""

    centers: np.ndarray
    jones: np.ndarray
    sigma: float
    initial: PolarizationState

    @property
    def branches(self) -> list[Branch]:
        out = []
        for (cx, cy), vec in zip(self.centers, self.jones):
            for label, amp in zip("HV", vec):
                if amp != 0:
                    out.append(Branch(label, complex(amp), float(cx), float(cy)))
        return out

    def overlap_matrix(self) -> np.ndarray:
        c = self.centers
        return (overlap_1d(c[:, None, 0], c[None, :, 0], self.sigma)
                * overlap_1d(c[:, None, 1], c[None, :, 1], self.sigma))

    def reduced_polarization(self) -> np.ndarray:
        """Polarization density matrix with the pointer traced out."""
        s = self.overlap_matrix()
        # rho_ij = sum_kl J_k[i] conj(J_l[j]) <G_l|G_k>
        return np.einsum("ki,lj,lk->ij", self.jones, np.conj(self.jones), s)

    @property
    def norm(self) -> float:
        return float(np.real(np.trace(self.reduced_polarization())))


def initial_state(pre: PolarizationState, sigma: float) -> CoupledState:
    """Product state ``|pre> (x) |f_x> (x) |f_y>`` with both pointers
    centred at the origin."""
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidArgumentError(f"sigma must be positive, got {sigma!r}")
    return CoupledState(np.zeros((1, 2)), pre.vector[None, :], float(sigma), pre)


def _couple(state: CoupledState, axis_state: PolarizationState, g: float, axis: int) -> CoupledState:
    u = axis_state.vector
    proj = np.outer(u, u.conj())
    shift = np.zeros(2)
    shift[axis] = g
    kept = state.jones @ (np.eye(2) - proj).T
    moved = state.jones @ proj.T
    centers = np.concatenate([state.centers, state.centers + shift])
    jones = np.concatenate([kept, moved])
    jones[np.abs(jones) <= PRUNE_RELATIVE * np.abs(jones).max()] = 0
    nonzero = np.any(jones != 0, axis=1)
    centers, jones = _merge(centers[nonzero], jones[nonzero], state.sigma)
    return CoupledState(centers, jones.reshape(-1, 2), state.sigma, state.initial)


def apply_coupling_v(state: CoupledState, g_y: float) -> CoupledState:
    """``exp(-i g_y Pi_V (x) P_y)``: V components move by ``g_y`` along y."""
    return _couple(state, PolarizationState(0.0, 1.0), g_y, axis=1)


def apply_coupling_psi(state: CoupledState, theta: float, g_x: float) -> CoupledState:
    """``exp(-i g_x Pi_psi (x) P_x)`` with ``psi = linear_state(theta)``:
    the ``psi`` component of every branch moves by ``g_x`` along x, the
    ``psi_perp`` component stays."""
    return _couple(state, linear_state(theta), g_x, axis=0)


def couple_sequence(pre: PolarizationState, theta: float, g_x: float, g_y: float,
                    sigma: float) -> CoupledState:
    """Pre-selection followed by the V coupling, then the psi coupling."""
    state = initial_state(pre, sigma)
    state = apply_coupling_v(state, g_y)
    return apply_coupling_psi(state, theta, g_x)


def post_select(state: CoupledState, post: PolarizationState,
                norm_epsilon: float = NORM_EPSILON) -> PointerField:
    """Project on ``post``; returns the unnormalized pointer field whose
    norm is the post-selection probability."""
    amps = state.jones @ post.vector.conj()
    centers, amps = _merge(state.centers, amps, state.sigma)
    keep = np.abs(amps) > PRUNE_RELATIVE * np.abs(amps).max() if amps.size else amps != 0
    terms = [(a, x, y) for a, (x, y) in zip(amps[keep], centers[keep])]
    pf = PointerField(tuple(terms), state.sigma)
    if not pf.norm > norm_epsilon:
        raise VanishingPostselectionError(
            f"post-selection probability {pf.norm:.3e} below {norm_epsilon:.1e}"
        )
    return pf


def exact_moments(field: PointerField, norm_epsilon: float = NORM_EPSILON) -> Moments:
    """Closed-form first moments and raw XY moment of the normalized
    density ``|field|^2 / norm``."""
    norm = field.norm
    if not norm > norm_epsilon:
        raise VanishingPostselectionError(f"field norm {norm:.3e} is vanishing")
    w, mx, my = field.pair_tables()
    mean_x = float(np.real(np.sum(w * mx))) / norm
    mean_y = float(np.real(np.sum(w * my))) / norm
    raw_xy = float(np.real(np.sum(w * mx * my))) / norm
    return Moments(mean_x, mean_y, raw_xy, min(norm, 1.0))


def traced_polarization_coherence(state: CoupledState) -> float:
    """Shrink factor ``|rho_HV| / |amp_h conj(amp_v)|`` of the H-V
    coherence of the reduced polarization state, relative to the
    pre-selected amplitudes."""
    ref = abs(state.initial.amp_h * state.initial.amp_v.conjugate())
    if ref == 0.0:
        raise UndefinedCoherenceError("pre-selected state has no H-V coherence")
    return float(abs(state.reduced_polarization()[0, 1]) / ref)


__all__ = [
    "Branch", "CoupledState", "GaussianTerm", "Moments", "PointerField",
    "apply_coupling_psi", "apply_coupling_v", "couple_sequence", "exact_moments",
    "initial_state", "overlap_1d", "post_select",
    "traced_polarization_coherence",
]
