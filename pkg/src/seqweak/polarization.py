"""
Qubit algebra for photon polarization in the {H, V} basis.

States are Jones vectors, observables are 2x2 Hermitian matrices and
weak values are evaluated directly from their defining ratio

    <A>_w = <post|A|pre> / <post|pre>.

Everything is kept complex even though the linear-polarization
experiment only ever produces real numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePostselectionError, InvalidArgumentError

OVERLAP_EPSILON = 1e-10
_TOL = 1e-12


@dataclass(frozen=True)
class PolarizationState:
    """Normalized Jones vector ``amp_h |H> + amp_v |V>``.

    Use :meth:`from_amplitudes` to build a state from approximately
    normalized numbers (e.g. values rounded to three digits); the
    plain constructor insists on a unit vector.
    """

    amp_h: complex
    amp_v: complex

    def __post_init__(self):
        h, v = complex(self.amp_h), complex(self.amp_v)
        if not (np.isfinite(h) and np.isfinite(v)):
            raise InvalidArgumentError("state amplitudes must be finite")
        if abs(abs(h) ** 2 + abs(v) ** 2 - 1.0) > _TOL:
            raise InvalidArgumentError(
                f"state ({h}, {v}) is not normalized; use from_amplitudes()"
            )
        object.__setattr__(self, "amp_h", h)
        object.__setattr__(self, "amp_v", v)

    @classmethod
    def from_amplitudes(cls, amp_h, amp_v) -> PolarizationState:
        h, v = complex(amp_h), complex(amp_v)
        norm = math.sqrt(abs(h) ** 2 + abs(v) ** 2)
        if not np.isfinite(norm) or norm == 0.0:
            raise InvalidArgumentError("cannot normalize a zero or non-finite vector")
        return cls(h / norm, v / norm)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_h, self.amp_v], dtype=complex)

    @property
    def is_linear(self) -> bool:
        """True if the state is real up to a global phase."""
        vec = self.vector
        k = int(np.argmax(np.abs(vec)))
        vec = vec * np.exp(-1j * np.angle(vec[k]))
        return bool(np.all(np.abs(vec.imag) < _TOL))

    def overlap(self, other: PolarizationState) -> complex:
        """Return ``<self|other>``."""
        return complex(np.vdot(self.vector, other.vector))


H = PolarizationState(1.0, 0.0)
V = PolarizationState(0.0, 1.0)


@dataclass(frozen=True)
class Observable2x2:
    """Hermitian 2x2 matrix acting on polarization."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidArgumentError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > _TOL:
            raise InvalidArgumentError("observable must be Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __matmul__(self, other: Observable2x2) -> np.ndarray:
        # products of non-commuting observables are not Hermitian
        return self.m @ other.m

    def __add__(self, other: Observable2x2) -> Observable2x2:
        return Observable2x2(self.m + other.m)

    def __rmul__(self, scalar) -> Observable2x2:
        return Observable2x2(scalar * self.m)

    @property
    def is_projector(self) -> bool:
        return bool(np.max(np.abs(self.m @ self.m - self.m)) <= _TOL)

    def expectation(self, state: PolarizationState) -> complex:
        return complex(np.vdot(state.vector, self.m @ state.vector))

    def commutes_with(self, other: Observable2x2, tol: float = _TOL) -> bool:
        return bool(np.max(np.abs(self.m @ other.m - other.m @ self.m)) <= tol)


@dataclass(frozen=True)
class WeakValue:
    value: complex

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag

    def __complex__(self):
        return complex(self.value)

    def __float__(self):
        return float(self.value.real)


def linear_state(theta: float) -> PolarizationState:
    """Linear polarization ``cos(theta)|H> + sin(theta)|V>``."""
    if not np.isfinite(theta):
        raise InvalidArgumentError(f"theta must be finite, got {theta!r}")
    return PolarizationState(math.cos(theta), math.sin(theta))


def orthogonal_state(state: PolarizationState) -> PolarizationState:
    """The state orthogonal to ``state``; for ``linear_state(t)`` this is
    ``-sin(t)|H> + cos(t)|V>``."""
    return PolarizationState(-state.amp_v.conjugate(), state.amp_h.conjugate())


def projector(state: PolarizationState) -> Observable2x2:
    vec = state.vector
    return Observable2x2(np.outer(vec, vec.conj()))


PI_H = projector(H)
PI_V = projector(V)


def _matrix(op) -> np.ndarray:
    return op.m if isinstance(op, Observable2x2) else np.asarray(op, dtype=complex)


def _transition(m: np.ndarray, pre: PolarizationState, post: PolarizationState,
                overlap_epsilon: float) -> complex:
    denom = post.overlap(pre)
    if abs(denom) <= overlap_epsilon:
        raise DegeneratePostselectionError(
            f"|<post|pre>| = {abs(denom):.3e} is below {overlap_epsilon:.1e}; "
            "weak value undefined"
        )
    return complex(np.vdot(post.vector, m @ pre.vector)) / denom


def weak_value(obs, pre: PolarizationState, post: PolarizationState,
               overlap_epsilon: float = OVERLAP_EPSILON) -> WeakValue:
    """Weak value of ``obs`` between ``pre`` and ``post``.

    ``obs`` may also be a plain 2x2 array, which is how non-Hermitian
    operator products (e.g. ``A @ B``) are fed in.

    Raises
    ------
    DegeneratePostselectionError
        If ``|<post|pre>| <= overlap_epsilon``.
    """
    return WeakValue(_transition(_matrix(obs), pre, post, overlap_epsilon))


def sequential_weak_value(obs_first, obs_second, pre: PolarizationState,
                          post: PolarizationState,
                          overlap_epsilon: float = OVERLAP_EPSILON) -> WeakValue:
    """Weak value of the time-ordered product: ``obs_first`` is coupled
    first, so it sits on the right, ``<post|obs_second obs_first|pre>/<post|pre>``.
    """
    m = _matrix(obs_second) @ _matrix(obs_first)
    return WeakValue(_transition(m, pre, post, overlap_epsilon))


def joint_weak_value(obs_a, obs_b, pre: PolarizationState, post: PolarizationState,
                     symmetrized: bool = True,
                     overlap_epsilon: float = OVERLAP_EPSILON) -> WeakValue:
    """Weak value of ``AB + BA`` (``symmetrized``) or of ``2 AB``.

    The unsymmetrized form is kept for comparison only.
    """
    a, b = _matrix(obs_a), _matrix(obs_b)
    m = a @ b + b @ a if symmetrized else 2.0 * (a @ b)
    return WeakValue(_transition(m, pre, post, overlap_epsilon))
