"""
Lossless Gaussian optical networks acting on vacuum inputs.

A network on ``M`` modes is stored as an affine Bogoliubov map in the
Heisenberg picture::

    a_j = d_j + sum_n C[j, n] z_n + sum_n S[j, n] z_n^dagger

where ``z_n`` are the annihilators of the vacuum input modes.  Elements are
applied in physical order: ``apply_x(m, ...)`` returns the map of the network
``m`` followed by element ``x``.  Angles are radians, amplitudes are in units of
sqrt(photons).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "SqueezeParams",
    "BogoliubovMap",
    "MomentSet",
    "BogoliubovDiagnostics",
    "identity_map",
    "displace",
    "apply_phase",
    "apply_beamsplitter",
    "apply_dopa",
    "apply_nopa",
    "compose",
    "mean_photon",
    "photon_covariance",
    "quadrature_stats",
    "quadratic_mean",
    "quadratic_covariance",
    "validate_bogoliubov",
    "Displace",
    "Phase",
    "Beamsplitter",
    "Dopa",
    "Nopa",
    "build_map",
    "single_arm_program",
    "two_arm_program",
    "su11_nopa_program",
]


def db_to_r(db: float) -> float:
    """Convert a squeezing level in decibels to the logarithmic squeeze factor."""
    return math.log(10.0 ** (db / 20.0))


@dataclass(frozen=True)
class SqueezeParams:
    """Squeeze factor ``r`` and squeeze angle ``theta``.

    A negative ``r`` is folded into ``theta`` using
    ``(-r, theta) == (r, theta + pi/2)``, so stored values always have
    ``r >= 0`` and ``theta`` in ``[0, pi)``.
    """

    r: float
    theta: float = 0.0

    def __post_init__(self):
        r = float(self.r)
        theta = float(self.theta)
        if not (math.isfinite(r) and math.isfinite(theta)):
            raise InvalidArgument(f"non-finite squeeze parameters r={r}, theta={theta}")
        if r < 0:
            r, theta = -r, theta + math.pi / 2
        theta = math.fmod(theta, math.pi)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta = 0.0
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_db(cls, db: float, theta: float = 0.0) -> "SqueezeParams":
        return cls(db_to_r(db), theta)

    @property
    def coeffs(self) -> tuple[float, complex]:
        """``(cosh r, e^{2i theta} sinh r)``."""
        return math.cosh(self.r), np.exp(2j * self.theta) * math.sinh(self.r)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BogoliubovMap:
    d: np.ndarray
    C: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        d, C, S = _frozen(self.d), _frozen(self.C), _frozen(self.S)
        m = d.shape[0] if d.ndim == 1 else -1
        if m < 1 or C.shape != (m, m) or S.shape != (m, m):
            raise InvalidArgument(
                f"inconsistent shapes d{d.shape}, C{C.shape}, S{S.shape}"
            )
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(C)) and np.all(np.isfinite(S))):
            raise InvalidArgument("map contains non-finite entries")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "S", S)

    @property
    def M(self) -> int:
        return self.d.shape[0]

    def allclose(self, other: "BogoliubovMap", atol: float = 1e-12) -> bool:
        return (
            self.M == other.M
            and np.allclose(self.d, other.d, rtol=0, atol=atol)
            and np.allclose(self.C, other.C, rtol=0, atol=atol)
            and np.allclose(self.S, other.S, rtol=0, atol=atol)
        )

    def _rows(self):
        return self.d.copy(), self.C.copy(), self.S.copy()


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Means and covariance matrix of a set of photon-number-like operators."""

    mean_n: np.ndarray
    cov_n: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean_n, dtype=float).reshape(-1)
        cov = np.array(self.cov_n, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise InvalidArgument(f"covariance shape {cov.shape} does not match {mean.size} means")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max(initial=0))):
            raise InvalidArgument("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean_n", mean)
        object.__setattr__(self, "cov_n", cov)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.cov_n)

    def subset(self, idx: Sequence[int]) -> "MomentSet":
        idx = list(idx)
        return MomentSet(self.mean_n[idx], self.cov_n[np.ix_(idx, idx)])


class BogoliubovDiagnostics(NamedTuple):
    unitarity: float  # max |C C^+ - S S^+ - I|
    symmetry: float   # max |C S^T - (C S^T)^T|

    def ok(self, tol: float = 1e-10) -> bool:
        return self.unitarity < tol and self.symmetry < tol


def _check_mode(m: BogoliubovMap, mode: int) -> int:
    if not (0 <= mode < m.M):
        raise IndexError(f"mode {mode} out of range for a {m.M}-mode map")
    return int(mode)


def _check_pair(m: BogoliubovMap, j: int, k: int) -> tuple[int, int]:
    _check_mode(m, j)
    _check_mode(m, k)
    if j == k:
        raise InvalidArgument(f"two-mode element needs distinct modes, got {j} twice")
    return int(j), int(k)


def identity_map(M: int) -> BogoliubovMap:
    if int(M) != M or M < 1:
        raise InvalidArgument(f"mode count must be a positive integer, got {M!r}")
    M = int(M)
    return BogoliubovMap(np.zeros(M), np.eye(M), np.zeros((M, M)))


def displace(m: BogoliubovMap, mode: int, alpha: complex) -> BogoliubovMap:
    mode = _check_mode(m, mode)
    d, C, S = m._rows()
    d[mode] += complex(alpha)
    return BogoliubovMap(d, C, S)


def apply_phase(m: BogoliubovMap, mode: int, phi: float) -> BogoliubovMap:
    """Phase shift ``a -> a e^{-i phi}`` on one mode."""
    mode = _check_mode(m, mode)
    d, C, S = m._rows()
    u = np.exp(-1j * phi)
    d[mode] *= u
    C[mode] *= u
    S[mode] *= u
    return BogoliubovMap(d, C, S)


def apply_beamsplitter(m: BogoliubovMap, j: int, k: int, T: float) -> BogoliubovMap:
    """Beamsplitter of power transmissivity ``T``.

    ``a_j -> sqrt(T) a_j + sqrt(1-T) a_k`` and
    ``a_k -> sqrt(1-T) a_j - sqrt(T) a_k``; ``T = 1/2`` gives the balanced
    ``(a_j +- a_k)/sqrt(2)`` convention.
    """
    j, k = _check_pair(m, j, k)
    if not (0.0 <= T <= 1.0):
        raise InvalidArgument(f"transmissivity must lie in [0, 1], got {T}")
    t, s = math.sqrt(T), math.sqrt(1.0 - T)
    d, C, S = m._rows()
    for arr in (d, C, S):
        rj, rk = arr[j].copy(), arr[k].copy()
        arr[j] = t * rj + s * rk
        arr[k] = s * rj - t * rk
    return BogoliubovMap(d, C, S)


def _dagger_row(d, C, S, i):
    # coefficients of a_i^dagger over (1, z, z^dagger)
    return np.conj(d[i]), np.conj(S[i]), np.conj(C[i])


def apply_dopa(m: BogoliubovMap, mode: int, sq: SqueezeParams) -> BogoliubovMap:
    """Degenerate parametric amplifier ``a -> a cosh r + a^dagger e^{2i theta} sinh r``."""
    mode = _check_mode(m, mode)
    ch, g = sq.coeffs
    d, C, S = m._rows()
    dd, dC, dS = _dagger_row(d, C, S, mode)
    d[mode] = ch * d[mode] + g * dd
    C[mode] = ch * C[mode] + g * dC
    S[mode] = ch * S[mode] + g * dS
    return BogoliubovMap(d, C, S)


def apply_nopa(m: BogoliubovMap, j: int, k: int, sq: SqueezeParams) -> BogoliubovMap:
    """Two-mode squeezer ``a_j -> a_j cosh r + a_k^dagger e^{2i theta} sinh r``
    (and the same with ``j`` and ``k`` exchanged).

    Anti-squeezing is obtained with ``SqueezeParams(-r, theta)``, which is the
    same element as ``SqueezeParams(r, theta + pi/2)``.
    """
    j, k = _check_pair(m, j, k)
    ch, g = sq.coeffs
    d, C, S = m._rows()
    jd, jC, jS = _dagger_row(d, C, S, j)
    kd, kC, kS = _dagger_row(d, C, S, k)
    d[j], d[k] = ch * d[j] + g * kd, ch * d[k] + g * jd
    C[j], C[k] = ch * C[j] + g * kC, ch * C[k] + g * jC
    S[j], S[k] = ch * S[j] + g * kS, ch * S[k] + g * jS
    return BogoliubovMap(d, C, S)


def compose(first: BogoliubovMap, second: BogoliubovMap) -> BogoliubovMap:
    """Map of ``first`` followed by ``second``."""
    if first.M != second.M:
        raise InvalidArgument(f"mode-count mismatch: {first.M} vs {second.M}")
    d = second.d + second.C @ first.d + second.S @ np.conj(first.d)
    C = second.C @ first.C + second.S @ np.conj(first.S)
    S = second.C @ first.S + second.S @ np.conj(first.C)
    return BogoliubovMap(d, C, S)


def mean_photon(m: BogoliubovMap, mode: int) -> float:
    mode = _check_mode(m, mode)
    return float(abs(m.d[mode]) ** 2 + np.sum(np.abs(m.S[mode]) ** 2))


def _vacuum_pairings(m: BogoliubovMap):
    C, S = m.C, m.S
    cc = np.conj(S @ C.T)       # <da_j^+ da_k^+>
    aa = C @ S.T                # <da_j da_k>
    ca = np.conj(S) @ S.T       # <da_j^+ da_k>
    ac = C @ np.conj(C).T       # <da_j da_k^+>
    return cc, aa, ca, ac


def photon_covariance(m: BogoliubovMap) -> MomentSet:
    """Means and covariance matrix of the photon numbers of all modes (Wick)."""
    d, C, S = m.d, m.C, m.S
    u = np.conj(d)[:, None] * C + d[:, None] * np.conj(S)
    linear = u @ np.conj(u).T
    cc, aa, ca, ac = _vacuum_pairings(m)
    quad = cc * aa + ca * ac
    cov = np.real(linear + quad)
    cov = 0.5 * (cov + cov.T)
    mean = np.abs(d) ** 2 + np.sum(np.abs(S) ** 2, axis=1)
    return MomentSet(mean, cov)


def quadratic_mean(m: BogoliubovMap, H: np.ndarray) -> float:
    """``<a^+ H a>`` for a Hermitian ``M x M`` matrix ``H``."""
    H = np.asarray(H, dtype=complex)
    _, _, ca, _ = _vacuum_pairings(m)
    return float(np.real(np.conj(m.d) @ H @ m.d + np.sum(H * ca)))


def quadratic_covariance(m: BogoliubovMap, H1: np.ndarray, H2: np.ndarray) -> float:
    """Symmetrized covariance of ``a^+ H1 a`` and ``a^+ H2 a``.

    ``photon_covariance`` is the special case of diagonal projectors; this form
    also covers interference terms such as ``i(a_2^+ a_1 - a_1^+ a_2)``.
    """
    H1 = np.asarray(H1, dtype=complex)
    H2 = np.asarray(H2, dtype=complex)
    d, C, S = m.d, m.C, m.S

    def linear_coeffs(H):
        return np.conj(d) @ H @ C + (H @ d) @ np.conj(S)

    w1, w2 = linear_coeffs(H1), linear_coeffs(H2)
    cc, aa, ca, ac = _vacuum_pairings(m)
    quad = np.sum(cc * (H1 @ aa @ H2.T)) + np.sum(ca * (H1 @ ac @ H2))
    return float(np.real(w1 @ np.conj(w2) + quad))


def quadrature_stats(m: BogoliubovMap, mode: int, angle: float) -> tuple[float, float]:
    """Mean and variance of ``(a e^{-i angle} + a^+ e^{i angle})/sqrt(2)``.

    Vacuum variance is 1/2.  ``angle = pi/2`` is the sine quadrature
    ``(a - a^+)/(i sqrt 2)``.
    """
    mode = _check_mode(m, mode)
    u = np.exp(-1j * angle)
    mean = math.sqrt(2.0) * np.real(m.d[mode] * u)
    c, s = m.C[mode], m.S[mode]
    var = 0.5 * (2.0 * np.real(u * u * np.sum(c * s)) + np.sum(np.abs(c) ** 2) + np.sum(np.abs(s) ** 2))
    return float(mean), float(var)


def validate_bogoliubov(m: BogoliubovMap) -> BogoliubovDiagnostics:
    C, S = m.C, m.S
    unit = C @ np.conj(C).T - S @ np.conj(S).T - np.eye(m.M)
    sym = C @ S.T
    return BogoliubovDiagnostics(
        float(np.abs(unit).max()), float(np.abs(sym - sym.T).max())
    )


# -- programs --------------------------------------------------------------
# Plain records of elementary elements.  The same program can be evaluated
# here (build_map) or by the Fock-space oracle.


@dataclass(frozen=True)
class Displace:
    mode: int
    alpha: complex

    def apply(self, m):
        return displace(m, self.mode, self.alpha)


@dataclass(frozen=True)
class Phase:
    mode: int
    phi: float

    def apply(self, m):
        return apply_phase(m, self.mode, self.phi)


@dataclass(frozen=True)
class Beamsplitter:
    j: int
    k: int
    T: float = 0.5

    def apply(self, m):
        return apply_beamsplitter(m, self.j, self.k, self.T)


@dataclass(frozen=True)
class Dopa:
    mode: int
    sq: SqueezeParams

    def apply(self, m):
        return apply_dopa(m, self.mode, self.sq)


@dataclass(frozen=True)
class Nopa:
    j: int
    k: int
    sq: SqueezeParams

    def apply(self, m):
        return apply_nopa(m, self.j, self.k, self.sq)


Element = Union[Displace, Phase, Beamsplitter, Dopa, Nopa]


def program_modes(program: Sequence[Element]) -> int:
    top = 0
    for el in program:
        for attr in ("mode", "j", "k"):
            if hasattr(el, attr):
                top = max(top, getattr(el, attr) + 1)
    return max(top, 1)


def build_map(program: Sequence[Element], M: int | None = None) -> BogoliubovMap:
    m = identity_map(program_modes(program) if M is None else M)
    for el in program:
        m = el.apply(m)
    return m


def single_arm_program(alpha: complex, sq: SqueezeParams) -> list[Element]:
    """Squeezed coherent probe ``a = alpha + z cosh r + z^+ e^{2i theta} sinh r``."""
    return [Dopa(0, sq), Displace(0, alpha)]


def two_arm_program(alpha: float, zeta: float, sq1: SqueezeParams, sq2: SqueezeParams) -> list[Element]:
    """Two squeezed coherent inputs combined on a balanced beamsplitter.

    Input amplitudes are ``alpha cos(zeta)`` and ``i alpha sin(zeta)`` so that
    the arm amplitudes are ``alpha e^{+-i zeta}/sqrt(2)``.  Arm 1 is mode 0,
    arm 2 is mode 1.
    """
    return [
        Dopa(0, sq1),
        Dopa(1, sq2),
        Displace(0, alpha * math.cos(zeta)),
        Displace(1, 1j * alpha * math.sin(zeta)),
        Beamsplitter(0, 1, 0.5),
    ]


def su11_nopa_program(alpha: float, zeta: float, sq: SqueezeParams) -> list[Element]:
    """Two-mode parametric preparation seeded by vacuum, then the arm carriers.

    Gives the same arm statistics as ``two_arm_program`` with squeezers
    ``(-r, theta)`` and ``(r, theta)``: the two-mode squeezer runs at angle
    ``theta + pi/2``.
    """
    nopa = SqueezeParams(sq.r, sq.theta + math.pi / 2)
    b = alpha / math.sqrt(2.0)
    return [
        Nopa(0, 1, nopa),
        Displace(0, b * np.exp(1j * zeta)),
        Displace(1, b * np.exp(-1j * zeta)),
    ]
