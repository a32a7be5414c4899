"""
Quantum Fisher information and Cramer-Rao bounds for phase shifts.

For phase shifts generated by commuting photon-number operators on a pure
state the Fisher matrix is four times the photon-number covariance, and the
bound on the estimator covariance is its inverse.

Normalization used throughout: ``phi_pm = (phi_1 +- phi_2)/2`` and
``N_pm = N_1 +- N_2``, so that ``N_1 phi_1 + N_2 phi_2 = N_+ phi_+ + N_- phi_-``.
Two-arm bounds are ordered ``(+, -)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation
from .gaussian_core import (
    MomentSet,
    SqueezeParams,
    build_map,
    photon_covariance,
    su11_nopa_program,
    two_arm_program,
)

# basis change arm -> (+, -) for photon numbers
_PM = np.array([[1.0, 1.0], [1.0, -1.0]])
SINGULAR_RTOL = 1e-12
CROSS_CORRELATION_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    A: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise InvalidArgument(f"Fisher matrix must be square, got {A.shape}")
        scale = max(1.0, np.abs(A).max(initial=0.0))
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * scale):
            raise InvalidArgument("Fisher matrix is not symmetric")
        A = 0.5 * (A + A.T)
        if A.size and np.linalg.eigvalsh(A).min() < -1e-10 * scale:
            raise InvalidArgument("Fisher matrix is not positive semidefinite")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def J(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class PhaseBound:
    """Lower bound ``var_phi`` on the covariance of phase estimates."""

    var_phi: np.ndarray
    well_posed: bool = True

    def __post_init__(self):
        v = np.atleast_2d(np.array(self.var_phi, dtype=float))
        v.setflags(write=False)
        object.__setattr__(self, "var_phi", v)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.var_phi)

    @property
    def delta_phi(self) -> np.ndarray:
        return np.sqrt(self.variances)

    # two-arm bounds in the (+, -) basis
    @property
    def var_plus(self) -> float:
        return float(self.var_phi[0, 0])

    @property
    def var_minus(self) -> float:
        return float(self.var_phi[1, 1])

    @property
    def cross(self) -> float:
        return float(self.var_phi[0, 1])


@dataclass(frozen=True)
class TwoArmPrep:
    """Two squeezed coherent inputs on a balanced beamsplitter.

    The arm amplitudes are ``alpha e^{+-i zeta}/sqrt(2)``; ``sq1`` and ``sq2``
    squeeze the two input ports.
    """

    alpha: float
    zeta: float = 0.0
    sq1: SqueezeParams = field(default_factory=lambda: SqueezeParams(0.0))
    sq2: SqueezeParams = field(default_factory=lambda: SqueezeParams(0.0))

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidArgument(f"alpha must be finite and >= 0, got {self.alpha}")

    @classmethod
    def su11(cls, alpha: float, r: float, theta: float = 0.0, zeta: float = 0.0) -> "TwoArmPrep":
        """Parametric (two-mode squeezer) preparation, as squeezers ``-r`` and ``r``."""
        return cls(alpha, zeta, SqueezeParams(-r, theta), SqueezeParams(r, theta))

    def program(self):
        return two_arm_program(self.alpha, self.zeta, self.sq1, self.sq2)

    def to_map(self):
        return build_map(self.program(), 2)

    @property
    def mean_photons(self) -> float:
        return self.alpha ** 2 + math.sinh(self.sq1.r) ** 2 + math.sinh(self.sq2.r) ** 2


def fisher_matrix(moments: MomentSet, arms: Sequence[int]) -> FisherMatrix:
    arms = [int(a) for a in arms]
    if len(set(arms)) != len(arms):
        raise InvalidArgument(f"duplicate arm indices in {arms}")
    n = moments.mean_n.size
    for a in arms:
        if not 0 <= a < n:
            raise InvalidArgument(f"arm index {a} out of range for {n} modes")
    return FisherMatrix(4.0 * moments.cov_n[np.ix_(arms, arms)])


def to_plusminus_basis(moments: MomentSet) -> MomentSet:
    """Moments of ``N_pm = N_1 +- N_2`` from per-arm moments."""
    if moments.mean_n.size != 2:
        raise InvalidArgument(f"need exactly 2 arms, got {moments.mean_n.size}")
    return MomentSet(_PM @ moments.mean_n, _PM @ moments.cov_n @ _PM.T)


def from_plusminus_basis(moments: MomentSet) -> MomentSet:
    if moments.mean_n.size != 2:
        raise InvalidArgument(f"need exactly 2 channels, got {moments.mean_n.size}")
    inv = 0.5 * _PM
    return MomentSet(inv @ moments.mean_n, inv @ moments.cov_n @ inv.T)


def qcrb_bound(fisher: FisherMatrix) -> PhaseBound:
    """Inverse Fisher matrix, or a flagged bound if some direction carries no information.

    On a singular matrix the returned ``var_phi`` is the pseudo-inverse with
    ``inf`` on every diagonal entry touched by the null space.
    """
    A = fisher.A
    w, V = np.linalg.eigh(A)
    top = max(abs(w).max(initial=0.0), 0.0)
    null = w <= SINGULAR_RTOL * top if top > 0 else np.ones_like(w, dtype=bool)
    if np.any(null):
        var = np.linalg.pinv(A, hermitian=True) if top > 0 else np.zeros_like(A)
        touched = np.any(np.abs(V[:, null]) > 1e-12, axis=1)
        var[touched, touched] = np.inf
        return PhaseBound(var, well_posed=False)
    if A.shape == (2, 2):
        det = A[0, 0] * A[1, 1] - A[0, 1] ** 2
        var = np.array([[A[1, 1], -A[0, 1]], [-A[0, 1], A[0, 0]]]) / det
    else:
        var = np.linalg.solve(A, np.eye(A.shape[0]))
    return PhaseBound(var, well_posed=True)


def arm_to_plusminus_bound(bound: PhaseBound) -> PhaseBound:
    """Re-express a per-arm bound for ``phi_pm = (phi_1 +- phi_2)/2``."""
    M = 0.5 * _PM
    return PhaseBound(M @ bound.var_phi @ M.T, bound.well_posed)


def single_arm_number_variance(alpha: float, sq: SqueezeParams) -> float:
    r, th = sq.r, sq.theta
    return alpha ** 2 * (math.cosh(2 * r) + math.sinh(2 * r) * math.cos(2 * th)) + 0.5 * math.sinh(2 * r) ** 2


def closed_form_single_arm(alpha: float, sq: SqueezeParams) -> PhaseBound:
    """Bound ``1/(4 Var N)`` for a squeezed coherent probe; best at ``theta = 0``."""
    if alpha < 0:
        raise InvalidArgument(f"alpha must be >= 0, got {alpha}")
    var_n = single_arm_number_variance(alpha, sq)
    if var_n <= 0:
        return PhaseBound([[np.inf]], well_posed=False)
    return PhaseBound([[1.0 / (4.0 * var_n)]])


def two_arm_moments(prep: TwoArmPrep) -> MomentSet:
    """``N_pm`` moments for the balanced two-port preparation, in closed form."""
    a2 = prep.alpha ** 2
    r1, t1 = prep.sq1.r, prep.sq1.theta
    r2, t2 = prep.sq2.r, prep.sq2.theta
    cz2, sz2 = math.cos(prep.zeta) ** 2, math.sin(prep.zeta) ** 2
    ch1, sh1 = math.cosh(2 * r1), math.sinh(2 * r1)
    ch2, sh2 = math.cosh(2 * r2), math.sinh(2 * r2)
    c1, c2 = math.cos(2 * t1), math.cos(2 * t2)
    var_plus = a2 * ((ch1 + sh1 * c1) * cz2 + (ch2 - sh2 * c2) * sz2) + 0.5 * (sh1 ** 2 + sh2 ** 2)
    var_minus = (
        a2 * ((ch1 - sh1 * c1) * sz2 + (ch2 + sh2 * c2) * cz2)
        + math.sinh(r1 + r2) ** 2 * math.cos(t1 - t2) ** 2
        + math.sinh(r1 - r2) ** 2 * math.sin(t1 - t2) ** 2
    )
    cross = 0.5 * a2 * (sh1 * math.sin(2 * t1) + sh2 * math.sin(2 * t2)) * math.sin(2 * prep.zeta)
    mean = [prep.mean_photons, 0.0]
    return MomentSet(mean, [[var_plus, cross], [cross, var_minus]])


def closed_form_two_arm(prep: TwoArmPrep) -> tuple[MomentSet, PhaseBound]:
    moments = two_arm_moments(prep)
    return moments, qcrb_bound(FisherMatrix(4.0 * moments.cov_n))


def pipeline_two_arm(prep: TwoArmPrep, nopa: bool = False) -> tuple[MomentSet, PhaseBound]:
    """Same quantities as ``closed_form_two_arm`` via the Gaussian map of the optics.

    With ``nopa=True`` the preparation is built with a two-mode squeezer;
    this requires a parametric-type ``prep`` (see ``TwoArmPrep.su11``).
    """
    if nopa:
        program = su11_nopa_program(prep.alpha, prep.zeta, prep.sq2)
    else:
        program = prep.program()
    arms = photon_covariance(build_map(program, 2))
    pm = to_plusminus_basis(arms)
    return pm, qcrb_bound(fisher_matrix(pm, [0, 1]))


def su11_prep_bounds(alpha: float, r: float, theta: float, zeta: float = 0.0) -> PhaseBound:
    """Bounds for the two-mode squeezer preparation; independent of ``zeta``."""
    if r < 0:
        raise InvalidArgument(f"r must be >= 0, got {r}")
    del zeta  # the carrier phase split drops out of every moment
    a2 = alpha ** 2
    ch, sh, c = math.cosh(2 * r), math.sinh(2 * r), math.cos(2 * theta)
    var_plus = a2 * (ch - sh * c) + sh ** 2
    var_minus = a2 * (ch + sh * c)
    return qcrb_bound(FisherMatrix(4.0 * np.diag([var_plus, var_minus])))


def individual_phase_error(bound: PhaseBound, layout: str) -> float:
    """Error of a phase ``varphi`` placed in one arm or split between both.

    ``asymmetric``: ``phi_1 = varphi``, ``phi_2 = 0``; both channels carry
    ``varphi/2`` and their Fisher information adds.
    ``antisymmetric``: ``phi_1 = -phi_2 = varphi/2``; only the ``-`` channel
    is informative.
    """
    v = bound.var_phi
    if v.shape != (2, 2):
        raise InvalidArgument(f"need a 2x2 (+, -) bound, got shape {v.shape}")
    vp, vm, cross = v[0, 0], v[1, 1], v[0, 1]
    if cross != 0 and (
        not (math.isfinite(vp) and math.isfinite(vm))
        or abs(cross) >= CROSS_CORRELATION_RTOL * math.sqrt(vp * vm)
    ):
        raise PreconditionViolation(
            f"+/- estimates are correlated (cross term {cross:.3e}); channels must be disentangled"
        )
    if layout == "asymmetric":
        info = 1.0 / vp + 1.0 / vm
        return math.inf if info == 0 else 4.0 / info
    if layout == "antisymmetric":
        if not math.isfinite(vm):
            return math.inf
        return 4.0 * vm
    raise InvalidArgument(f"unknown layout {layout!r}")


def reference_limits(N: float, r: float = 0.0) -> tuple[float, float, float]:
    """Shot-noise, squeezed and Heisenberg phase errors ``(1/(2 sqrt N), e^{-r}/(2 sqrt N), 1/N)``."""
    if not N > 0:
        raise InvalidArgument(f"photon number must be positive, got {N}")
    snl = 1.0 / (2.0 * math.sqrt(N))
    return snl, math.exp(-r) * snl, 1.0 / N
