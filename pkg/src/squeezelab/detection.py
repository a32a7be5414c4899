"""
Realized phase errors of concrete readout schemes.

Each scheme produces a signal whose mean depends on the phase; the error is
``Var(signal) / gain**2`` at the operating point.  Closed forms are given for
the amplitude-antisqueezed (``theta = 0``) inputs; the ``*_pipeline``
functions evaluate the same schemes on the Gaussian map of the full optical
layout and accept arbitrary preparations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import InvalidArgument, SingularOperatingPoint, ZeroGainError
from .gaussian_core import (
    Beamsplitter,
    BogoliubovMap,
    Displace,
    Dopa,
    Phase,
    SqueezeParams,
    apply_nopa,
    apply_phase,
    build_map,
    photon_covariance,
    quadratic_covariance,
    quadratic_mean,
    quadrature_stats,
)
from .qcrb import TwoArmPrep

FD_STEP = 1e-4
ZERO_GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class DetectionOutcome:
    mean_signal: float
    var_signal: float
    gain: float
    var_phase: float
    asymptote: Optional[float] = None    # limit of var_phase for an infinitely strong reference
    closed_form: Optional[float] = None  # large-amplification approximation, when one exists

    def __post_init__(self):
        if self.var_signal < 0:
            raise InvalidArgument(f"negative signal variance {self.var_signal}")


@dataclass(frozen=True)
class Su11Coefficients:
    """Output field of the single-arm SU(1,1) chain: ``d = B alpha + C z + S z^+``."""

    B: complex
    C: complex
    S: complex


@dataclass(frozen=True)
class DirectDetectionMoments:
    """Moments of ``n_1``, ``n_2`` and ``Y = i(a_2^+ a_1 - a_1^+ a_2)`` of the
    incident fields; covariances are symmetrized."""

    mean_n1: float
    mean_n2: float
    mean_y: float
    var_n1: float
    var_n2: float
    var_y: float
    cov_n1_n2: float
    cov_n1_y: float
    cov_n2_y: float

    @property
    def mean_nminus(self) -> float:
        return self.mean_n1 - self.mean_n2

    def output_stats(self, phi_minus: float) -> dict:
        """Output moments ``n_pm_out`` after the second beamsplitter.

        Uses ``n_+out = n_+`` and ``n_-out = n_- cos 2phi + Y sin 2phi``.
        """
        c, s = math.cos(2 * phi_minus), math.sin(2 * phi_minus)
        v1, v2, vy = self.var_n1, self.var_n2, self.var_y
        c12, c1y, c2y = self.cov_n1_n2, self.cov_n1_y, self.cov_n2_y
        var_nplus = v1 + v2 + 2 * c12
        var_nminus_in = v1 + v2 - 2 * c12
        cov_minus_y = c1y - c2y
        return {
            "mean_nminus_out": self.mean_nminus * c + self.mean_y * s,
            "gain": -2 * self.mean_nminus * s + 2 * self.mean_y * c,
            "var_nplus_out": var_nplus,
            "var_nminus_out": var_nminus_in * c * c + vy * s * s + 2 * cov_minus_y * c * s,
            "cov_out": (v1 - v2) * c + (c1y + c2y) * s,
        }


def _five_point(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def error_propagation(
    mean_of: Callable[[float], float],
    var_of: Union[Callable[[float], float], float],
    phi0: float = 0.0,
    h: float = FD_STEP,
) -> DetectionOutcome:
    """``Var(signal) / (d<signal>/dphi)^2`` at ``phi0``.

    The gain is a five-point central difference at steps ``h`` and ``h/2``
    combined by one Richardson step.  Raises ``ZeroGainError`` when the gain
    is indistinguishable from rounding noise of the stencil.
    """
    g_h = _five_point(mean_of, phi0, h)
    g_h2 = _five_point(mean_of, phi0, h / 2)
    gain = float(g_h2 + (g_h2 - g_h) / 15.0)
    mean = float(mean_of(phi0))
    var = float(var_of(phi0)) if callable(var_of) else float(var_of)
    scale = max(abs(mean), math.sqrt(max(var, 0.0)), abs(mean_of(phi0 + 2 * h)))
    if not abs(gain) > ZERO_GAIN_RTOL * scale / h:
        raise ZeroGainError(f"gain {gain:.3e} at phi={phi0} is below the noise floor")
    return DetectionOutcome(mean, var, float(gain), var / gain ** 2)


# -- single arm --------------------------------------------------------------


def single_arm_homodyne_error(alpha: float, alpha_r: float, r: float) -> DetectionOutcome:
    """Balanced homodyne readout of a squeezed probe against a reference of amplitude ``alpha_r``.

    ``asymptote`` is the ``alpha_r -> inf`` limit ``e^{-2r}/(4 alpha^2)``.
    """
    if not alpha > 0:
        raise InvalidArgument(f"alpha must be positive, got {alpha}")
    if not alpha_r > 0:
        raise InvalidArgument(f"alpha_r must be positive, got {alpha_r}")
    a2, ar2 = alpha ** 2, alpha_r ** 2
    var = a2 + ar2 * math.exp(-2 * r) + math.sinh(r) ** 2
    gain = -2.0 * alpha * alpha_r
    var_phase = 0.25 * (math.exp(-2 * r) / a2 + 1.0 / ar2 + math.sinh(r) ** 2 / (a2 * ar2))
    return DetectionOutcome(0.0, var, gain, var_phase, asymptote=math.exp(-2 * r) / (4 * a2))


def single_arm_homodyne_pipeline(alpha: float, alpha_r: float, sq: SqueezeParams, phi0: float = 0.0) -> DetectionOutcome:
    """Homodyne readout evaluated on the Gaussian map; any squeeze angle."""

    def moments(phi):
        program = [
            Dopa(0, sq),
            Displace(0, alpha),
            Phase(0, phi),
            Displace(1, 1j * alpha_r),
            Beamsplitter(0, 1, 0.5),
        ]
        return photon_covariance(build_map(program, 2))

    def mean_of(phi):
        m = moments(phi).mean_n
        return m[0] - m[1]

    def var_of(phi):
        c = moments(phi).cov_n
        return c[0, 0] + c[1, 1] - 2 * c[0, 1]

    return error_propagation(mean_of, var_of, phi0)


def su11_coefficients(alpha: float, r: float, theta: float, R: float, phi: float) -> Su11Coefficients:
    del alpha  # B multiplies alpha; kept for a uniform signature
    em, ep = np.exp(-1j * phi), np.exp(1j * phi)
    e2t = np.exp(2j * theta)
    B = em * math.cosh(R) - e2t * ep * math.sinh(R)
    C = em * math.cosh(r) * math.cosh(R) - ep * math.sinh(r) * math.sinh(R)
    S = e2t * em * math.sinh(r) * math.cosh(R) - e2t * ep * math.cosh(r) * math.sinh(R)
    return Su11Coefficients(complex(B), complex(C), complex(S))


def su11_single_arm_stats(alpha: float, r: float, theta: float, R: float, phi: float) -> tuple[float, float]:
    """Exact mean and variance of the output photon number of the single-arm
    SU(1,1) interferometer (squeeze ``r``, phase ``phi``, anti-squeeze ``R``)."""
    if R < 0:
        raise InvalidArgument(f"R must be >= 0, got {R}")
    k = su11_coefficients(alpha, r, theta, R, phi)
    a2 = alpha ** 2
    mean = abs(k.B) ** 2 * a2 + abs(k.S) ** 2
    var = abs(np.conj(k.B) * k.S + k.B * np.conj(k.C)) ** 2 * a2 + 2 * abs(k.C) ** 2 * abs(k.S) ** 2
    return float(mean), float(var)


def su11_single_arm_approx_stats(alpha: float, r: float, theta: float, R: float, phi: float) -> tuple[float, float]:
    """Leading order in ``e^{2R} >> 1``."""
    sigma2 = math.cosh(2 * r) - math.sinh(2 * r) * math.cos(2 * phi)
    s = alpha ** 2 * math.sin(theta + phi) ** 2
    return math.exp(2 * R) * (s + sigma2 / 4), math.exp(4 * R) * sigma2 * (s + sigma2 / 8)


def su11_single_arm_gain(alpha: float, r: float, theta: float, R: float, phi: float = 0.0) -> float:
    """Exact ``d<n>/dphi``."""
    return math.sinh(2 * R) * (
        2 * alpha ** 2 * math.sin(2 * (theta + phi)) + math.sinh(2 * r) * math.sin(2 * phi)
    )


def su11_default_theta(alpha: float, r: float) -> float:
    """Squeeze angle balancing the two error terms, ``(e^{-2r}/(8 alpha^2))^{1/4}``."""
    return (math.exp(-2 * r) / (8 * alpha ** 2)) ** 0.25


def su11_closed_form_error(alpha: float, r: float, theta: float) -> float:
    e = math.exp(-2 * r)
    return e / (4 * alpha ** 2 * math.cos(theta) ** 2) * (1 + e / (8 * alpha ** 2 * math.sin(theta) ** 2))


def su11_single_arm_error(alpha: float, r: float, theta: Optional[float] = None, R: float = 2.0) -> DetectionOutcome:
    """Single-arm SU(1,1) readout at ``phi -> 0``, exact in ``R``.

    ``theta=None`` picks ``su11_default_theta``.  The gain vanishes for
    ``sin(2 theta) = 0``.
    """
    if R < 0:
        raise InvalidArgument(f"R must be >= 0, got {R}")
    if theta is None:
        if not alpha > 0:
            raise InvalidArgument("default squeeze angle needs alpha > 0")
        theta = su11_default_theta(alpha, r)
    if alpha == 0 or abs(math.sin(2 * theta)) < 1e-15:
        raise ZeroGainError(f"no phase gain at theta={theta}, alpha={alpha}")
    out = error_propagation(
        lambda p: su11_single_arm_stats(alpha, r, theta, R, p)[0],
        lambda p: su11_single_arm_stats(alpha, r, theta, R, p)[1],
        0.0,
    )
    return DetectionOutcome(
        out.mean_signal, out.var_signal, out.gain, out.var_phase,
        closed_form=su11_closed_form_error(alpha, r, theta),
    )


# -- two arms ----------------------------------------------------------------


def double_homodyne_error(alpha: float, r1: float, r2: float) -> tuple[float, float]:
    """``(Var phi_+, Var phi_-)`` from sine-quadrature readout of both outputs.

    ``r1``, ``r2`` squeeze the bright and dark inputs at zero angle; a
    negative value means squeezing of the other quadrature.
    """
    if not alpha > 0:
        raise InvalidArgument(f"alpha must be positive, got {alpha}")
    a2 = alpha ** 2
    return math.exp(-2 * r1) / (4 * a2), math.exp(-2 * r2) / (4 * a2)


def _two_arm_readout_map(prep: TwoArmPrep, phi_plus: float, phi_minus: float) -> BogoliubovMap:
    program = prep.program() + [
        Phase(0, phi_plus + phi_minus),
        Phase(1, phi_plus - phi_minus),
        Beamsplitter(0, 1, 0.5),
    ]
    return build_map(program, 2)


def double_homodyne_pipeline(prep: TwoArmPrep, channel: str = "minus", phi0: float = 0.0) -> DetectionOutcome:
    """Exact double-homodyne error for an arbitrary two-arm preparation.

    ``channel="minus"`` reads the sine quadrature of the dark output,
    ``"plus"`` that of the bright output.
    """
    if channel == "minus":
        mode, at = 1, (lambda p: (0.0, p))
    elif channel == "plus":
        mode, at = 0, (lambda p: (p, 0.0))
    else:
        raise InvalidArgument(f"unknown channel {channel!r}")

    def stats(p):
        return quadrature_stats(_two_arm_readout_map(prep, *at(p)), mode, math.pi / 2)

    return error_propagation(lambda p: stats(p)[0], lambda p: stats(p)[1], phi0)


def _input_program(alpha: float, r1: float, r2: float):
    return [Dopa(0, SqueezeParams(r1)), Dopa(1, SqueezeParams(r2)), Displace(0, alpha)]


def double_direct_moments(alpha: float, r1: float, r2: float) -> DirectDetectionMoments:
    """Incident-field moments for a bright port ``alpha`` squeezed by ``r1`` and
    a dark port squeezed by ``r2`` (both at zero angle)."""
    v1 = alpha ** 2 * math.exp(2 * r1) + math.sinh(2 * r1) ** 2 / 2
    v2 = math.sinh(2 * r2) ** 2 / 2
    vy = alpha ** 2 * math.exp(-2 * r2) + math.sinh(r1 - r2) ** 2
    return DirectDetectionMoments(
        mean_n1=alpha ** 2 + math.sinh(r1) ** 2,
        mean_n2=math.sinh(r2) ** 2,
        mean_y=0.0,
        var_n1=v1, var_n2=v2, var_y=vy,
        cov_n1_n2=0.0, cov_n1_y=0.0, cov_n2_y=0.0,
    )


_N1 = np.array([[1, 0], [0, 0]], dtype=complex)
_N2 = np.array([[0, 0], [0, 1]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]])  # i(a_2^+ a_1 - a_1^+ a_2)


def direct_moments_from_map(m: BogoliubovMap) -> DirectDetectionMoments:
    """The same moments evaluated by Wick's theorem on an arbitrary 2-mode input map."""
    ops = (_N1, _N2, _Y)
    means = [quadratic_mean(m, H) for H in ops]
    cov = [[quadratic_covariance(m, H1, H2) for H2 in ops] for H1 in ops]
    return DirectDetectionMoments(
        mean_n1=means[0], mean_n2=means[1], mean_y=means[2],
        var_n1=cov[0][0], var_n2=cov[1][1], var_y=cov[2][2],
        cov_n1_n2=cov[0][1], cov_n1_y=cov[0][2], cov_n2_y=cov[1][2],
    )


def double_direct_moments_pipeline(alpha: float, r1: float, r2: float) -> DirectDetectionMoments:
    return direct_moments_from_map(build_map(_input_program(alpha, r1, r2), 2))


def _check_direct_point(mean_nminus: float, phi_minus: float) -> None:
    if abs(math.sin(2 * phi_minus)) < 1e-12:
        raise SingularOperatingPoint(f"sin(2 phi_-) = 0 at phi_- = {phi_minus}")
    if mean_nminus == 0:
        raise ZeroGainError("<n_-> = 0: no differential signal")


def double_direct_error(
    alpha: float, r1: float, r2: float, phi_minus: float = math.pi / 4, optimal: bool = True
) -> DetectionOutcome:
    """Direct detection of both outputs at the operating offset ``phi_minus``.

    With ``optimal=True`` the common-mode output is used to subtract the
    correlated part of the differential noise; ``optimal=False`` is the
    plain ``n_-out`` estimator.
    """
    mom = double_direct_moments(alpha, r1, r2)
    nm = mom.mean_nminus
    _check_direct_point(nm, phi_minus)
    v1, v2, vy = mom.var_n1, mom.var_n2, mom.var_y
    c, s = math.cos(2 * phi_minus), math.sin(2 * phi_minus)
    gain = -2 * nm * s
    if optimal:
        cot2 = (c / s) ** 2
        var_phase = (vy + 4 * v1 * v2 / (v1 + v2) * cot2) / (4 * nm ** 2)
        var_signal = var_phase * gain ** 2
    else:
        var_signal = (v1 + v2) * c * c + vy * s * s
        var_phase = var_signal / gain ** 2
    return DetectionOutcome(nm * c, var_signal, gain, var_phase)


def double_direct_error_from_moments(mom: DirectDetectionMoments, phi_minus: float) -> float:
    """``[Var n_-out - Cov(n_-out, n_+out)^2 / Var n_+out] / G^2``."""
    _check_direct_point(mom.mean_nminus, phi_minus)
    st = mom.output_stats(phi_minus)
    cond = st["var_nminus_out"] - st["cov_out"] ** 2 / st["var_nplus_out"]
    return cond / st["gain"] ** 2


def double_direct_pipeline(prep: TwoArmPrep, phi_minus: float = math.pi / 4) -> DetectionOutcome:
    """Optimal two-detector readout evaluated on the full optical layout."""

    def out(p):
        return photon_covariance(_two_arm_readout_map(prep, 0.0, p))

    def mean_of(p):
        m = out(p).mean_n
        return m[0] - m[1]

    c = out(phi_minus).cov_n
    var_minus = c[0, 0] + c[1, 1] - 2 * c[0, 1]
    var_plus = c[0, 0] + c[1, 1] + 2 * c[0, 1]
    cov = c[0, 0] - c[1, 1]
    cond = var_minus - cov ** 2 / var_plus
    res = error_propagation(mean_of, cond, phi_minus)
    return res


def direct_error_single_squeezer(alpha: float, r: float, phi_minus: float = math.pi / 4) -> float:
    """Optimal direct detection with a vacuum bright-port squeezer and dark-port squeeze ``r``."""
    nm = alpha ** 2 - math.sinh(r) ** 2
    _check_direct_point(nm, phi_minus)
    s2 = math.sinh(2 * r) ** 2
    cot2 = 1 / math.tan(2 * phi_minus) ** 2
    return (alpha ** 2 * math.exp(-2 * r) + math.sinh(r) ** 2
            + 2 * alpha ** 2 * s2 / (alpha ** 2 + s2 / 2) * cot2) / (4 * nm ** 2)


def direct_error_su11_prep(alpha: float, r: float, phi_minus: float = math.pi / 4) -> float:
    """Optimal direct detection after the parametric preparation (squeezers ``-r``, ``r``)."""
    nm = alpha ** 2
    _check_direct_point(nm, phi_minus)
    s2 = math.sinh(2 * r) ** 2
    v1 = alpha ** 2 * math.exp(-2 * r) + s2 / 2
    cot2 = 1 / math.tan(2 * phi_minus) ** 2
    return (alpha ** 2 * math.exp(-2 * r) + s2 + 2 * s2 * v1 / (v1 + s2 / 2) * cot2) / (4 * nm ** 2)


def two_arm_su11_readout_stats(
    prep_map: BogoliubovMap, R: float, vartheta: float, phi1: float, phi2: float
) -> tuple[float, float]:
    """Output photon means after the arm phases and a two-mode squeezer ``(R, vartheta)``.

    The means depend on the arm phases only through ``phi_1 + phi_2``.
    """
    if prep_map.M != 2:
        raise InvalidArgument(f"need a 2-mode preparation, got {prep_map.M} modes")
    if R < 0:
        raise InvalidArgument(f"R must be >= 0, got {R}")
    m = apply_phase(apply_phase(prep_map, 0, phi1), 1, phi2)
    m = apply_nopa(m, 0, 1, SqueezeParams(R, vartheta))
    mean = photon_covariance(m).mean_n
    return float(mean[0]), float(mean[1])


def two_arm_su11_readout_error(
    prep_map: BogoliubovMap, R: float, vartheta: float, channel: str = "minus", phi0: float = 0.0
) -> DetectionOutcome:
    """Error propagation on the summed output photon number.

    For ``channel="minus"`` this always raises ``ZeroGainError``: the readout
    carries no differential-phase information.
    """
    if channel == "minus":
        at = lambda p: (p, -p)  # noqa: E731
    elif channel == "plus":
        at = lambda p: (p, p)  # noqa: E731
    else:
        raise InvalidArgument(f"unknown channel {channel!r}")

    def total(p):
        return sum(two_arm_su11_readout_stats(prep_map, R, vartheta, *at(p)))

    def var_total(p):
        m = apply_phase(apply_phase(prep_map, 0, at(p)[0]), 1, at(p)[1])
        c = photon_covariance(apply_nopa(m, 0, 1, SqueezeParams(R, vartheta))).cov_n
        return float(c.sum())

    return error_propagation(total, var_total, phi0)
