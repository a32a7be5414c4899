"""
Brute-force reference: the exact state vector in a truncated Fock space.

Every element of a program is applied as the matrix exponential of its
truncated generator.  To keep matrix elements near the cutoff accurate the
generator is built on a padded space, the state is evolved there and then cut
back; whatever falls outside the cutoff is reported as ``norm_deficit``.
Moments are computed on the unnormalized state so truncation bias stays
visible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import InvalidArgument, TruncationOverflowError
from .gaussian_core import (
    Beamsplitter,
    Displace,
    Dopa,
    MomentSet,
    Nopa,
    Phase,
    program_modes,
)
from .qcrb import FisherMatrix

DEFAULT_TOLERANCE = 1e-8
MAX_MODES = 3


@dataclass(frozen=True, eq=False)
class FockState:
    """Truncated multimode state; ``tensor`` has shape ``(cutoff,) * M``."""

    tensor: np.ndarray
    norm_deficit: float
    step_deficits: tuple = field(default=())

    @property
    def M(self) -> int:
        return self.tensor.ndim

    @property
    def cutoff(self) -> int:
        return self.tensor.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.tensor) ** 2


class CutoffDiagnostics(NamedTuple):
    norm_deficit: float
    tail_mass: np.ndarray  # per mode, probability in the top bins
    threshold: float = 1e-8

    @property
    def flagged(self) -> bool:
        return self.norm_deficit > self.threshold or bool(np.any(self.tail_mass > self.threshold))


def recommended_cutoff(program: Sequence) -> int:
    """Per-mode cutoff for a program acting on vacuum.

    Takes the larger of ``(|alpha| cosh r + 3)^2 + 10 sinh^2 r`` and
    ``(|alpha| + 3 e^r)^2``; the second term covers the slow photon-number
    tail of squeezed states at off-axis squeeze angles.  ``|alpha|`` and ``r``
    are tracked per mode through the program as worst-case bounds: passive
    mixing pools amplitudes in quadrature and squeezing after a displacement
    amplifies it by ``e^r``.
    """
    M = program_modes(program)
    amp = np.zeros(M)
    rr = np.zeros(M)
    for el in program:
        if isinstance(el, Displace):
            amp[el.mode] += abs(el.alpha)
        elif isinstance(el, Dopa):
            amp[el.mode] *= math.exp(el.sq.r)
            rr[el.mode] += el.sq.r
        elif isinstance(el, Beamsplitter):
            pooled = math.hypot(amp[el.j], amp[el.k])
            amp[el.j] = amp[el.k] = pooled
            rr[el.j] = rr[el.k] = max(rr[el.j], rr[el.k])
        elif isinstance(el, Nopa):
            pooled = (amp[el.j] + amp[el.k]) * math.exp(el.sq.r)
            amp[el.j] = amp[el.k] = pooled
            rr[el.j] = rr[el.k] = max(rr[el.j], rr[el.k]) + el.sq.r
    need = np.maximum(
        (amp * np.cosh(rr) + 3.0) ** 2 + 10.0 * np.sinh(rr) ** 2,
        (amp + 3.0 * np.exp(rr)) ** 2,
    )
    return int(math.ceil(need.max()))


def _lowering(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csr", dtype=complex)


def _single_mode_unitary(el, cutoff: int, pad: int) -> np.ndarray:
    if isinstance(el, Phase):
        return np.diag(np.exp(-1j * el.phi * np.arange(cutoff)))
    dim = cutoff + pad
    a = _lowering(dim).toarray()
    ad = a.conj().T
    if isinstance(el, Displace):
        K = el.alpha * ad - np.conj(el.alpha) * a
    elif isinstance(el, Dopa):
        g = np.exp(2j * el.sq.theta)
        K = 0.5 * el.sq.r * (g * ad @ ad - np.conj(g) * a @ a)
    else:
        raise TypeError(f"not a single-mode element: {el!r}")
    return scipy.linalg.expm(K)[:cutoff, :cutoff]


def _two_mode_generator(el, dim: int) -> sp.csr_matrix:
    a = _lowering(dim)
    eye = sp.identity(dim, dtype=complex, format="csr")
    a1 = sp.kron(a, eye, format="csr")
    a2 = sp.kron(eye, a, format="csr")
    if isinstance(el, Nopa):
        g = np.exp(2j * el.sq.theta)
        K = el.sq.r * (g * a1.conj().T @ a2.conj().T - np.conj(g) * a1 @ a2)
    elif isinstance(el, Beamsplitter):
        t, s = math.sqrt(el.T), math.sqrt(1.0 - el.T)
        V = np.array([[t, s], [s, -t]], dtype=complex)
        # U^+ a U = V a needs U = exp(-i a^+ H a) with V = exp(-iH)
        T_, Z = scipy.linalg.schur(V, output="complex")
        H = Z @ np.diag(-np.angle(np.diag(T_))) @ Z.conj().T
        ops = (a1, a2)
        K = sp.csr_matrix((dim * dim, dim * dim), dtype=complex)
        for p in range(2):
            for q in range(2):
                if abs(H[p, q]) > 0:
                    K = K + (-1j * H[p, q]) * (ops[p].conj().T @ ops[q])
    else:
        raise TypeError(f"not a two-mode element: {el!r}")
    return K.tocsr()


def _apply_single(psi: np.ndarray, U: np.ndarray, mode: int) -> np.ndarray:
    out = np.tensordot(U, psi, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def _apply_pair(psi: np.ndarray, el, j: int, k: int, cutoff: int, pad: int) -> np.ndarray:
    dim = cutoff + pad
    moved = np.moveaxis(psi, (j, k), (0, 1))
    rest = moved.shape[2:]
    block = np.zeros((dim, dim) + rest, dtype=complex)
    block[:cutoff, :cutoff] = moved
    B = block.reshape(dim * dim, -1)
    B = expm_multiply(_two_mode_generator(el, dim), B)
    out = B.reshape((dim, dim) + rest)[:cutoff, :cutoff]
    return np.moveaxis(out, (0, 1), (j, k))


def build_state(
    program: Sequence,
    cutoff: int | None = None,
    M: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    pad: int | None = None,
) -> FockState:
    """Apply ``program`` to the multimode vacuum.

    Raises ``TruncationOverflowError`` naming the step at which the
    accumulated norm deficit first exceeds ``tolerance``.
    """
    M = program_modes(program) if M is None else int(M)
    if M > MAX_MODES:
        raise InvalidArgument(f"oracle supports at most {MAX_MODES} modes, got {M}")
    if cutoff is None:
        cutoff = recommended_cutoff(program)
    if cutoff < 2:
        raise InvalidArgument(f"cutoff must be >= 2, got {cutoff}")
    if pad is None:
        pad = max(12, cutoff // 2)

    psi = np.zeros((cutoff,) * M, dtype=complex)
    psi[(0,) * M] = 1.0
    deficits = []
    for i, el in enumerate(program):
        if isinstance(el, (Displace, Phase, Dopa)):
            psi = _apply_single(psi, _single_mode_unitary(el, cutoff, pad), el.mode)
        elif isinstance(el, (Beamsplitter, Nopa)):
            if el.j == el.k:
                raise InvalidArgument(f"step {i}: two-mode element on a single mode")
            psi = _apply_pair(psi, el, el.j, el.k, cutoff, pad)
        else:
            raise TypeError(f"step {i}: unsupported element {el!r}")
        deficit = max(0.0, 1.0 - float(np.vdot(psi, psi).real))
        deficits.append(deficit)
        if deficit > tolerance:
            raise TruncationOverflowError(f"{i} ({el!r})", deficit, tolerance)
    psi.setflags(write=False)
    final = deficits[-1] if deficits else 0.0
    return FockState(psi, final, tuple(deficits))


def _occupations(state: FockState):
    grids = np.meshgrid(*([np.arange(state.cutoff)] * state.M), indexing="ij")
    return [g.astype(float) for g in grids]


def exact_photon_moments(state: FockState) -> MomentSet:
    p = state.probabilities
    n = _occupations(state)
    mean = np.array([np.sum(p * nj) for nj in n])
    second = np.array([[np.sum(p * nj * nk) for nk in n] for nj in n])
    return MomentSet(mean, second - np.outer(mean, mean))


def exact_qfi_pure(state: FockState, arms: Sequence[int]) -> FisherMatrix:
    """Fisher matrix of the phase shifts ``exp(-i sum N_j phi_j)`` on a pure state."""
    cov = exact_photon_moments(state).subset(arms).cov_n
    return FisherMatrix(4.0 * cov)


def exact_quadrature_stats(state: FockState, mode: int, angle: float) -> tuple[float, float]:
    psi = np.moveaxis(state.tensor, mode, 0)
    c = state.cutoff
    sq = np.sqrt(np.arange(1, c)).reshape((-1,) + (1,) * (state.M - 1))
    a_psi = np.zeros_like(psi)
    a_psi[:-1] = sq * psi[1:]
    aa_psi = np.zeros_like(psi)
    aa_psi[:-1] = sq * a_psi[1:]
    norm = float(np.vdot(psi, psi).real)
    mean_a = np.vdot(psi, a_psi)
    mean_aa = np.vdot(psi, aa_psi)
    n = float(np.vdot(a_psi, a_psi).real)
    u = np.exp(-1j * angle)
    mean_x = math.sqrt(2.0) * np.real(u * mean_a)
    second = np.real(u * u * mean_aa) + n + 0.5 * norm
    return float(mean_x), float(second - mean_x ** 2)


def photon_distribution(state: FockState, mode: int) -> np.ndarray:
    p = state.probabilities
    axes = tuple(i for i in range(state.M) if i != mode)
    marg = p.sum(axis=axes) if axes else p
    return marg / marg.sum()


def cutoff_diagnostics(state: FockState, threshold: float = 1e-8) -> CutoffDiagnostics:
    p = state.probabilities
    top = min(max(2, state.cutoff // 4), state.cutoff - 1)
    tails = []
    for mode in range(state.M):
        axes = tuple(i for i in range(state.M) if i != mode)
        marg = p.sum(axis=axes) if axes else p
        tails.append(float(marg[-top:].sum()))
    return CutoffDiagnostics(state.norm_deficit, np.array(tails), threshold)
