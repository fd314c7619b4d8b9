"""Truncated number-basis oracle for single-mode quadratic dynamics.

This path never touches the Bogoliubov algebra: states are amplitude vectors
over ``|0>, ..., |N>`` and are propagated by integrating the Schrodinger
equation with a banded Hamiltonian.  It exists to cross-check
:mod:`ionsqueeze.su11` and the rotating-wave treatment of parametric drives.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .core import alpha_of_gamma
from .errors import DomainError, IntegrationError, UnderTruncationError

__all__ = [
    "FockState",
    "DEFAULT_TRUNCATION",
    "vacuum",
    "number_state",
    "squeezed_vacuum",
    "annihilation",
    "quadrature_squared",
    "mode_hamiltonian",
    "tail_mass",
    "evolve_schedule",
    "evolve_exact_modulation",
    "second_moments",
    "phonon_number",
    "fidelity",
]

DEFAULT_TRUNCATION = 256
TAIL_LIMIT = 1e-8
RTOL = 1e-10
ATOL = 1e-12
RWA_WARN_RATIO = 0.2


@dataclass(frozen=True)
class FockState:
    """Pure state ``sum_n amplitudes[n] |n>`` truncated at ``n = truncation``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise DomainError("amplitudes must be a 1-D vector with at least two entries")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def truncation(self) -> int:
        return self.amplitudes.size - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tail_mass(self) -> float:
        return tail_mass(self.amplitudes)

    def mean_number(self) -> float:
        n = np.arange(self.amplitudes.size)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))


def vacuum(truncation: int = DEFAULT_TRUNCATION) -> FockState:
    return number_state(0, truncation)


def number_state(n: int, truncation: int = DEFAULT_TRUNCATION) -> FockState:
    if not 0 <= n <= truncation:
        raise DomainError(f"number state {n} outside truncation {truncation}")
    amps = np.zeros(truncation + 1, dtype=complex)
    amps[n] = 1.0
    return FockState(amps)


def squeezed_vacuum(r: float, phase: float = 0.0, truncation: int = DEFAULT_TRUNCATION) -> FockState:
    """``exp(r/2 (a^2dag e^{i phase} - a^2 e^{-i phase}))|0>`` from its closed-form expansion.

    ``c_{2k} = (e^{i phase} tanh r)^k sqrt((2k)!) / (2^k k! sqrt(cosh r))``.
    """
    amps = np.zeros(truncation + 1, dtype=complex)
    k = np.arange(truncation // 2 + 1)
    t = math.tanh(abs(r))
    with np.errstate(divide="ignore"):
        log_mag = k * (math.log(t) if t > 0 else -np.inf) + 0.5 * gammaln(2 * k + 1) \
            - k * math.log(2) - gammaln(k + 1) - 0.5 * math.log(math.cosh(r))
    log_mag[0] = -0.5 * math.log(math.cosh(r))
    ph = phase + (math.pi if r < 0 else 0.0)
    amps[2 * k] = np.exp(log_mag) * np.exp(1j * ph * k)
    return FockState(amps)


@lru_cache(maxsize=16)
def annihilation(truncation: int) -> sp.csr_matrix:
    n = np.arange(1, truncation + 1)
    return sp.diags(np.sqrt(n), 1, shape=(truncation + 1, truncation + 1), format="csr")


@lru_cache(maxsize=16)
def quadrature_squared(truncation: int) -> sp.csr_matrix:
    """``(a + a^dag)^2 = a^2 + a^2dag + 2 a^dag a + 1`` as an exactly symmetric band.

    Built from the normal-ordered form so that the truncation edge does not
    break hermiticity.
    """
    n = np.arange(truncation + 1, dtype=float)
    off = np.sqrt(n[2:] * (n[2:] - 1))
    return sp.diags([off, 2 * n + 1, off], [-2, 0, 2], format="csr")


@lru_cache(maxsize=16)
def _number_diag(truncation: int) -> np.ndarray:
    return np.arange(truncation + 1, dtype=float) + 0.5


def mode_hamiltonian(gamma: float, truncation: int = DEFAULT_TRUNCATION) -> sp.csr_matrix:
    """``(a^dag a + 1/2) + (alpha/2)(a + a^dag)^2`` in units of ``hbar omega_ref``."""
    alpha = alpha_of_gamma(gamma)
    return (sp.diags(_number_diag(truncation)) + 0.5 * alpha * quadrature_squared(truncation)).tocsr()


def tail_mass(amplitudes) -> float:
    """Probability above ``0.9 N``."""
    amplitudes = np.asarray(amplitudes)
    cut = int(math.floor(0.9 * (amplitudes.size - 1))) + 1
    return float(np.sum(np.abs(amplitudes[cut:]) ** 2))


def _integrate(state, coeff, tau_span, samples, rtol, atol, time_scale, label):
    """Integrate ``i dpsi/dtau = [D + coeff(tau) X2] psi`` and check truncation."""
    N = state.truncation
    tail0 = state.tail_mass()
    if tail0 > TAIL_LIMIT:
        raise UnderTruncationError(
            f"initial state already has tail mass {tail0:.2e} above {TAIL_LIMIT:.0e}",
            time=tau_span[0] / time_scale, tail_mass=tail0)
    diag = _number_diag(N)
    x2 = quadrature_squared(N)

    def rhs(tau, psi):
        return -1j * (diag * psi + coeff(tau) * (x2 @ psi))

    t_eval = np.linspace(tau_span[0], tau_span[1], max(samples, 2))
    if tau_span[1] == tau_span[0]:
        return state
    sol = solve_ivp(rhs, tau_span, state.amplitudes, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval)
    if sol.status == -1:
        raise IntegrationError(f"{label}: {sol.message}", time=sol.t[-1] / time_scale)
    cut = int(math.floor(0.9 * N)) + 1
    tails = np.sum(np.abs(sol.y[cut:]) ** 2, axis=0)
    worst = int(np.argmax(tails))
    if tails[worst] > TAIL_LIMIT:
        raise UnderTruncationError(
            f"{label}: tail mass {tails[worst]:.2e} at t = {sol.t[worst] / time_scale:.6e} "
            f"exceeds {TAIL_LIMIT:.0e} with N = {N}",
            time=sol.t[worst] / time_scale, tail_mass=float(tails[worst]))
    return FockState(sol.y[:, -1])


def evolve_schedule(state: FockState, schedule, omega0: float, t_span=None, samples: int = 64,
                    rtol: float = RTOL, atol: float = ATOL) -> FockState:
    """Evolve under ``(a^dag a + 1/2) + (gamma/2)(1 + gamma/2)(a^dag + a)^2``.

    ``schedule`` is any object with ``pieces()`` (see :mod:`ionsqueeze.su11`);
    times are in the schedule's units and ``tau = omega0 * t``.
    """
    if t_span is None:
        t_span = (0.0, schedule.total_duration)
    t0, t1 = t_span
    for a, b, fn in schedule.pieces():
        lo, hi = max(a, t0), min(b, t1)
        if hi <= lo:
            continue

        def coeff(tau, fn=fn):
            return 0.5 * alpha_of_gamma(fn(tau / omega0))

        state = _integrate(state, coeff, (lo * omega0, hi * omega0), samples, rtol, atol, omega0,
                           "Fock schedule evolution")
    return state


def evolve_exact_modulation(state: FockState, g: float, theta: float, omega0: float,
                            duration: float, samples: int = 64, rtol: float = RTOL,
                            atol: float = ATOL) -> FockState:
    """Evolve under ``hbar omega0 a^dag a + hbar g sin(2 omega0 t - theta)(a + a^dag)^2``.

    This is the sinusoidally modulated oscillator before any rotating-wave
    approximation; counter-rotating terms are kept.  ``g`` is in rad/s.
    """
    ratio = g / omega0
    if ratio >= RWA_WARN_RATIO:
        warnings.warn(f"g/omega0 = {ratio:.3f} is not small; the rotating-wave comparison degrades",
                      stacklevel=2)

    def coeff(tau):
        return ratio * math.sin(2.0 * tau - theta)

    return _integrate(state, coeff, (0.0, duration * omega0), samples, rtol, atol, omega0,
                      "Fock modulation evolution")


def second_moments(state: FockState):
    """``(<a^dag a>, <a^2>, <a^dag^2>)`` by direct band contraction."""
    c = state.amplitudes
    n = np.arange(c.size)
    num = float(np.sum(n * np.abs(c) ** 2))
    # a^2 |n> = sqrt(n(n-1)) |n-2>
    aa = complex(np.sum(np.conj(c[:-2]) * np.sqrt(n[2:] * (n[2:] - 1)) * c[2:]))
    return num, aa, aa.conjugate()


def phonon_number(state: FockState, gamma: float = 0.0) -> float:
    """``<H_w>/(hbar w) - 1/2`` for the well ``w = (1 + gamma) omega_ref``, via the band matrix."""
    if not gamma > -1.0:
        raise DomainError(f"measurement basis needs gamma > -1, got {gamma}")
    c = state.amplitudes
    energy = np.vdot(c, mode_hamiltonian(gamma, state.truncation) @ c).real
    return float(energy / (1.0 + gamma) - 0.5)


def fidelity(a: FockState, b: FockState) -> float:
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
