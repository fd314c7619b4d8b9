"""SU(1,1) propagators of a single motional mode in Bogoliubov form.

A propagator ``U`` is stored through its Heisenberg action on the
annihilation operator of the reference well,

    U^dagger a U = mu * a + nu * a^dagger,     |mu|^2 - |nu|^2 = 1.

The map ``U -> M(U) = [[mu, nu], [conj(nu), conj(mu)]]`` is a group
homomorphism, ``M(U2 U1) = M(U2) @ M(U1)``, and forgets only the global phase
of ``U``.  Generators follow ``K1 = (a^2dag + a^2)/4``,
``K2 = (a^2dag - a^2)/4i`` and ``K3 = (a^dag a + 1/2)/2``, so that

* ``exp(i theta K3)`` has ``mu = exp(i theta / 2)``, ``nu = 0``;
* ``exp(2 i r K2)`` has ``mu = cosh r``, ``nu = sinh r``.

Time is measured in units of ``1/omega_ref`` of the reference well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import alpha_of_gamma
from .errors import DomainError, IntegrationError

__all__ = [
    "BogoliubovTransform",
    "EulerAngles",
    "ParametricDrive",
    "IDENTITY",
    "rotation",
    "squeeze",
    "compose",
    "evolve",
    "propagate",
    "euler_decompose",
    "euler_compose",
    "freq_change_target",
    "preparation_transform",
    "solve_preparation",
    "drive_from_squeeze",
    "drive_transform",
    "second_moments",
    "phonon_number",
    "wrap_angle",
]

RTOL = 1e-12
ATOL = 1e-12
SYMPLECTIC_TOL = 1e-9


@dataclass(frozen=True)
class BogoliubovTransform:
    """Heisenberg action ``a -> mu a + nu a^dagger`` of a quadratic propagator."""

    mu: complex = 1.0 + 0.0j
    nu: complex = 0.0j

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "nu", complex(self.nu))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.mu, self.nu], [self.nu.conjugate(), self.mu.conjugate()]])

    @classmethod
    def from_matrix(cls, m) -> "BogoliubovTransform":
        return cls(m[0, 0], m[0, 1])

    @property
    def symplectic_defect(self) -> float:
        return abs(self.mu) ** 2 - abs(self.nu) ** 2 - 1.0

    @property
    def squeeze_parameter(self) -> float:
        # asinh|nu| equals acosh|mu| but keeps full precision for small r
        return math.asinh(abs(self.nu))

    def inverse(self) -> "BogoliubovTransform":
        return BogoliubovTransform(self.mu.conjugate(), -self.nu)

    def then(self, other: "BogoliubovTransform") -> "BogoliubovTransform":
        """Apply ``self`` first and ``other`` afterwards."""
        return compose(self, other)

    def isclose(self, other, atol=1e-10, up_to_phase=False) -> bool:
        """Compare ``(mu, nu)`` entrywise.

        With ``up_to_phase`` both transforms are first rotated so that ``mu`` is
        real and positive, i.e. they are compared modulo a trailing rotation.
        """
        a, b = (self.mu, self.nu), (other.mu, other.nu)
        if up_to_phase:
            a, b = _canonical(*a), _canonical(*b)
        return abs(a[0] - b[0]) <= atol and abs(a[1] - b[1]) <= atol


def _canonical(mu, nu):
    phase = mu / abs(mu)
    return mu / phase, nu / phase


IDENTITY = BogoliubovTransform()


def rotation(theta: float) -> BogoliubovTransform:
    """``exp(i theta K3)``."""
    return BogoliubovTransform(np.exp(0.5j * theta), 0.0)


def squeeze(r: float, phase: float = 0.0) -> BogoliubovTransform:
    """``exp(r/2 (a^2dag e^{i phase} - a^2 e^{-i phase}))``; ``phase=0`` is ``exp(2i r K2)``."""
    return BogoliubovTransform(math.cosh(r), np.exp(1j * phase) * math.sinh(r))


def compose(first: BogoliubovTransform, second: BogoliubovTransform) -> BogoliubovTransform:
    """Transform of applying ``first`` and then ``second`` (operator ``second @ first``)."""
    mu = second.mu * first.mu + second.nu * first.nu.conjugate()
    nu = second.mu * first.nu + second.nu * first.mu.conjugate()
    return BogoliubovTransform(mu, nu)


# -- time evolution ------------------------------------------------------------


def _rhs(gamma_fn, omega):
    def rhs(tau, z):
        a = alpha_of_gamma(gamma_fn(tau / omega))
        mu = complex(z[0], z[1])
        nu = complex(z[2], z[3])
        dmu = -1j * ((1.0 + a) * mu + a * nu.conjugate())
        dnu = -1j * ((1.0 + a) * nu + a * mu.conjugate())
        return [dmu.real, dmu.imag, dnu.real, dnu.imag]

    return rhs


def _pieces_in(schedule, t0, t1):
    out = []
    for a, b, fn in schedule.pieces():
        lo, hi = max(a, t0), min(b, t1)
        if hi > lo:
            out.append((lo, hi, fn))
    return out


def propagate(schedule, omega: float, times, start: BogoliubovTransform = IDENTITY,
              rtol: float = RTOL, atol: float = ATOL, check: float = SYMPLECTIC_TOL):
    """Bogoliubov pairs of ``U(t) U_start`` at each requested time.

    The mode Hamiltonian is ``H = a^dag a + 1/2 + (alpha/2)(a + a^dag)^2`` with
    ``alpha = gamma (1 + gamma/2)``, which gives the linear Heisenberg system

        dmu/dtau = -i[(1 + alpha) mu + alpha conj(nu)]
        dnu/dtau = -i[(1 + alpha) nu + alpha conj(mu)]

    integrated piecewise over the schedule's smooth segments.

    Parameters
    ----------
    schedule
        Any object with ``pieces()`` returning ``(t_start, t_end, gamma_fn)``
        tuples, e.g. :class:`~ionsqueeze.core.GammaSchedule`.
    omega : float
        Reference angular frequency; dimensionless time is ``tau = omega * t``.
    times : array_like
        Increasing output times.  The first time is the start of evolution.

    Returns
    -------
    (ndarray, ndarray)
        Complex arrays ``mu(t)`` and ``nu(t)``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("times must be a non-empty 1-D array")
    if np.any(np.diff(times) < 0):
        raise DomainError("times must be non-decreasing")
    mu_out = np.empty(times.size, dtype=complex)
    nu_out = np.empty(times.size, dtype=complex)
    t_start, t_stop = times[0], times[-1]
    z = np.array([start.mu.real, start.mu.imag, start.nu.real, start.nu.imag])
    done = times <= t_start
    mu_out[done], nu_out[done] = start.mu, start.nu
    for a, b, fn in _pieces_in(schedule, t_start, t_stop):
        sel = (times > a) & (times <= b) & ~done
        sol = solve_ivp(_rhs(fn, omega), (a * omega, b * omega), z, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=bool(sel.any()))
        if sol.status == -1:
            raise IntegrationError(f"Bogoliubov evolution failed: {sol.message}",
                                   time=sol.t[-1] / omega)
        if sel.any():
            y = sol.sol(times[sel] * omega)
            mu_out[sel] = y[0] + 1j * y[1]
            nu_out[sel] = y[2] + 1j * y[3]
            done |= sel
        z = sol.y[:, -1]
    if not done.all():
        raise DomainError("requested times are not covered by the schedule")
    defect = np.max(np.abs(np.abs(mu_out) ** 2 - np.abs(nu_out) ** 2 - 1.0))
    if check is not None and defect > check:
        raise IntegrationError(f"symplectic defect {defect:.3e} exceeds {check:.1e}")
    return mu_out, nu_out


def evolve(schedule, omega: float, t_span=None, start: BogoliubovTransform = IDENTITY,
           **kwargs) -> BogoliubovTransform:
    """Propagator of the mode over ``t_span`` (defaults to the whole schedule)."""
    if t_span is None:
        t_span = (0.0, schedule.total_duration)
    t0, t1 = t_span
    if t1 < t0:
        raise DomainError("t_span must be increasing")
    mu, nu = propagate(schedule, omega, [t0, t1], start=start, **kwargs)
    return BogoliubovTransform(mu[-1], nu[-1])


# -- Euler decomposition -------------------------------------------------------


def wrap_angle(theta: float) -> float:
    """Map an angle to ``(-pi, pi]``."""
    wrapped = math.remainder(theta, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class EulerAngles:
    """``exp(i theta_a K3) exp(2i r_s K2) exp(i theta_b K3)`` with ``r_s >= 0``."""

    theta_a: float
    r_s: float
    theta_b: float


def _arg(z: complex) -> float:
    return 0.0 if z == 0 else wrap_angle(math.atan2(z.imag, z.real))


def euler_decompose(b: BogoliubovTransform) -> EulerAngles:
    """Canonical Euler angles of ``b``.

    From ``mu = e^{i(theta_a+theta_b)/2} cosh r`` and
    ``nu = e^{i(theta_a-theta_b)/2} sinh r`` the phases are
    ``theta_a = arg mu + arg nu`` and ``theta_b = arg mu - arg nu``, each in
    ``(-2pi, 2pi]``.  A negative squeeze is absorbed as ``arg nu = pi``.
    """
    r = b.squeeze_parameter
    pm = _arg(b.mu)
    pn = _arg(b.nu) if r > 0 else 0.0
    return EulerAngles(pm + pn, r, pm - pn)


def euler_compose(angles: EulerAngles) -> BogoliubovTransform:
    ta, r, tb = angles.theta_a, angles.r_s, angles.theta_b
    return BogoliubovTransform(np.exp(0.5j * (ta + tb)) * math.cosh(r),
                               np.exp(0.5j * (ta - tb)) * math.sinh(r))


# -- preparation ---------------------------------------------------------------


def freq_change_target(gamma_f: float) -> BogoliubovTransform:
    """Squeeze mapping the reference ground state onto that of ``(1 + gamma_f) omega_ref``.

    ``r_c = -ln(1 + gamma_f) / 2`` along the ``K2`` axis.
    """
    if not gamma_f > -1.0:
        raise DomainError(f"target detuning must exceed -1, got {gamma_f}")
    return squeeze(-0.5 * math.log1p(gamma_f))


def preparation_transform(u_s: BogoliubovTransform, u_c: BogoliubovTransform,
                          order: str = "before") -> BogoliubovTransform:
    """Solve ``U_s U_p = U_c`` (``before``) or ``U_p U_s = U_c`` (``after``) for ``U_p``."""
    if order == "before":
        return compose(u_c, u_s.inverse())
    if order == "after":
        return compose(u_s.inverse(), u_c)
    raise DomainError(f"order must be 'before' or 'after', got {order!r}")


def solve_preparation(u_s: BogoliubovTransform, u_c: BogoliubovTransform,
                      order: str = "before"):
    """Squeeze ``(r_p, theta_m)`` of the preparation propagator.

    The trailing rotation ``theta_n`` of the Euler form only multiplies the
    vacuum by a phase and is not returned; use :func:`preparation_transform`
    for the full element.
    """
    angles = euler_decompose(preparation_transform(u_s, u_c, order))
    return angles.r_s, angles.theta_a


@dataclass(frozen=True)
class ParametricDrive:
    """Trap-curvature modulation ``hbar g sin(2 omega0 t - theta_I) (x/x0)^2`` for ``t_p``."""

    g: float
    t_p: float
    theta_I: float
    omega0: float

    def __post_init__(self):
        if self.g < 0 or self.t_p < 0:
            raise DomainError("drive amplitude and duration must be non-negative")

    @property
    def squeeze_parameter(self) -> float:
        return self.g * self.t_p

    @property
    def g_hz(self) -> float:
        return self.g / (2 * math.pi)


def drive_from_squeeze(r_p: float, theta_m: float, t_p: float, omega0: float) -> ParametricDrive:
    """Parametric drive whose rotating-wave propagator prepares ``(r_p, theta_m)`` from vacuum."""
    if not t_p > 0:
        raise DomainError("t_p must be positive")
    if r_p < 0:
        raise DomainError("r_p must be non-negative")
    return ParametricDrive(g=r_p / t_p, t_p=t_p, theta_I=wrap_angle(2 * omega0 * t_p + theta_m),
                           omega0=omega0)


def drive_transform(drive: ParametricDrive) -> BogoliubovTransform:
    """Lab-frame propagator of a drive under the rotating-wave approximation.

    The interaction-picture squeeze of strength ``g t_p`` and phase ``theta_I``
    is followed by the free rotation ``exp(-i omega0 t_p a^dag a)``.
    """
    interaction = squeeze(drive.g * drive.t_p, drive.theta_I)
    return compose(interaction, rotation(-2.0 * drive.omega0 * drive.t_p))


# -- observables ---------------------------------------------------------------


def second_moments(b: BogoliubovTransform):
    """``(<a^dag a>, <a^2>, <a^dag^2>)`` of ``U|0>`` in the reference basis."""
    n = abs(b.nu) ** 2
    aa = b.mu * b.nu
    return n, aa, aa.conjugate()


def phonon_number(b: BogoliubovTransform, gamma: float = 0.0) -> float:
    """Mean occupation of ``U|0>`` counted in the well of frequency ``(1 + gamma) omega_ref``.

    Uses ``<H_w>/(hbar w) - 1/2`` with ``H_w`` written in reference-well
    ladder operators, ``<(a + a^dag)^2> = |mu + conj(nu)|^2``.
    """
    if not gamma > -1.0:
        raise DomainError(f"measurement basis needs gamma > -1, got {gamma}")
    n, _, _ = second_moments(b)
    xx = abs(b.mu + b.nu.conjugate()) ** 2
    return (n + 0.5 + 0.5 * alpha_of_gamma(gamma) * xx) / (1.0 + gamma) - 0.5


def phonon_series(mu, nu, gamma: float = 0.0) -> np.ndarray:
    """Vectorised :func:`phonon_number` over arrays of ``mu`` and ``nu``."""
    if not gamma > -1.0:
        raise DomainError(f"measurement basis needs gamma > -1, got {gamma}")
    mu, nu = np.asarray(mu), np.asarray(nu)
    xx = np.abs(mu + np.conj(nu)) ** 2
    return (np.abs(nu) ** 2 + 0.5 + 0.5 * alpha_of_gamma(gamma) * xx) / (1.0 + gamma) - 0.5
