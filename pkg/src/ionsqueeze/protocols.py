"""Frequency-change and two-ion separation protocols.

Both protocols prepare each motional mode with a squeeze so that, after the
potential has changed, the mode ends in the ground state of the final well.
The separation protocol treats the center-of-mass (COM) and stretch (STR)
modes independently; the STR curvature follows the classical ion separation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import su11
from .classical import (
    CatchLaw,
    ClassicalTrajectory,
    final_equilibrium,
    find_free_flight_duration,
    integrate_two_ion,
)
from .core import GammaSchedule, PhysicalParams, frequency_ramp, separation_schedule
from .errors import DomainError, IntegrationError

__all__ = [
    "gamma_stretch",
    "StretchSchedule",
    "FrequencyChangeReport",
    "run_frequency_change",
    "sweep_frequency_change",
    "SeparationPlan",
    "ModeReport",
    "SeparationResult",
    "plan_separation",
    "run_separation",
    "PREPARATION_TOL",
    "VALIDITY_LIMIT",
]

SQRT3 = math.sqrt(3.0)
PREPARATION_TOL = 1e-9
VALIDITY_LIMIT = 0.05


def gamma_stretch(gamma: float, c_s: float, c_s0: float) -> float:
    """Effective STR detuning ``sqrt((1 + gamma)^2 + 2 (c_s0/c_s)^3) - 1`` relative to ``omega0``.

    ``c_s`` is the classical half separation and ``c_s0`` its initial
    equilibrium value.
    """
    if not c_s > 0:
        raise DomainError(f"half separation must be positive, got {c_s}")
    return math.sqrt((1.0 + gamma) ** 2 + 2.0 * (c_s0 / c_s) ** 3) - 1.0


class StretchSchedule:
    """STR detuning along a classical trajectory, relative to a reference frequency.

    With ``reference = sqrt(3)`` (the default) the detuning is expressed in the
    initial STR well, ``1 + gamma' = (1 + gamma_s) / sqrt(3)``.
    """

    def __init__(self, schedule: GammaSchedule, trajectory: ClassicalTrajectory,
                 c_s0: Optional[float] = None, reference: float = SQRT3):
        self.schedule = schedule
        self.trajectory = trajectory
        self.c_s0 = trajectory.params.equilibrium_half_separation() if c_s0 is None else c_s0
        self.reference = reference

    @property
    def total_duration(self) -> float:
        return self.schedule.total_duration

    def _wrap(self, fn):
        def gamma(t):
            c_s = self.trajectory.half_separation_at(t)
            return (1.0 + gamma_stretch(fn(t), c_s, self.c_s0)) / self.reference - 1.0

        return gamma

    def pieces(self):
        return [(a, b, self._wrap(fn)) for a, b, fn in self.schedule.pieces()]

    def __call__(self, t: float) -> float:
        seg = self.schedule.segment_at(t)
        return self._wrap(seg.gamma)(t)


# -- frequency change ------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyChangeReport:
    """Single-mode report; phonons are counted in the initial and final wells."""

    times: np.ndarray
    phonons_initial: np.ndarray
    phonons_final: np.ndarray
    gamma_final: float
    t_f: float
    omega0: float
    with_preparation: bool
    order: str
    u_s: su11.BogoliubovTransform
    preparation: su11.BogoliubovTransform
    r_p: float
    theta_m: float
    final_transform: su11.BogoliubovTransform

    @property
    def final_phonons_initial(self) -> float:
        return su11.phonon_number(self.final_transform, 0.0)

    @property
    def final_phonons_final(self) -> float:
        return su11.phonon_number(self.final_transform, self.gamma_final)


def run_frequency_change(omega0: float, gamma_final: float, t_f: float,
                         with_preparation: bool = True, order: str = "before",
                         samples: int = 201) -> FrequencyChangeReport:
    """Ramp ``gamma(t) = gamma_final sin^2(pi t / 2 t_f)`` with an optional preparation squeeze.

    With ``order='before'`` the preparation is applied at ``t = 0`` and the
    series shows the prepared state; with ``'after'`` the series shows the bare
    ramp and the preparation only enters ``final_transform``.
    """
    if not gamma_final > -1.0:
        raise DomainError("gamma_final must exceed -1")
    if t_f < 0:
        raise DomainError("t_f must be non-negative")
    schedule = frequency_ramp(gamma_final, t_f)
    times = np.linspace(0.0, t_f, max(samples, 1)) if t_f > 0 else np.zeros(1)
    u_s = su11.evolve(schedule, omega0)
    u_c = su11.freq_change_target(gamma_final)
    if with_preparation:
        prep = su11.preparation_transform(u_s, u_c, order)
        r_p, theta_m = su11.solve_preparation(u_s, u_c, order)
    else:
        prep, r_p, theta_m = su11.IDENTITY, 0.0, 0.0
    start = prep if order == "before" else su11.IDENTITY
    mu, nu = su11.propagate(schedule, omega0, times, start=start)
    final = su11.compose(prep, u_s) if order == "before" else su11.compose(u_s, prep)
    return FrequencyChangeReport(
        times=times,
        phonons_initial=su11.phonon_series(mu, nu, 0.0),
        phonons_final=su11.phonon_series(mu, nu, gamma_final),
        gamma_final=gamma_final, t_f=t_f, omega0=omega0,
        with_preparation=with_preparation, order=order,
        u_s=u_s, preparation=prep, r_p=r_p, theta_m=theta_m, final_transform=final,
    )


def sweep_frequency_change(omega0: float, gamma_final: float, t_f_values,
                           with_preparation: bool = False, order: str = "before",
                           workers: int = 1) -> np.ndarray:
    """Final occupation in the final well for each ramp time in ``t_f_values``.

    Results are returned in the order of ``t_f_values`` whatever the number
    of worker processes.
    """
    t_f_values = [float(t) for t in t_f_values]
    args = [(omega0, gamma_final, t, with_preparation, order) for t in t_f_values]
    if workers > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_final_n, args))
    else:
        values = [_final_n(a) for a in args]
    return np.array(values)


def _final_n(args):
    omega0, gamma_final, t_f, with_preparation, order = args
    return run_frequency_change(omega0, gamma_final, t_f, with_preparation, order,
                                samples=1).final_phonons_final


# -- separation ------------------------------------------------------------------


@dataclass(frozen=True)
class SeparationPlan:
    """Timings, solved squeezes and drives for a same-species separation.

    Times are in s.  The STR mode uses ladder operators of the initial STR well
    ``sqrt(3) omega0``; its drive modulates at twice that frequency.
    """

    params: PhysicalParams
    t_p: float
    t_s1: float
    t_s2: float
    t_s3: float
    eta: float
    target_separation: float
    order: str
    str_target_gamma: float
    r_p_com: float
    theta_m_com: float
    r_p_str: float
    theta_m_str: float
    drive_com: Optional[su11.ParametricDrive]
    drive_str: Optional[su11.ParametricDrive]
    prep_com: su11.BogoliubovTransform = field(repr=False)
    prep_str: su11.BogoliubovTransform = field(repr=False)

    def __post_init__(self):
        for name in ("t_p", "t_s1", "t_s2", "t_s3", "eta"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")

    @property
    def omega0(self) -> float:
        return self.params.omega0

    @property
    def t_f(self) -> float:
        return self.t_p + self.t_s1 + self.t_s2 + self.t_s3

    @property
    def drives(self):
        """``(g_c, g_s, theta_I_c, theta_I_s)``."""
        dc, ds = self.drive_com, self.drive_str
        return (dc.g if dc else 0.0, ds.g if ds else 0.0,
                dc.theta_I if dc else 0.0, ds.theta_I if ds else 0.0)

    @property
    def schedule(self) -> GammaSchedule:
        return separation_schedule(self.t_p, self.t_s1, self.t_s2, self.t_s3)

    @property
    def catch(self) -> CatchLaw:
        return CatchLaw(eta=self.eta, activation=self.t_p + self.t_s1 + self.t_s2)


@dataclass(frozen=True)
class ModeReport:
    """Phonon time series of the COM mode and the STR mode in two bases."""

    times: np.ndarray
    phonons_com_omega0: np.ndarray
    phonons_str_sqrt3: np.ndarray
    phonons_str_omega0: np.ndarray


@dataclass(frozen=True)
class SeparationResult:
    """Output of :func:`run_separation`.

    ``quantum_*`` entries are the occupations of the Gaussian fluctuations in
    the co-moving frame.  ``residual_*`` entries are the coherent occupations
    carried by the classical motion left over about the final equilibrium.
    """

    plan: SeparationPlan
    trajectory: ClassicalTrajectory
    report: ModeReport
    quantum_com: float
    quantum_str: float
    residual_com: float
    residual_str: float
    residual_str_sqrt3: float
    residual_amplitude: float
    max_validity_ratio: float
    com_final: su11.BogoliubovTransform
    str_final: su11.BogoliubovTransform

    @property
    def final_separation(self) -> float:
        return float(self.trajectory.separation[-1])

    @property
    def total_com(self) -> float:
        return self.quantum_com + self.residual_com

    @property
    def total_str(self) -> float:
        return self.quantum_str + self.residual_str

    @property
    def total_str_sqrt3(self) -> float:
        return float(self.report.phonons_str_sqrt3[-1]) + self.residual_str_sqrt3

    @property
    def validity_ok(self) -> bool:
        return self.max_validity_ratio <= VALIDITY_LIMIT


def _mode_drive(r_p, theta_m, t_p, omega_ref):
    if t_p > 0:
        return su11.drive_from_squeeze(r_p, theta_m, t_p, omega_ref)
    return None


def plan_separation(params: PhysicalParams, t_p: float, t_s1: float, t_s3: float, eta: float,
                    target_separation: Optional[float] = None, t_s2: Optional[float] = None,
                    order: str = "before", str_target: str = "omega0") -> SeparationPlan:
    """Solve the free-flight time, the preparation squeezes and the drives.

    Parameters
    ----------
    target_separation : float, optional
        Final ion separation in m; required when ``t_s2`` is not given.
    str_target : {'omega0', 'final'}
        Final STR well used as the preparation target: exactly ``omega0`` or
        the STR frequency at ``t_f`` including the residual Coulomb curvature.
    """
    if t_s2 is None:
        if target_separation is None:
            raise DomainError("give either target_separation or t_s2")
        t_s2 = find_free_flight_duration(params, t_p, t_s1, t_s3, eta, target_separation)
    schedule = separation_schedule(t_p, t_s1, t_s2, t_s3)
    catch = CatchLaw(eta=eta, activation=t_p + t_s1 + t_s2)
    t_f = schedule.total_duration
    traj = integrate_two_ion(params, schedule, catch, [0.0, t_f])
    if target_separation is None:
        target_separation = float(traj.separation[-1])
    w0 = params.omega0
    u_s_com = su11.evolve(schedule, w0, (t_p, t_f))
    u_c_com = su11.freq_change_target(schedule(t_f))
    stretch = StretchSchedule(schedule, traj)
    u_s_str = su11.evolve(stretch, SQRT3 * w0, (t_p, t_f))
    if str_target == "omega0":
        str_gamma = 1.0 / SQRT3 - 1.0
    elif str_target == "final":
        str_gamma = stretch(t_f)
    else:
        raise DomainError(f"str_target must be 'omega0' or 'final', got {str_target!r}")
    u_c_str = su11.freq_change_target(str_gamma)

    prep_com = su11.preparation_transform(u_s_com, u_c_com, order)
    prep_str = su11.preparation_transform(u_s_str, u_c_str, order)
    r_c, th_c = su11.solve_preparation(u_s_com, u_c_com, order)
    r_s, th_s = su11.solve_preparation(u_s_str, u_c_str, order)
    for label, u_s, prep, gamma in (("COM", u_s_com, prep_com, schedule(t_f)),
                                    ("STR", u_s_str, prep_str, str_gamma)):
        total = su11.compose(prep, u_s) if order == "before" else su11.compose(u_s, prep)
        residual = su11.phonon_number(total, gamma)
        if abs(residual) > PREPARATION_TOL:
            raise IntegrationError(f"{label} preparation leaves {residual:.3e} phonons")
    return SeparationPlan(
        params=params, t_p=t_p, t_s1=t_s1, t_s2=t_s2, t_s3=t_s3, eta=eta,
        target_separation=target_separation, order=order, str_target_gamma=str_gamma,
        r_p_com=r_c, theta_m_com=th_c, r_p_str=r_s, theta_m_str=th_s,
        drive_com=_mode_drive(r_c, th_c, t_p, w0),
        drive_str=_mode_drive(r_s, th_s, t_p, SQRT3 * w0),
        prep_com=prep_com, prep_str=prep_str,
    )


def _squeeze_stage(drive, prep, omega_ref, times):
    """Lab-frame state during an ideal rotating-wave drive, or an instantaneous preparation."""
    mu = np.full(times.size, prep.mu, dtype=complex)
    nu = np.full(times.size, prep.nu, dtype=complex)
    if drive is None:
        return mu, nu, prep
    for i, t in enumerate(times):
        b = su11.drive_transform(su11.ParametricDrive(drive.g, t, drive.theta_I, omega_ref))
        mu[i], nu[i] = b.mu, b.nu
    return mu, nu, su11.drive_transform(drive)


def _mode_series(schedule, omega_ref, drive, prep, order, times, t_p):
    hold = times[times <= t_p]
    mu_h, nu_h, start = _squeeze_stage(drive if order == "before" else None,
                                       prep if order == "before" else su11.IDENTITY,
                                       omega_ref, hold)
    later = times[times > t_p]
    if later.size:
        mu_l, nu_l = su11.propagate(schedule, omega_ref, np.concatenate([[t_p], later]),
                                    start=start)
        mu_l, nu_l = mu_l[1:], nu_l[1:]
    else:
        mu_l = nu_l = np.empty(0, dtype=complex)
    u_rest = su11.evolve(schedule, omega_ref, (t_p, schedule.total_duration), start=start)
    if order == "after":
        u_rest = su11.compose(u_rest, prep)
    return np.concatenate([mu_h, mu_l]), np.concatenate([nu_h, nu_l]), u_rest


def _coherent_occupation(M, dx, dv, omega, hbar):
    return 0.5 * M * (dv**2 + (omega * dx) ** 2) / (hbar * omega)


def _residual_phonons(params, traj, str_gamma):
    """Coherent occupations of the leftover classical motion.

    Returns the COM value in the final well, the STR values in the target
    well and in the initial ``sqrt(3) omega0`` well, and the relative residual
    oscillation amplitude.
    """
    eq, amplitude = final_equilibrium(traj)
    M, hbar = 2.0 * params.mass, params.hbar
    w_com = params.omega0 * traj.well_strength[-1]
    w_target = SQRT3 * params.omega0 * (1.0 + str_gamma)
    x = traj.positions[:, -1] - eq
    v = traj.velocities[:, -1]
    dx_c, dv_c = 0.5 * (x[0] + x[1]), 0.5 * (v[0] + v[1])
    dx_s, dv_s = 0.5 * (x[0] - x[1]), 0.5 * (v[0] - v[1])
    return (
        float(_coherent_occupation(M, dx_c, dv_c, w_com, hbar)),
        float(_coherent_occupation(M, dx_s, dv_s, w_target, hbar)),
        float(_coherent_occupation(M, dx_s, dv_s, SQRT3 * params.omega0, hbar)),
        amplitude,
    )


def run_separation(plan: SeparationPlan, samples: int = 401) -> SeparationResult:
    """Classical two-ion trajectory plus COM/STR phonon series for a plan.

    During ``[0, t_p]`` each mode follows the ideal rotating-wave drive (the
    ions rest at equilibrium); afterwards the modes evolve under the release,
    free-flight and catch schedule, the STR curvature following the classical
    half separation.
    """
    params = plan.params
    schedule = plan.schedule
    t_f = plan.t_f
    times = np.linspace(0.0, t_f, max(samples, 2))
    traj = integrate_two_ion(params, schedule, plan.catch, times)
    w0 = params.omega0
    stretch = StretchSchedule(schedule, traj)

    mu_c, nu_c, com_final = _mode_series(schedule, w0, plan.drive_com, plan.prep_com,
                                         plan.order, times, plan.t_p)
    mu_s, nu_s, str_final = _mode_series(stretch, SQRT3 * w0, plan.drive_str, plan.prep_str,
                                         plan.order, times, plan.t_p)
    omega0_in_str = 1.0 / SQRT3 - 1.0
    report = ModeReport(
        times=times,
        phonons_com_omega0=su11.phonon_series(mu_c, nu_c, 0.0),
        phonons_str_sqrt3=su11.phonon_series(mu_s, nu_s, 0.0),
        phonons_str_omega0=su11.phonon_series(mu_s, nu_s, omega0_in_str),
    )

    # wave-packet extent relative to the half separation
    m = params.mass
    x0_com = math.sqrt(params.hbar / (2 * 2 * m * w0))
    x0_str = math.sqrt(params.hbar / (2 * 2 * m * SQRT3 * w0))
    extent = np.sqrt(x0_com**2 * np.abs(mu_c + np.conj(nu_c)) ** 2
                     + x0_str**2 * np.abs(mu_s + np.conj(nu_s)) ** 2)
    ratio = float(np.max(extent / (0.5 * traj.separation)))
    if ratio > VALIDITY_LIMIT:
        warnings.warn(f"wave-packet extent reaches {ratio:.3f} of the half separation; "
                      "the quadratic Coulomb expansion is unreliable", stacklevel=2)

    res_com, res_str, res_str_sqrt3, amplitude = _residual_phonons(params, traj,
                                                                   plan.str_target_gamma)
    return SeparationResult(
        plan=plan, trajectory=traj, report=report,
        quantum_com=su11.phonon_number(com_final, schedule(t_f)),
        quantum_str=su11.phonon_number(str_final, plan.str_target_gamma),
        residual_com=res_com, residual_str=res_str, residual_str_sqrt3=res_str_sqrt3,
        residual_amplitude=amplitude,
        max_validity_ratio=ratio, com_final=com_final, str_final=str_final,
    )
