"""Physical parameters, unit conventions and the detuning schedule type.

All dynamics in this package are integrated in dimensionless units where the
reference mode has ``hbar = m = omega = 1``.  SI quantities only appear at the
boundaries (parameter objects, schedules expressed in seconds, reports).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import constants

from .errors import DomainError

__all__ = [
    "PhysicalParams",
    "beryllium9",
    "DimensionlessFrame",
    "Segment",
    "GammaSchedule",
    "SEGMENT_FORMS",
    "gamma_eval",
    "alpha_of_gamma",
    "constant_schedule",
    "frequency_ramp",
    "separation_schedule",
]

COULOMB_CONSTANT = 1.0 / (4.0 * math.pi * constants.epsilon_0)
BE9_ION_MASS = 9.0121831 * constants.atomic_mass - constants.electron_mass

# Relative slack used when deciding whether a time lies inside a schedule.
_TIME_SLACK = 1e-12


@dataclass(frozen=True)
class PhysicalParams:
    """Ion species and trap parameters in SI units.

    Parameters
    ----------
    mass : float
        Ion mass in kg.
    charge : float
        Ion charge in C.
    omega0 : float
        Initial secular angular frequency in rad/s.
    hbar : float
        Reduced Planck constant in J s.
    coulomb_constant : float
        Electrostatic constant ``k`` in N m^2 / C^2.
    """

    mass: float
    charge: float
    omega0: float
    hbar: float = constants.hbar
    coulomb_constant: float = COULOMB_CONSTANT

    def __post_init__(self):
        for name in ("mass", "charge", "omega0", "hbar", "coulomb_constant"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and positive, got {value!r}")
        if not (np.isfinite(self.x0) and self.x0 > 0):
            raise DomainError("ground-state length scale is not finite")

    @property
    def x0(self) -> float:
        """Ground-state length scale ``sqrt(hbar / (2 m omega0))`` in m."""
        return math.sqrt(self.hbar / (2.0 * self.mass * self.omega0))

    @property
    def coulomb_strength(self) -> float:
        """``k e^2`` in J m."""
        return self.coulomb_constant * self.charge**2

    def equilibrium_half_separation(self) -> float:
        """Half distance between two ions at rest in a common well of ``omega0``."""
        return (self.coulomb_strength / (4.0 * self.mass * self.omega0**2)) ** (1.0 / 3.0)

    def frame(self, omega_ref=None, mass=None) -> "DimensionlessFrame":
        return DimensionlessFrame(
            omega_ref=self.omega0 if omega_ref is None else omega_ref,
            mass=self.mass if mass is None else mass,
            hbar=self.hbar,
        )

    def with_omega0(self, omega0):
        return PhysicalParams(self.mass, self.charge, omega0, self.hbar, self.coulomb_constant)


def beryllium9(omega0=2 * math.pi * 1e6) -> PhysicalParams:
    """Singly charged 9Be+ in a trap of secular frequency ``omega0`` (rad/s)."""
    return PhysicalParams(mass=BE9_ION_MASS, charge=constants.e, omega0=omega0)


@dataclass(frozen=True)
class DimensionlessFrame:
    """Unit system built on a reference oscillator of frequency ``omega_ref``.

    Time is measured in ``1/omega_ref`` and length in the ground-state length
    ``sqrt(hbar / (2 m omega_ref))`` of that oscillator.  Velocities are
    measured in ``length_unit * omega_ref``.
    """

    omega_ref: float
    mass: float
    hbar: float = constants.hbar

    def __post_init__(self):
        for name in ("omega_ref", "mass", "hbar"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def time_unit(self) -> float:
        return 1.0 / self.omega_ref

    @property
    def length_unit(self) -> float:
        return math.sqrt(self.hbar / (2.0 * self.mass * self.omega_ref))

    @property
    def velocity_unit(self) -> float:
        return self.length_unit * self.omega_ref

    @property
    def energy_unit(self) -> float:
        # m * (length_unit * omega)^2 = hbar * omega / 2
        return self.mass * self.velocity_unit**2

    def time(self, t_si):
        return np.asarray(t_si) * self.omega_ref if np.ndim(t_si) else t_si * self.omega_ref

    def time_si(self, tau):
        return np.asarray(tau) / self.omega_ref if np.ndim(tau) else tau / self.omega_ref

    def length(self, x_si):
        return np.asarray(x_si) / self.length_unit if np.ndim(x_si) else x_si / self.length_unit

    def length_si(self, x):
        return np.asarray(x) * self.length_unit if np.ndim(x) else x * self.length_unit

    def velocity(self, v_si):
        return np.asarray(v_si) / self.velocity_unit if np.ndim(v_si) else v_si / self.velocity_unit

    def velocity_si(self, v):
        return np.asarray(v) * self.velocity_unit if np.ndim(v) else v * self.velocity_unit


def alpha_of_gamma(gamma):
    """Quadratic-coupling coefficient ``gamma * (1 + gamma / 2)``.

    With ``omega = (1 + gamma) omega0`` the curvature ratio satisfies
    ``(1 + gamma)^2 == 1 + 2 alpha``.
    """
    return gamma * (1.0 + 0.5 * gamma)


# -- schedules -----------------------------------------------------------------


def _phase(t, t_start, duration):
    return math.pi * (t - t_start) / (2.0 * duration)


SEGMENT_FORMS: dict[str, Callable[[float, float, float, float], float]] = {
    "constant": lambda t, t0, dur, value: value,
    "free_flight": lambda t, t0, dur, value: -1.0,
    # value is the endpoint detuning reached at t0 + dur
    "sin2_ramp": lambda t, t0, dur, value: value * math.sin(_phase(t, t0, dur)) ** 2,
    "sin2_release": lambda t, t0, dur, value: -math.sin(_phase(t, t0, dur)) ** 2,
    "cos2_catch": lambda t, t0, dur, value: -math.cos(_phase(t, t0, dur)) ** 2,
}


@dataclass(frozen=True)
class Segment:
    """One analytic piece of a detuning schedule on ``[t_start, t_end]``."""

    t_start: float
    t_end: float
    form: str = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.form not in SEGMENT_FORMS:
            raise DomainError(f"unknown segment form {self.form!r}; known: {sorted(SEGMENT_FORMS)}")
        if not self.t_end >= self.t_start:
            raise DomainError(f"segment ends before it starts: [{self.t_start}, {self.t_end}]")
        if self.form in ("constant", "sin2_ramp") and self.value < -1.0:
            raise DomainError(f"{self.form} segment would push gamma below -1 (value={self.value})")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def gamma(self, t: float) -> float:
        if self.duration == 0.0:
            return SEGMENT_FORMS[self.form](self.t_start, self.t_start, 1.0, self.value)
        return SEGMENT_FORMS[self.form](t, self.t_start, self.duration, self.value)

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "t_end": self.t_end, "form": self.form, "value": self.value}


@dataclass(frozen=True)
class GammaSchedule:
    """Piecewise-analytic detuning ``gamma(t)`` with ``omega(t) = (1 + gamma) omega0``.

    Segments must be contiguous, begin at ``t = 0`` and are evaluated lazily,
    so integrators may request any time in ``[0, total_duration]``.  At a joint
    the later segment wins.
    """

    segments: tuple[Segment, ...]
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise DomainError("a schedule needs at least one segment")
        if segments[0].t_start != 0.0:
            raise DomainError("the first segment must start at t = 0")
        for prev, nxt in zip(segments, segments[1:]):
            scale = max(abs(prev.t_end), 1e-300)
            if abs(nxt.t_start - prev.t_end) > _TIME_SLACK * scale:
                raise DomainError(
                    f"segments are not contiguous: {prev.t_end} followed by {nxt.t_start}"
                )
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "_starts", tuple(s.t_start for s in segments))

    @property
    def total_duration(self) -> float:
        return self.segments[-1].t_end

    def segment_at(self, t: float) -> Segment:
        T = self.total_duration
        slack = _TIME_SLACK * max(T, 1e-300)
        if not (-slack <= t <= T + slack):
            raise DomainError(f"t = {t} outside schedule range [0, {T}]")
        idx = bisect.bisect_right(self._starts, t) - 1
        idx = min(max(idx, 0), len(self.segments) - 1)
        # zero-length segments never win: prefer the next non-empty one, or the
        # previous one when only empty segments remain
        segs = self.segments
        j = idx
        while j < len(segs) and segs[j].duration == 0.0:
            j += 1
        if j == len(segs):
            j = idx
            while j > 0 and segs[j].duration == 0.0:
                j -= 1
        return segs[j]

    def __call__(self, t: float) -> float:
        return self.segment_at(t).gamma(t)

    def evaluate(self, times: Sequence[float]) -> np.ndarray:
        return np.array([self(float(t)) for t in np.atleast_1d(times)])

    def pieces(self):
        """Non-empty smooth pieces as ``(t_start, t_end, gamma_fn)`` tuples."""
        return [(s.t_start, s.t_end, s.gamma) for s in self.segments if s.duration > 0.0]

    def breakpoints(self) -> list[float]:
        points = [0.0] + [s.t_end for s in self.segments if s.duration > 0.0]
        return sorted(set(points))

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_segments(cls, specs) -> "GammaSchedule":
        """Build from ``(duration, form, value)`` triples laid end to end."""
        segments, t = [], 0.0
        for spec in specs:
            duration, form, *rest = spec
            if duration < 0:
                raise DomainError(f"negative segment duration {duration}")
            value = rest[0] if rest else 0.0
            segments.append(Segment(t, t + duration, form, value))
            t += duration
        return cls(tuple(segments))


def gamma_eval(schedule: GammaSchedule, t: float) -> float:
    """Evaluate ``schedule`` at ``t``; raises :class:`DomainError` outside its range."""
    return schedule(t)


def constant_schedule(duration: float, value: float = 0.0) -> GammaSchedule:
    return GammaSchedule.from_segments([(duration, "constant", value)])


def frequency_ramp(gamma_final: float, t_f: float, hold: float = 0.0) -> GammaSchedule:
    """``gamma(t) = gamma_final * sin^2(pi t / 2 t_f)``, optionally held afterwards."""
    if gamma_final <= -1.0:
        raise DomainError("gamma_final must exceed -1")
    specs = [(t_f, "sin2_ramp", gamma_final)]
    if hold > 0:
        specs.append((hold, "constant", gamma_final))
    return GammaSchedule.from_segments(specs)


def separation_schedule(t_p, t_s1, t_s2, t_s3, hold_after=0.0) -> GammaSchedule:
    """Hold, release, free flight and catch, in that order.

    ``gamma`` is zero during the hold of length ``t_p``, falls as
    ``-sin^2`` to -1 over ``t_s1``, stays at -1 for ``t_s2`` and is restored
    as ``-cos^2`` over ``t_s3``.  An optional static tail of ``hold_after``
    follows with ``gamma = 0``.
    """
    specs = [
        (t_p, "constant", 0.0),
        (t_s1, "sin2_release"),
        (t_s2, "free_flight"),
        (t_s3, "cos2_catch"),
    ]
    if hold_after > 0:
        specs.append((hold_after, "constant", 0.0))
    return GammaSchedule.from_segments(specs)
