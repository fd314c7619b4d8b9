"""Classical trajectories that define the co-moving (displacement) frame.

The equations of motion are integrated in the dimensionless frame of the
initial well (time in ``1/omega0``, length in the ground-state length ``x0``)
with an adaptive Dormand-Prince 8(5,3) stepper.  Every schedule joint, catch
activation and catch release is an integration breakpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import GammaSchedule, PhysicalParams, separation_schedule
from .errors import DomainError, IntegrationError, SearchError, SingularityError

__all__ = [
    "ClassicalTrajectory",
    "CatchLaw",
    "integrate_single",
    "integrate_two_ion",
    "find_free_flight_duration",
    "final_equilibrium",
    "RTOL",
    "ATOL",
]

RTOL = 1e-10
ATOL = 1e-10
DEFAULT_SEPARATION_FLOOR = 1e-9  # m


@dataclass(frozen=True)
class CatchLaw:
    """Catching wells that track ``c_f = c - eta * dc/dt``.

    Parameters
    ----------
    eta : float
        Tracking constant in s.
    activation : float
        Time (s) at which the catching potential starts ramping.  Before it
        the wells sit at the initial trap center.
    release : float, optional
        Time (s) after which the well centers are frozen.  Defaults to the end
        of the schedule.
    """

    eta: float
    activation: float
    release: Optional[float] = None

    def __post_init__(self):
        if self.eta < 0:
            raise DomainError("eta must be non-negative")


@dataclass(frozen=True)
class ClassicalTrajectory:
    """Sampled classical motion, all arrays in SI units.

    ``positions``, ``velocities`` and ``well_centers`` have shape
    ``(n_ions, len(times))``.  ``well_strength`` is ``1 + gamma(t)``.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    well_centers: np.ndarray
    well_strength: np.ndarray
    params: PhysicalParams = field(repr=False)
    _pieces: tuple = field(default=(), repr=False, compare=False)

    @property
    def n_ions(self) -> int:
        return self.positions.shape[0]

    @property
    def separation(self) -> np.ndarray:
        return self.positions[0] - self.positions[-1]

    def state_at(self, t: float):
        """Interpolated ``(positions, velocities)`` in SI at time ``t`` (s)."""
        frame = self.params.frame()
        tau = t * frame.omega_ref
        for tau0, tau1, sol in self._pieces:
            if tau0 <= tau <= tau1 or math.isclose(tau, tau1, rel_tol=1e-12, abs_tol=1e-12):
                y = sol(min(max(tau, tau0), tau1))
                n = self.n_ions
                return frame.length_si(y[:n]), frame.velocity_si(y[n:])
        raise DomainError(f"t = {t} outside the integrated range")

    def half_separation_at(self, t: float) -> float:
        x, _ = self.state_at(t)
        return 0.5 * (x[0] - x[-1])


def _pieces_with_cuts(schedule, cuts):
    out = []
    for t0, t1, fn in schedule.pieces():
        inner = sorted(c for c in cuts if c is not None and t0 < c < t1)
        edges = [t0, *inner, t1]
        out.extend((a, b, fn) for a, b in zip(edges, edges[1:]))
    return out


def _check(sol, omega, what):
    if sol.status == -1:
        raise IntegrationError(
            f"{what}: integrator failed at t = {sol.t[-1] / omega:.6e} s ({sol.message})",
            time=sol.t[-1] / omega,
        )


def _sample(grid, t0, t1, last):
    lo = np.searchsorted(grid, t0, side="left")
    hi = np.searchsorted(grid, t1, side="right") if last else np.searchsorted(grid, t1, side="left")
    return slice(lo, hi)


def _normalize_grid(grid, T):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty 1-D array")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    slack = 1e-12 * max(T, 1e-300)
    if grid[0] < -slack or grid[-1] > T + slack:
        raise DomainError(f"grid [{grid[0]}, {grid[-1]}] not covered by schedule [0, {T}]")
    return np.clip(grid, 0.0, T)


def integrate_single(
    params: PhysicalParams,
    schedule: GammaSchedule,
    center_law: Union[float, Callable],
    initial: Sequence[float],
    grid: Sequence[float],
    rtol: float = RTOL,
    atol: float = ATOL,
) -> ClassicalTrajectory:
    """Integrate ``c'' = -omega0^2 (1 + gamma)^2 (c - c_f(t))`` for one ion.

    Parameters
    ----------
    center_law : float or callable
        Fixed well center in m, or ``t -> c_f`` / ``t -> (c_f, dc_f/dt)``.
    initial : (float, float)
        ``(c(0), dc/dt(0))`` in m and m/s.
    grid : array_like
        Output times in s.
    """
    frame = params.frame()
    w = frame.omega_ref
    grid = _normalize_grid(grid, schedule.total_duration)

    def center(t):
        if callable(center_law):
            value = center_law(t)
            return float(value[0] if np.ndim(value) else value)
        return float(center_law)

    c0, v0 = initial
    if not (np.isfinite(c0) and np.isfinite(v0)):
        raise DomainError("initial state must be finite")
    y = np.array([frame.length(c0), frame.velocity(v0)])
    n = len(grid)
    pos, vel, cen, strength = (np.empty(n) for _ in range(4))
    pieces = []
    segs = schedule.pieces()
    for k, (t0, t1, gamma) in enumerate(segs):

        def rhs(tau, z, gamma=gamma):
            t = tau / w
            g = gamma(t)
            return [z[1], -(1.0 + g) ** 2 * (z[0] - frame.length(center(t)))]

        sol = solve_ivp(rhs, (t0 * w, t1 * w), y, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        _check(sol, w, "single-ion trajectory")
        pieces.append((t0 * w, t1 * w, sol.sol))
        sl = _sample(grid, t0, t1, k == len(segs) - 1)
        if sl.stop > sl.start:
            z = sol.sol(grid[sl] * w)
            pos[sl] = frame.length_si(z[0])
            vel[sl] = frame.velocity_si(z[1])
            cen[sl] = [center(t) for t in grid[sl]]
            strength[sl] = [1.0 + gamma(t) for t in grid[sl]]
        y = sol.y[:, -1]
    if not segs:  # zero-length schedule
        pos[:], vel[:] = c0, v0
        cen[:] = [center(t) for t in grid]
        strength[:] = 1.0 + schedule(0.0)
    return ClassicalTrajectory(grid, pos[None], vel[None], cen[None], strength[None][0], params,
                               tuple(pieces))


def integrate_two_ion(
    params: PhysicalParams,
    schedule: GammaSchedule,
    catch: Optional[CatchLaw],
    grid: Sequence[float],
    initial=None,
    separation_floor: float = DEFAULT_SEPARATION_FLOOR,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> ClassicalTrajectory:
    """Two same-species ions, shared well strength, exact Coulomb repulsion.

    Ion 1 is the one at larger ``x``.  Before ``catch.activation`` both wells
    sit at the origin; between activation and release each well center follows
    ``c_j - eta * dc_j/dt``; afterwards the centers are frozen.

    Parameters
    ----------
    initial : ((c1, c2), (v1, v2)), optional
        Defaults to the equilibrium ``+-(k e^2 / 4 m omega0^2)^(1/3)`` at rest.
    """
    frame = params.frame()
    w = frame.omega_ref
    L = frame.length_unit
    A = params.coulomb_strength / (params.mass * params.omega0**2 * L**3)
    T = schedule.total_duration
    grid = _normalize_grid(grid, T)
    if initial is None:
        d = params.equilibrium_half_separation()
        initial = ((d, -d), (0.0, 0.0))
    (c1, c2), (v1, v2) = initial
    if not c1 - c2 > 0:
        raise DomainError("ions must start ordered with c1 > c2")
    floor = separation_floor / L

    activation = catch.activation if catch is not None else None
    release = None
    if catch is not None:
        release = T if catch.release is None else catch.release
    eta = catch.eta * w if catch is not None else 0.0

    y = np.array([frame.length(c1), frame.length(c2), frame.velocity(v1), frame.velocity(v2)])
    centers = np.zeros(2)

    def near(t, ref):
        return ref is not None and math.isclose(t, ref, rel_tol=1e-12, abs_tol=1e-15 * max(T, 1))

    n = len(grid)
    pos, vel, cen = (np.empty((2, n)) for _ in range(3))
    strength = np.empty(n)
    pieces = []
    segs = _pieces_with_cuts(schedule, [activation, release])
    for k, (t0, t1, gamma) in enumerate(segs):
        catching = catch is not None and (t0 >= activation or near(t0, activation)) and (
            t1 <= release or near(t1, release))
        fixed = centers.copy()

        def rhs(tau, z, gamma=gamma, catching=catching, fixed=fixed):
            g2 = (1.0 + gamma(tau / w)) ** 2
            s = z[0] - z[1]
            f = A / (s * s)
            if catching:
                a1 = -g2 * eta * z[2] + f
                a2 = -g2 * eta * z[3] - f
            else:
                a1 = -g2 * (z[0] - fixed[0]) + f
                a2 = -g2 * (z[1] - fixed[1]) - f
            return [z[2], z[3], a1, a2]

        def collide(tau, z):
            return z[0] - z[1] - floor

        collide.terminal = True
        collide.direction = -1

        sol = solve_ivp(rhs, (t0 * w, t1 * w), y, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=collide)
        if sol.status == 1:
            t_hit = sol.t_events[0][0] / w
            raise SingularityError(
                f"ion separation fell below {separation_floor:.3e} m at t = {t_hit:.6e} s",
                time=t_hit,
            )
        _check(sol, w, "two-ion trajectory")
        pieces.append((t0 * w, t1 * w, sol.sol))
        sl = _sample(grid, t0, t1, k == len(segs) - 1)
        if sl.stop > sl.start:
            z = sol.sol(grid[sl] * w)
            pos[:, sl] = frame.length_si(z[:2])
            vel[:, sl] = frame.velocity_si(z[2:])
            if catching:
                cen[:, sl] = frame.length_si(z[:2] - eta * z[2:])
            else:
                cen[:, sl] = frame.length_si(fixed)[:, None]
            strength[sl] = [1.0 + gamma(t) for t in grid[sl]]
        y = sol.y[:, -1]
        if catching:
            centers = y[:2] - eta * y[2:]
    if not segs:
        pos[:] = np.array([c1, c2])[:, None]
        vel[:] = np.array([v1, v2])[:, None]
        cen[:] = 0.0
        strength[:] = 1.0 + schedule(0.0)
    return ClassicalTrajectory(grid, pos, vel, cen, strength, params, tuple(pieces))


def final_equilibrium(traj: ClassicalTrajectory):
    """Rest positions in the final (frozen) wells including Coulomb repulsion.

    Returns
    -------
    (ndarray, float)
        Equilibrium positions in m and the relative residual oscillation
        amplitude ``max_j sqrt(dx_j^2 + (v_j/omega)^2) / separation``.
    """
    p = traj.params
    strength = traj.well_strength[-1]
    if strength <= 0:
        raise DomainError("final well strength is zero; no equilibrium exists")
    k2 = p.mass * (p.omega0 * strength) ** 2
    cf = traj.well_centers[:, -1]
    kc = p.coulomb_strength
    sf = cf[0] - cf[-1]

    def balance(s):
        return k2 * (s - sf) - 2.0 * kc / s**2

    hi = max(sf, 1e-12) * 2 + (4 * kc / k2) ** (1 / 3)
    s = brentq(balance, max(sf, 1e-15), hi, xtol=1e-18, rtol=1e-14)
    shift = kc / (k2 * s**2)
    eq = np.array([cf[0] + shift, cf[-1] - shift])
    dx = traj.positions[:, -1] - eq
    dv = traj.velocities[:, -1] / (p.omega0 * strength)
    amplitude = np.sqrt(dx**2 + dv**2)
    return eq, float(np.max(amplitude) / (traj.positions[0, -1] - traj.positions[-1, -1]))


def _final_separation(params, t_p, t_s1, t_s2, t_s3, eta, rtol, atol):
    schedule = separation_schedule(t_p, t_s1, t_s2, t_s3)
    catch = CatchLaw(eta=eta, activation=t_p + t_s1 + t_s2)
    traj = integrate_two_ion(params, schedule, catch, [schedule.total_duration], rtol=rtol,
                             atol=atol)
    return float(traj.separation[-1])


def find_free_flight_duration(
    params: PhysicalParams,
    t_p: float,
    t_s1: float,
    t_s3: float,
    eta: float,
    target_separation: float,
    tol: float = 1e-12,
    max_duration: Optional[float] = None,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> float:
    """Free-flight time that makes the final ion separation hit a target.

    The final separation grows monotonically with the free-flight duration, so
    the root is bracketed from zero upward by doubling and then refined with
    Brent's method.

    Parameters
    ----------
    tol : float
        Relative tolerance on the separation when accepting ``t_s2 = 0``, and
        absolute tolerance (in units of ``1/omega0``) on the returned time.
    max_duration : float, optional
        Upper bound (s) of the bracketing search, default ``1000 / omega0``.
    """
    d_eq = 2.0 * params.equilibrium_half_separation()
    if target_separation < d_eq * (1 - 1e-9):
        raise SearchError(f"target {target_separation} m is below the equilibrium separation {d_eq} m")

    def f(t_s2):
        return _final_separation(params, t_p, t_s1, t_s2, t_s3, eta, rtol, atol) - target_separation

    f0 = f(0.0)
    if abs(f0) <= tol * target_separation:
        return 0.0
    if f0 > 0:
        raise SearchError("target separation is already exceeded without free flight")
    max_duration = 1000.0 / params.omega0 if max_duration is None else max_duration
    hi = 1.0 / params.omega0
    while f(hi) < 0:
        if hi >= max_duration:
            raise SearchError(f"target separation not reached with t_s2 <= {max_duration} s")
        hi = min(2 * hi, max_duration)
    # brentq's xtol is absolute; work in units of 1/omega0
    w = params.omega0
    root = brentq(lambda u: f(u / w), 0.0, hi * w, xtol=tol, rtol=4 * np.finfo(float).eps)
    return root / w
