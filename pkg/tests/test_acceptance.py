"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) or through pytest; the
lines are repeated in the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from ionsqueeze import cli, protocols, su11
from ionsqueeze import fock_oracle as fock
from ionsqueeze.classical import integrate_two_ion
from ionsqueeze.core import COULOMB_CONSTANT, GammaSchedule, beryllium9, frequency_ramp
from ionsqueeze.protocols import SQRT3, StretchSchedule, gamma_stretch

US = 1e-6
P = beryllium9()
W = P.omega0
RESULTS: list[str] = []


def gate(number, title, checks, elapsed, budget):
    """Record and print one line; fail with the unmet checks listed."""
    checks = list(checks) + [(f"runtime {elapsed:.2f} s < {budget:g} s", elapsed < budget)]
    ok = all(passed for _, passed in checks)
    detail = "; ".join(f"{desc}{'' if passed else ' [X]'}" for desc, passed in checks)
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}"
    RESULTS.append(line)
    print(line)
    failed = [desc for desc, passed in checks if not passed]
    assert not failed, f"criterion {number} failed: {failed}"


@pytest.fixture(scope="module")
def standard_plan():
    t0 = time.perf_counter()
    plan = protocols.plan_separation(P, 3 * US, 0.5 * US, 1 * US, 0.5 * US, 100e-6)
    return plan, time.perf_counter() - t0


def test_criterion_1_frequency_change():
    t0 = time.perf_counter()
    rep = protocols.run_frequency_change(W, 1.0, 0.5 * US, with_preparation=True)
    elapsed = time.perf_counter() - t0
    n_end = rep.final_phonons_final
    mid = len(rep.times) // 2
    n_mid_0, n_mid_f = rep.phonons_initial[mid], rep.phonons_final[mid]
    gate(1, "prepared doubling", [
        (f"final n_2w0 = {n_end:.2e} < 1e-9", abs(n_end) < 1e-9),
        (f"mid n_w0 = {n_mid_0:.3f} > 0", n_mid_0 > 1e-3),
        (f"mid n_2w0 = {n_mid_f:.3f} > 0", n_mid_f > 1e-3),
    ], elapsed, 1.0)


def test_criterion_2_inset_sweep():
    t0 = time.perf_counter()
    t_f = np.geomspace(1e-9, 50 / W, 20)
    n = protocols.sweep_frequency_change(W, 1.0, t_f, with_preparation=False)
    elapsed = time.perf_counter() - t0
    monotone = bool(np.all(np.diff(n) <= 0))
    gate(2, "unprepared sweep", [
        (f"|n(1 ns) - 0.125| = {abs(n[0] - 0.125):.1e} < 1e-3", abs(n[0] - 0.125) < 1e-3),
        ("monotone decrease over 20 points", monotone),
        (f"n(50/w0) = {n[-1]:.1e} < 0.01", n[-1] < 0.01),
    ], elapsed, 5.0)


def test_criterion_3_drive_recovery(standard_plan):
    plan, elapsed = standard_plan
    g_c, g_s, _, _ = plan.drives
    gc_khz, gs_khz = g_c / (2 * math.pi) / 1e3, g_s / (2 * math.pi) / 1e3
    gate(3, "separation drives", [
        (f"g_c/2pi = {gc_khz:.2f} kHz (92.6 +-2%)", abs(gc_khz / 92.6 - 1) <= 0.02),
        (f"g_s/2pi = {gs_khz:.2f} kHz (69.2 +-2%)", abs(gs_khz / 69.2 - 1) <= 0.02),
        (f"t_s2 = {plan.t_s2 / US:.4f} us (0.67 +-5%)", abs(plan.t_s2 / US / 0.67 - 1) <= 0.05),
        (f"t_f = {plan.t_f / US:.4f} us (5.17 +-2%)", abs(plan.t_f / US / 5.17 - 1) <= 0.02),
        (f"r_pc = {plan.r_p_com:.4f} (1.8 +-0.05)", abs(plan.r_p_com - 1.8) <= 0.05),
    ], elapsed, 10.0)


def test_criterion_4_separation_end_state(standard_plan):
    plan, plan_time = standard_plan
    t0 = time.perf_counter()
    res = protocols.run_separation(plan)
    elapsed = plan_time + time.perf_counter() - t0
    sep_um = res.final_separation / 1e-6
    quantum = max(abs(res.quantum_com), abs(res.quantum_str))
    gate(4, "separation end state", [
        (f"separation = {sep_um:.4f} um (100 +-1%)", abs(sep_um / 100 - 1) <= 0.01),
        (f"n_COM,w0 = {res.total_com:.2e} < 0.02", res.total_com < 0.02),
        (f"n_STR,w0 = {res.total_str:.3f} < 0.02", res.total_str < 0.02),
        (f"n_STR,sqrt3w0 = {res.total_str_sqrt3:.3f} > 0.1", res.total_str_sqrt3 > 0.1),
        (f"quantum-only = {quantum:.1e} < 1e-9", quantum < 1e-9),
    ], elapsed, 10.0)


def test_criterion_5_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, worst_basis = 0.0, 0.0
    for _ in range(25):
        sched = cli.random_schedule(rng, 1.0, 10.0)
        basis = float(rng.uniform(-0.5, 1.0))
        b = su11.evolve(sched, 1.0)
        state = fock.evolve_schedule(fock.vacuum(fock.DEFAULT_TRUNCATION), sched, 1.0)
        worst = max(worst, abs(su11.phonon_number(b, 0.0) - fock.phonon_number(state, 0.0)))
        worst_basis = max(worst_basis,
                          abs(su11.phonon_number(b, basis) - fock.phonon_number(state, basis)))
    elapsed = time.perf_counter() - t0
    gate(5, "oracle equivalence", [
        (f"max diff w0 basis = {worst:.1e} < 1e-6", worst < 1e-6),
        (f"max diff random basis = {worst_basis:.1e} < 1e-6", worst_basis < 1e-6),
    ], elapsed, 60.0)


def test_criterion_6_rwa_scaling():
    t0 = time.perf_counter()
    diffs = {}
    for g in (0.01, 0.03, 0.1):
        T = math.pi * round(1 / (g * math.pi))  # stroboscopic, r = g T close to 1
        state = fock.evolve_exact_modulation(fock.vacuum(96), g, 0.0, 1.0, T)
        diffs[g] = abs(state.mean_number() - math.sinh(g * T) ** 2)
    elapsed = time.perf_counter() - t0
    g0 = min(diffs)
    ratios = {g: d / (diffs[g0] * (g / g0) ** 2) for g, d in diffs.items()}
    gate(6, "RWA scaling", [
        (f"d(g)/(d(g0) (g/g0)^2) at g={g} is {q:.2f} in [1/3, 3]", 1 / 3 <= q <= 3)
        for g, q in ratios.items()
    ], elapsed, 30.0)


def test_criterion_7_property_suites(standard_plan):
    plan, _ = standard_plan
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)

    def element(max_r):
        return su11.euler_compose(su11.EulerAngles(
            rng.uniform(-math.pi, math.pi), rng.uniform(0, max_r), rng.uniform(-math.pi, math.pi)))

    drift = 0.0
    for _ in range(5):
        b = su11.IDENTITY
        for _ in range(1000):
            b = su11.compose(b, element(0.1))
        drift = max(drift, abs(b.symplectic_defect))

    euler = 0.0
    for _ in range(10_000):
        b = element(3.0)
        back = su11.euler_compose(su11.euler_decompose(b))
        euler = max(euler, abs(back.mu - b.mu), abs(back.nu - b.nu))

    traj = integrate_two_ion(P, plan.schedule, plan.catch, [0.0, plan.t_f])
    gs0 = StretchSchedule(plan.schedule, traj, reference=1.0)(0.0)
    gs0_err = max(abs(gs0 - (SQRT3 - 1)), abs(gamma_stretch(0.0, 1.0, 1.0) - (SQRT3 - 1)))

    d = P.equilibrium_half_separation()
    flight = GammaSchedule.from_segments([(5 * US, "free_flight")])
    tr = integrate_two_ion(P, flight, None, np.linspace(0, 5 * US, 51),
                           initial=((d, -d), (0.05, -0.05)))
    E = 0.5 * P.mass * np.sum(tr.velocities**2, axis=0) + COULOMB_CONSTANT * P.charge**2 / tr.separation
    energy = float(np.max(np.abs(E / E[0] - 1)))

    prep = 0.0
    for i in range(100):
        sched = cli.random_schedule(rng, 1.0, 10.0)
        gamma_f = sched(sched.total_duration)
        order = "before" if i % 2 == 0 else "after"
        u_s = su11.evolve(sched, 1.0)
        u_c = su11.freq_change_target(gamma_f)
        u_p = su11.preparation_transform(u_s, u_c, order)
        final = su11.compose(u_p, u_s) if order == "before" else su11.compose(u_s, u_p)
        prep = max(prep, abs(su11.phonon_number(final, gamma_f)))
    elapsed = time.perf_counter() - t0
    gate(7, "property suites", [
        (f"symplectic drift over 1e3 composes = {drift:.1e} < 1e-9", drift < 1e-9),
        (f"Euler round trip over 1e4 = {euler:.1e} < 1e-10", euler < 1e-10),
        (f"gamma_s(0) error = {gs0_err:.1e} <= 1e-12", gs0_err <= 1e-12),
        (f"free-flight energy drift = {energy:.1e} < 1e-9", energy < 1e-9),
        (f"preparation residual over 100 schedules = {prep:.1e} < 1e-9", prep < 1e-9),
    ], elapsed, 60.0)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
