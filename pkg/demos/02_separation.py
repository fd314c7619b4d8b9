# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Separating two beryllium ions by 100 um
#
# Two ions share a 1 MHz well.  After a 3 us squeezing stage the trap is
# switched off over 0.5 us, the ions fly apart, and two catching wells then
# close on them over 1 us.  The flight time is chosen so that the ions end up
# 100 um apart.

import math

from ionsqueeze import protocols
from ionsqueeze.classical import final_equilibrium
from ionsqueeze.core import beryllium9

us = 1e-6
params = beryllium9()
plan = protocols.plan_separation(params, t_p=3 * us, t_s1=0.5 * us, t_s3=1 * us, eta=0.5 * us,
                                 target_separation=100e-6)

print(f"free flight t_s2 = {plan.t_s2 / us:.4f} us, total t_f = {plan.t_f / us:.4f} us")
g_c, g_s, th_c, th_s = plan.drives
print(f"COM drive g/2pi = {g_c / 2 / math.pi / 1e3:.2f} kHz, phase {th_c:.4f} rad, r = {plan.r_p_com:.4f}")
print(f"STR drive g/2pi = {g_s / 2 / math.pi / 1e3:.2f} kHz, phase {th_s:.4f} rad, r = {plan.r_p_str:.4f}")

# Run it.  The classical trajectory uses the full Coulomb force; the two
# normal modes are evolved separately, the stretch mode seeing the Coulomb
# curvature along that trajectory.

res = protocols.run_separation(plan, samples=21)
tr, rep = res.trajectory, res.report
print(" t (us)   x1 (um)   n_COM    n_STR[sqrt3]  n_STR[w0]")
for i in range(0, len(tr.times), 2):
    print(f"{tr.times[i] / us:6.3f}  {tr.positions[0, i] / 1e-6:8.3f}  {rep.phonons_com_omega0[i]:7.3f}"
          f"  {rep.phonons_str_sqrt3[i]:10.3f}  {rep.phonons_str_omega0[i]:9.3f}")

# The squeezing leaves both modes in the ground state of their final wells.
# The remaining occupation comes from classical motion: the catch law turns
# the trap into pure damping while Coulomb repulsion keeps pushing, so the
# ions still drift apart when the wells freeze.

eq, amp = final_equilibrium(tr)
print(f"separation {res.final_separation / 1e-6:.4f} um, final velocities {tr.velocities[:, -1]} m/s")
print(f"quantum part: COM {res.quantum_com:.1e}, STR {res.quantum_str:.1e}")
print(f"classical residual: COM {res.residual_com:.3f}, STR {res.residual_str:.3f} phonons")
print(f"sqrt(3) w0 STR count {res.total_str_sqrt3:.3f}: that well is no longer the right basis")
print(f"largest wave-packet extent / half separation: {res.max_validity_ratio:.3f}")
