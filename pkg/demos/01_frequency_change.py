# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Doubling a trap frequency without leaving the ground state
#
# An ion sits in the ground state of a 1 MHz well.  We raise the frequency to
# 2 MHz with `gamma(t) = sin^2(pi t / 2 t_f)` in half a microsecond, far too
# fast to be adiabatic.  A squeeze applied beforehand is chosen so that the
# ion ends in the ground state of the new well anyway.

import math

import numpy as np

from ionsqueeze import protocols, su11
from ionsqueeze.core import frequency_ramp

omega0 = 2 * math.pi * 1e6
t_f = 0.5e-6

# The bare ramp, as a Bogoliubov pair `(mu, nu)`, and the pure squeeze that
# maps the old ground state onto the new one.

u_s = su11.evolve(frequency_ramp(1.0, t_f), omega0)
u_c = su11.freq_change_target(1.0)
print("ramp squeeze parameter:", u_s.squeeze_parameter)
print("target squeeze        :", u_c.squeeze_parameter, "(= ln 2 / 2)")

# The preparation squeeze solves `U_s U_p = U_c`.  Only `r_p` and the squeeze
# phase matter on the vacuum.

r_p, theta_m = su11.solve_preparation(u_s, u_c)
print(f"r_p = {r_p:.6f}, theta_m = {theta_m:.6f} rad")

# Run the protocol and look at the occupation counted in both wells.  Mid-way
# the state is excited in either basis; at the end the 2 MHz count is zero.

rep = protocols.run_frequency_change(omega0, 1.0, t_f, with_preparation=True, samples=11)
print(" t (us)   n[w0]     n[2w0]")
for t, a, b in zip(rep.times, rep.phonons_initial, rep.phonons_final):
    print(f"{t * 1e6:6.3f}  {a:8.5f}  {b:9.2e}")

# Without the preparation the quench leaves phonons behind.  In the sudden
# limit the count is exactly 1/8, and it decays as the ramp slows down.

t_grid = np.geomspace(1e-9, 50 / omega0, 8)
for t, n in zip(t_grid, protocols.sweep_frequency_change(omega0, 1.0, t_grid)):
    print(f"t_f = {t * 1e6:8.4f} us   n = {n:.3e}")
