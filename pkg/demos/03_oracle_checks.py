# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Cross-checks: Fock space versus Bogoliubov pairs, and the rotating-wave drive
#
# Everything in the package rests on the two-number description `(mu, nu)`
# of a quadratic propagator.  Here it is compared with brute-force evolution
# of a truncated number-state vector.

import math

import numpy as np

from ionsqueeze import cli, su11
from ionsqueeze import fock_oracle as fock

rng = np.random.default_rng(1)
for k in range(5):
    sched = cli.random_schedule(rng, 1.0, 10.0)
    b = su11.evolve(sched, 1.0)
    state = fock.evolve_schedule(fock.vacuum(256), sched, 1.0)
    print(f"schedule {k}: n = {su11.phonon_number(b):.8f} (su11)  "
          f"{fock.phonon_number(state):.8f} (Fock)   tail {state.tail_mass():.1e}")

# The parametric drive `g sin(2 w t - theta) x^2` only acts as a clean squeeze
# after dropping counter-rotating terms.  The error of that approximation grows
# as `(g/w)^2`; durations are integer multiples of pi so the comparison is
# made at the same drive phase.

for g in (0.01, 0.03, 0.1):
    T = math.pi * round(1 / (g * math.pi))
    s = fock.evolve_exact_modulation(fock.vacuum(96), g, 0.0, 1.0, T)
    d = abs(s.mean_number() - math.sinh(g * T) ** 2)
    print(f"g/w = {g:5.2f}: r = {g * T:.3f}, exact minus ideal occupation = {d:.2e}, "
          f"divided by g^2: {d / g**2:.3f}")
