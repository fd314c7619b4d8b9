"""Squeezing-assisted transport and separation of trapped ions.

Motion in time-varying harmonic wells is split into a classical trajectory
(:mod:`ionsqueeze.classical`) and an SU(1,1) propagator of the fluctuations
(:mod:`ionsqueeze.su11`).  :mod:`ionsqueeze.protocols` assembles the
frequency-change and two-ion separation protocols, and :mod:`ionsqueeze.fock_oracle`
provides an independent number-basis check.  The ``ionsqueeze`` command
(:mod:`ionsqueeze.cli`) runs them from YAML configuration files.
"""

from . import classical, core, fock_oracle, protocols, su11
from .core import GammaSchedule, PhysicalParams, Segment, beryllium9
from .errors import (
    ConfigError,
    DomainError,
    IntegrationError,
    IonSqueezeError,
    SearchError,
    SingularityError,
    UnderTruncationError,
)
from .protocols import plan_separation, run_frequency_change, run_separation
from .su11 import BogoliubovTransform, EulerAngles, ParametricDrive

__version__ = "0.1.0"
