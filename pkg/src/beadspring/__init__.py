"""Micro-macro solver for dilute polymer flow with variable solvent density.

The package couples the incompressible Navier-Stokes equations (variable
density and viscosity) to a configuration-space Fokker-Planck equation for
a bead-spring chain, in the implicit time-discrete form with a microscopic
cut-off in the drag term.  Every a priori inequality of the underlying
scheme is monitored at run time by the diagnostics ledger.

Layout:

* ``laws``        -- spring potentials, Maxwellians, Rouse matrix, the
                     entropy / cut-off function family
* ``grids``       -- MAC flow grid and Maxwellian-weighted configuration grid
* ``density``     -- bound-preserving upwind transport of the solvent density
* ``momentum``    -- implicit velocity step on the discretely divergence-free
                     space
* ``kinetic``     -- implicit Fokker-Planck step and Kramers stress assembly
* ``stepper``     -- initial-data smoothing, per-step fixed point, time loop
* ``diagnostics`` -- energy/entropy ledger, lambda bound, Nikolskii estimator
* ``cli``         -- config parsing, presets, simulate/check/oracle commands
"""

from . import laws, grids, density, momentum, kinetic, stepper, diagnostics

__all__ = [
    "laws",
    "grids",
    "density",
    "momentum",
    "kinetic",
    "stepper",
    "diagnostics",
]

__version__ = "0.1.0"
