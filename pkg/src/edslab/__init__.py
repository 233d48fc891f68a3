"""Numerical laboratory for half-line Schrodinger equations with potentials
linear in the spectral parameter, and for the associated Dirac systems."""

import os as _os

# Cap BLAS parallelism before numpy loads anywhere in the package.
_threads = _os.environ.get("EDSLAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .numerics import (DEFAULT_ODE_STEPS, Grid, GridFunction, integrate,
                       solve_dense, solve_linear_ode)
from .potentials import (ConstantSet, NormSet, PotentialP, PotentialQ,
                         constants_p, load_potential, miura_forward, norms,
                         phase, save_potential)
from .jost_schrodinger import (ConvergenceError, EnvelopeBounds,
                               JostSeriesResult, envelope_bounds, gauge_factor,
                               jost_function_dirichlet, jost_ode, jost_series,
                               v0_eval)
from .dirac import (DiracBoundary, DiracPotential, GlmKernel, ScatteringTable,
                    conjugation_check, dirac_jost, dirac_jost_function,
                    dirac_scattering, extract_h, glm_reconstruct,
                    load_scattering, save_scattering, scattering_to_F)
from .transform import (BoundaryTriple, TransformPair, boundary_map, jost_q,
                        jost_q_direct, scattering_q, t_forward, t_inverse)
from .resonances import (BoundaryZeroError, BoundCheck, BoundReport, Rect,
                         ResonanceList, counting_function, find_zeros,
                         load_resonances, order_and_reflect, save_resonances,
                         verify_bounds_p, verify_counting_and_forbidden,
                         winding_count, winding_index_S)
from .isoresonance import (IsoMember, iso_member, reduce_to_dirichlet,
                           theta_solve, verify_iso_scattering)

__version__ = "0.1.0"
