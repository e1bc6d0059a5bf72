"""Area under the mass-weighted trajectory of a self-similar binary fragmentation.

Exact layer: dislocation measures, their Laplace exponent, the moment
recursion and the Laplace-transform fixed point.  Monte Carlo layer lives in
:mod:`fragarea.simulate`.
"""

from .errors import (
    BudgetExceeded, DegenerateMeasure, DivergentIntegral, DomainError, EmptyMeasure, FragAreaError,
    InsufficientSamples, InvalidParameter, NoConvergence, NotFinite, QuadratureFailure, ValidationError,
)
from .laplace import (
    Exponential, LaplaceGrid, Monomial, ResidualReport, dyadic_laplace, dyadic_residual,
    solve_laplace_fixed_point, verify_theorem1,
)
from .measures import (
    Atomic, BetaSplit, Brownian, Density, FragmentationParams, MassPartition, measure_from_spec, phi,
    total_mass, truncate, validate,
)
from .moments import MomentTable, TakacsTable, coeff_a, coeff_a_jk, moment_table, moment_upper_bound, takacs_table

__version__ = "0.1.0"
