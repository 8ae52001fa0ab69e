"""Coupled dynamic / static / measurement causal-system toolkit.

Models are specified as coefficient and exponent matrices over three
subsystems (stocks, auxiliaries, indicators), simulated in continuous
time, observed through a lagged noisy measurement layer, summarized by
implied covariance in the linear static sub-case, scored against
reference series, and sampled at random for method-comparison studies.
"""

__version__ = "0.1.0"

from . import engine, generate, lisrel, measurement, metrics, model, statics  # noqa: F401
from .engine import (IntegratorConfig, Trajectory, analytic_linear_population,  # noqa: F401
                     convergence_order, derivative, simulate, static_table)
from .generate import GeneratorConfig, batch, generate as generate_system  # noqa: F401
from .lisrel import (ImpliedCovariance, LisrelSpec, implied_covariance,  # noqa: F401
                     ml_discrepancy, sample_observations, to_lisrel)
from .measurement import ObservationMatrix, observe, sample_covariance  # noqa: F401
from .metrics import FitReport, SeriesPair, align, basic_fit, theil_decomposition  # noqa: F401
from .model import (Dimensions, DisturbanceSpec, DynamicSpec, MeasurementSpec,  # noqa: F401
                    ModelSpec, StaticSpec, TimeHorizon, bundled_spec, load_spec,
                    save_spec, topological_order, validate)
from .statics import eval_static, solve_linear, solve_nonrecursive  # noqa: F401
