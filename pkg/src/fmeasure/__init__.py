"""F-measure optimization: empirical utility maximization and decision-theoretic prediction."""

from .dta import OptimalPrediction, expected_f_table_cubic, expected_f_table_quadratic, optimal_prediction
from .eum import FittedMethod, LinearModel, Method, apply_method, fit_method, threshold_sweep
from .metrics import (
    ONE_ON_EMPTY,
    ZERO_ON_EMPTY,
    BinaryEval,
    EmptyConvention,
    PopulationRates,
    evaluate_binary,
    macro_f,
    population_f,
)

__version__ = "0.1.0"
