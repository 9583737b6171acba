"""Nuclear-norm penalized multivariate quantile regression fitted by SFISTA."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DimensionMismatch, FastecError, IndexOutOfRange, InvalidConfig, NonConvergence,
    NonFinite, NonPositivePrice, OutOfDomain, SingularDesign,
)
from .factorization import FactorModel, contribution, factor_scores, factorize, sensitivity  # noqa: E402
from .matrix_core import nuclear_norm, singular_value_threshold, spectral_norm, svd  # noqa: E402
from .qr_loss import check_loss, empirical_loss, lipschitz_constant, smoothed_gradient, smoothed_loss  # noqa: E402
from .solver import (  # noqa: E402
    FitResult, SolverConfig, Termination, convergence_certificate, fit, fit_path, penalized_objective,
)
from .tuning import PivotalConfig, pivotal_draws, pivotal_lambda, theoretical_lambda  # noqa: E402

__all__ = [
    "DimensionMismatch", "FastecError", "IndexOutOfRange", "InvalidConfig", "NonConvergence",
    "NonFinite", "NonPositivePrice", "OutOfDomain", "SingularDesign",
    "FactorModel", "contribution", "factor_scores", "factorize", "sensitivity",
    "nuclear_norm", "singular_value_threshold", "spectral_norm", "svd",
    "check_loss", "empirical_loss", "lipschitz_constant", "smoothed_gradient", "smoothed_loss",
    "FitResult", "SolverConfig", "Termination", "convergence_certificate", "fit", "fit_path",
    "penalized_objective",
    "PivotalConfig", "pivotal_draws", "pivotal_lambda", "theoretical_lambda",
]
