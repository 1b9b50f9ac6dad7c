"""Accumulation-curve modelling with survival-directed discovery probabilities."""

__version__ = "0.1.0"

from .errors import (AccucurveError, ConsistencyError, ConvergenceError,
                     DataFormatError, ParameterError, RegimeError, SeparationError)
from .inference import (FitResult, PosteriorDraws, PriorSpec, dic, fit_mle,
                        gibbs_multisite, gibbs_single, log_likelihood)
from .pbdist import (LogCoefficientTable, PoissonBinomial, coefficient_table,
                     distinct_count_pmf, normal_approx_interval)
from .prediction import (ExtrapolationResult, HorizonBand, RichnessReport,
                         extrapolate, predictive_band, rarefaction,
                         required_additional_samples, richness, saturation)
from .samplers import SignConstraints, sample_polya_gamma, sample_truncated_mvn
from .sequences import (AccumulationCurve, DiscoverySequence, Site, SiteDataset,
                        curve_from_indicators, indicators_from_curve,
                        indicators_from_tags, split)
from .simulate import (GeneratorSpec, generate, simulate_dirichlet,
                       simulate_dirichlet_multinomial, simulate_from_model,
                       simulate_pitman_yor, simulate_zipf)
from .survival import RegimeReport, SurvivalParams

__all__ = [
    "AccucurveError", "ConsistencyError", "ConvergenceError", "DataFormatError",
    "ParameterError", "RegimeError", "SeparationError",
    "DiscoverySequence", "AccumulationCurve", "Site", "SiteDataset",
    "indicators_from_tags", "curve_from_indicators", "indicators_from_curve", "split",
    "SurvivalParams", "RegimeReport",
    "PoissonBinomial", "LogCoefficientTable", "coefficient_table",
    "distinct_count_pmf", "normal_approx_interval",
    "sample_polya_gamma", "sample_truncated_mvn", "SignConstraints",
    "PriorSpec", "PosteriorDraws", "FitResult", "log_likelihood", "fit_mle",
    "gibbs_single", "gibbs_multisite", "dic",
    "rarefaction", "extrapolate", "predictive_band", "richness", "saturation",
    "required_additional_samples", "ExtrapolationResult", "HorizonBand",
    "RichnessReport",
    "GeneratorSpec", "generate", "simulate_dirichlet", "simulate_pitman_yor",
    "simulate_dirichlet_multinomial", "simulate_zipf", "simulate_from_model",
    "__version__",
]
