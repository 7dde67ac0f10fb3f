"""Two-step pooling of EMOS component predictive distributions."""

from src.combination.components import (
    ComponentPair,
    PoolTerms,
    QuadraticTerms,
    pool_terms,
    pooled_cdf_values,
    pooled_crps_values,
    quadratic_terms,
)
from src.combination.estimation import fit_combination, fit_pool, grid_search_combination
from src.combination.models import (
    BetaComponent,
    CombinationMethod,
    CombinationParams,
    MultiPluginWeights,
    PluginWeight,
)
from src.combination.plugin import (
    plugin_weight,
    plugin_weight_from_pair,
    plugin_weight_multi,
)
from src.combination.pools import (
    PooledCdf,
    blp_cdf,
    component_tail,
    bml_cdf,
    lp_cdf,
    pool_cdf,
    pooled_crps,
    slp_cdf,
    weighted_pool_cdf,
)
from src.combination.rolling import rolling_combination, rolling_plugin

__all__ = [
    "BetaComponent",
    "CombinationMethod",
    "CombinationParams",
    "ComponentPair",
    "MultiPluginWeights",
    "PluginWeight",
    "PoolTerms",
    "PooledCdf",
    "QuadraticTerms",
    "blp_cdf",
    "bml_cdf",
    "component_tail",
    "fit_combination",
    "fit_pool",
    "grid_search_combination",
    "lp_cdf",
    "plugin_weight",
    "plugin_weight_from_pair",
    "plugin_weight_multi",
    "pool_cdf",
    "pool_terms",
    "pooled_cdf_values",
    "pooled_crps",
    "pooled_crps_values",
    "quadratic_terms",
    "rolling_combination",
    "rolling_plugin",
    "slp_cdf",
    "weighted_pool_cdf",
]
