"""careerlink: inventor career disambiguation, East-West career linkage,
instrumental-variable estimation, and sensitivity analysis for patent data.
"""

__version__ = "1.0.0"

from .corpus import (  # noqa: E402
    Attribute,
    FrequencyTable,
    FrequencyTables,
    PatentRecord,
    Rarity,
    Source,
    load_corpus,
    normalize_name,
)
from .disambig import (  # noqa: E402
    MATCH_THRESHOLD,
    CareerCluster,
    Criterion,
    ScoringScheme,
    cluster,
    disambiguate,
    evaluate_clustering,
    score_pair,
)
from .econometrics import (  # noqa: E402
    DesignMatrix,
    EstimateReport,
    anderson_rubin_test,
    cragg_donald_f,
    heckman_iv,
    iv_poisson_gmm,
    kaplan_meier,
    ols,
    probit_mle,
    tsls,
)
from .linkage import build_outcomes, link_careers, match_careers  # noqa: E402
from .sensitivity import (  # noqa: E402
    adjusted_estimate,
    analyze_reduced_form,
    partial_r2,
    robustness_value,
)

__all__ = [
    "Attribute",
    "CareerCluster",
    "Criterion",
    "DesignMatrix",
    "EstimateReport",
    "FrequencyTable",
    "FrequencyTables",
    "MATCH_THRESHOLD",
    "PatentRecord",
    "Rarity",
    "ScoringScheme",
    "Source",
    "adjusted_estimate",
    "analyze_reduced_form",
    "anderson_rubin_test",
    "build_outcomes",
    "cluster",
    "cragg_donald_f",
    "disambiguate",
    "evaluate_clustering",
    "heckman_iv",
    "iv_poisson_gmm",
    "kaplan_meier",
    "link_careers",
    "load_corpus",
    "match_careers",
    "normalize_name",
    "ols",
    "partial_r2",
    "probit_mle",
    "robustness_value",
    "score_pair",
    "tsls",
]
