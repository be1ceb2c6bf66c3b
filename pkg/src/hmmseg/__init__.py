"""Exact segmentation for hidden Markov models.

Log-space posterior decoding (forward-backward, Viterbi, pointwise MAP),
pin-constrained variants of all of them, iterative and bunch adjustment
of the Viterbi alignment, closed-form lower bounds for classification
probabilities, and the reproducible case studies built on top.
"""

from .model import (
    CategoricalEmission,
    GaussianEmission,
    ModelSpec,
    TableEmission,
    ValidationReport,
    load_model,
    model_hash,
    read_observations,
    reverse_chain,
    sample,
    save_model,
    stationary_distribution,
    validate,
    write_observations,
)
from .inference import (
    InadmissibleError,
    PinSet,
    PosteriorTables,
    accuracy,
    classification_probabilities,
    forward_backward,
    log_likelihood,
    logsumexp,
    path_log_posterior,
    pmap,
    viterbi,
)
from .refine import (
    BunchResult,
    IterationRecord,
    Metrics,
    RefinementConfig,
    RefinementTrace,
    bunch_refine,
    compute_metrics,
    iterative_refine,
)
from .bounds import (
    BoundsCheck,
    BoundsReport,
    ClusterSpec,
    SigmaPair,
    TailReport,
    check_cluster,
    empirical_tail,
    sigma,
    stopping_times,
    verify_bounds,
    viterbi_bounds,
)
from . import experiments

__version__ = "0.1.0"
