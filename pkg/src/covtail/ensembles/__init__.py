from covtail.ensembles.fourwise import (
    fourwise_rademacher_batch,
    fourwise_rademacher_sample,
    seed_bit_count,
)
from covtail.ensembles.laws import ScalarLaw
from covtail.ensembles.sampling import (
    LinearModelSpec,
    SampleBatch,
    batch_from_arrays,
    sample_batch,
    sample_linear_model,
    scalar_mixed_sample,
)
from covtail.ensembles.seeding import as_seed_sequence, make_rng, trial_seed
from covtail.ensembles.specs import (
    AffineEnsemble,
    EnsembleSpec,
    FourwiseRademacherEnsemble,
    GaussianEnsemble,
    IndependentCoordsEnsemble,
    ScalarMixedEnsemble,
    ensemble_from_config,
    gaussian,
    population_covariance,
    population_mean,
)

__all__ = [
    "AffineEnsemble",
    "EnsembleSpec",
    "FourwiseRademacherEnsemble",
    "GaussianEnsemble",
    "IndependentCoordsEnsemble",
    "LinearModelSpec",
    "SampleBatch",
    "ScalarLaw",
    "ScalarMixedEnsemble",
    "as_seed_sequence",
    "batch_from_arrays",
    "ensemble_from_config",
    "fourwise_rademacher_batch",
    "fourwise_rademacher_sample",
    "gaussian",
    "make_rng",
    "population_covariance",
    "population_mean",
    "sample_batch",
    "sample_linear_model",
    "scalar_mixed_sample",
    "seed_bit_count",
    "trial_seed",
]
