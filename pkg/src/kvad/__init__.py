"""Kernel-embedding variational approach (KVAD) for transfer-operator models."""

from .baselines import (EdmdModel, LinearFeatureModel, StochasticDataWarning, VampModel,
                        edmd_fit, prop1_verifier, vamp_fit, vamp_objective)
from .basis import (DEFAULT_RANK_TOL, DegenerateBasisError, RandomBumpBasis, WhitenedBasis,
                    evaluate, fit_whitening, make_basis)
from .dynamics import (DivergenceError, SdeSystem, TransitionDataset, euler_maruyama, flow_images,
                       load_dataset, load_trajectory, lorenz, sample_pairs_from_trajectory,
                       sample_pairs_uniform, save_dataset, save_trajectory, vanderpol)
from .estimator import (FixedFeatureModel, KvadModel, RankError, SpectralReport,
                        conditional_expectation, diffusion_distance, fit_fixed_features,
                        kvad_fit, kvad_objective, kvad_score, optimal_q_weights,
                        singular_report, transition_matrix)
from .evaluation import (ReconstructionReport, fit_state_regressor, predict_path,
                         reconstruction_error)
from .kernel import GramMatrix, KernelSpec, embedding_distance_sq, fig1_distances, gram, kernel_eval

__version__ = "0.1.0"
