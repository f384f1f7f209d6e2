"""Binary RBMs with the contrastive-divergence estimator family.

The negative phase of the log-likelihood gradient can be taken uniformly
over Gibbs reconstructions (CD), over persistent chains (PCD), reweighted
by relative model probability within the batch (WCD / WPCD), or computed
exactly by enumeration. Exact KL evaluation, the nine benchmark training
spaces, and a Parzen-window sample-quality estimator round out the
toolkit. Hot loops run in a compiled extension when available; see
wcdrbm.backend.
"""

from .backend import BACKEND, using_compiled
from .bits import all_states, bits_to_index, index_to_bits
from .datasets import (DATASET_NAMES, Dataset, bars_and_stripes, gaussian_profile,
                       int12, labeled_shifter, load_dataset, make_dataset, mult3,
                       parity, save_dataset, split_dataset)
from .exact import (ExactModelDistribution, compute_exact_distribution,
                    compute_log_z, dataset_loglikelihood, kl_divergence,
                    model_probabilities_of)
from .gradients import (GradientDelta, batch_softmax_weights, cd_negative_phase,
                        exact_loglik_gradient, exact_negative_phase,
                        pcd_negative_phase, per_example_phase, positive_phase,
                        wcd_negative_phase, weighted_phase, wpcd_negative_phase)
from .model import (GibbsChain, RbmParams, energy, free_energies, free_energy,
                    gibbs_chain_k, gibbs_step, gibbs_update,
                    hidden_activation_probs, hidden_probs, load_checkpoint,
                    save_checkpoint, visible_activation_probs, visible_probs)
from .parzen import (SampleSet, load_sample_set, parzen_ull, sample_model,
                     save_sample_set, ull_curve)
from .training import (GridSpec, RunRecord, TrainConfig, grid_search, init_params,
                       paired_comparison, run_many, sgd_step, train)

__version__ = "0.1.0"
