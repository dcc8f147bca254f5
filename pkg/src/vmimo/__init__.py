"""Device-to-device assisted virtual MIMO uplink toolkit.

Idle single-antenna devices are recruited as decode-and-forward helpers so
a source can emulate a multi-antenna transmitter over two slots. The
package provides the propagation and rate engine, discrete unit-modulus
precoding (exact enumeration and semidefinite relaxation with rank-one
rounding), greedy and exhaustive clustering, analytic mean-rate upper
bounds under a Poisson device field, and a seeded Monte Carlo harness.
"""

__version__ = "0.1.0"

from .bounds import (BoundParams, BoundResult, RelayBudget, decode_disk_area,
                     decode_radius, mean_rate_bound, mean_rate_bound_pathloss,
                     mean_rate_bound_shadowing, poisson_binomial_pmf,
                     relay_budget, relays_required, ring_occupancy_probability,
                     ring_shift_probability)
from .channel import (LinkChannel, PowerControlPolicy, PropagationParams,
                      build_link, path_gain, power_control, sample_rayleigh,
                      sample_shadowing)
from .clustering import (ClusteringConfig, ClusteringResult,
                         NetworkClusterOracle, ScalarClusterOracle,
                         cluster_sources, exhaustive_cluster, greedy_cluster)
from .geometry import Deployment, Field, distance, sample_ppp
from .linalg import dominant_eigenvector, erf, hermitian_solve, mmse_sinr
from .precoding import (Codebook, PrecodingProblem, PrecodingSolution,
                        assemble_q, continuous_phase_match, enumerate_optimum,
                        round_solution, sdr_solve, solve_precoding)
from .rates import (Cluster, NetworkState, RateReport, aggregate_capacity,
                    augmented_channel, capacity, effective_sinr_db,
                    energy_per_bit, harmonic_mean, phase1_covariance,
                    phase2_covariance, rate_from_effective_sinr_db,
                    source_relay_rate, unassisted_rate, vmimo_covariance,
                    vmimo_rate)
from .harness import (CampaignResult, ScenarioConfig, TrialRecord,
                      run_campaign, run_single_source_validation, run_trial,
                      write_campaign_outputs)
