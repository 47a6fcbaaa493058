"""Decision-fusion CROC evaluation for collaborative spectrum sensing
over a MIMO reporting channel: Monte Carlo and MGF-based analytic engines
for the MAC/PAC/CMAC/CPAC reporting protocols."""

from .croc import (BayesRisk, CrocCurve, NeymanPearson,
                   NoFeasibleThresholdError, qm_at_qf, select_threshold)
from .mgf import (MgfEvaluator, ObservationBoundPoints, PoleEvaluationError,
                  QuadratureConfig, QuadratureDivergenceError,
                  QuadraticFormSpec, RationalTerm, UnsupportedClosedFormError,
                  analytic_croc, build_quadratic_form, conditional_mgf_closed,
                  conditional_mgf_det, gauss_chebyshev_tail, hypothesis_mgf,
                  observation_bound, tail_probabilities, tail_probability,
                  unconditional_mgf)
from .montecarlo import (SeedSpec, draw_local_decisions, estimate_croc,
                         mrc_statistic, simulate_frame, simulate_statistics,
                         threshold_grid)
from .protocols import (FrameGeometry, LocalSensor, NoiseBudget,
                        PowerConstraint, ProtocolKind, ProtocolScenario,
                        build_equivalent_channel, draw_channel,
                        equivalent_noise_variance, frame_geometry,
                        make_scenario, placement_map, scaling_factor,
                        snr_to_noise)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
