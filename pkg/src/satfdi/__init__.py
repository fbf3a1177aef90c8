"""satfdi: formation-flying satellite simulation and gyro fault detection/isolation."""

__version__ = "0.1.0"

from .bounds import (AdmissibleSets, BoundInputs, admissible_sets,
                     delta_psi_from_perturbation, delta_s_from_delta_psi,
                     drag_bounds, max_combined_j2, max_delta_b_j2, max_delta_s_j2)
from .campaign import CampaignResult, collect_faultless_psi, run_campaign, sweep
from .constants import EARTH, EarthConstants
from .dynamics import (AttitudeState, DragParams, ForceModel, InertiaTensor,
                       ReentryError, SimulationGrid, drag_accel, j2_accel,
                       propagate_attitude, propagate_orbit, two_body_accel)
from .isolation import (DetectionReport, HypothesisEstimate, IsolationReport,
                        calibrate_threshold, detect, estimate_bias, estimate_scale,
                        recover_and_decide)
from .orbits import (DegenerateOrbitError, FrameRotation, InertialState,
                     OrbitalElements, elements_to_state, rsw_frame, state_to_elements)
from .pipeline import RunRecord, RunSeries, run_once
from .residual import (PsiCoefficients, ResidualSample, compute_f, expected_psi,
                       psi, psi_coefficients, psi_gradient, psi_matrix_form,
                       psi_variance)
from .scenario import (ConfigError, ElementOffsets, FdiSettings, ScenarioConfig,
                       UncertaintySpec, load_preset, parse_config, sample_initial)
from .sensors import (FaultSpec, GyroNoiseSpec, MeasurementRecord, RangingNoiseSpec,
                      fd4_first_derivative, fd4_second_derivative, gyro_measure,
                      range_measure)
