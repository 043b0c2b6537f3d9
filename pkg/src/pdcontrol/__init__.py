"""Online nonstochastic control with pseudo-disturbance policies.

Library layout:

* :mod:`pdcontrol.lds` -- linear plants, disturbance generators, rollout loop
* :mod:`pdcontrol.values` -- LQR value functions (scalar and vector-valued)
* :mod:`pdcontrol.signals` -- the three pseudo-disturbance estimators
* :mod:`pdcontrol.dac` -- disturbance-action parameters, projection, gradients
* :mod:`pdcontrol.controllers` -- LQR / GPC / Bandit GPC / MF-GPC / BPC
* :mod:`pdcontrol.oracle` -- hindsight-optimal DAC comparator
* :mod:`pdcontrol.harness` -- experiment runner, regret series, CSV/JSON output
* :mod:`pdcontrol.discrete` -- tabular-MDP softmax residual-logit variant
* :mod:`pdcontrol.cli` -- the ``pdctl`` command line
"""

from .config import ConfigError, ExperimentConfig, preset_names
from .controllers import (
    BanditGpc,
    Bpc,
    GpcFullInfo,
    LqrController,
    MfGpc,
    TransferMatrices,
    default_params,
    lqr_gain,
    transfer_matrices,
)
from .dac import DacParams, GradEstimate, bandit_gradient, dac_control, project_dac
from .harness import RegretReport, run_experiment, sweep_horizons, write_results
from .lds import (
    AssumptionSet,
    DisturbanceGenerator,
    DivergenceError,
    LinearSystem,
    QuadraticCost,
    StepRecord,
    Trajectory,
    rollout,
    step,
    strong_stability,
)
from .oracle import hindsight_dac_oracle
from .signals import Pd1, Pd2, Pd3, signal_transform
from .values import QuadraticValue, VectorValueTransform, solve_dare

__version__ = "0.1.0"
