"""Von Neumann entropy from finite Renyi data via stabilized analytic
continuation, plus the randomized-measurement simulation pipeline that
produces such data and the extrapolation baselines it is compared against.
"""

__version__ = "0.1.0"

from .baselines import BaselineEstimate, BaselineMethod, chebyshev_extrapolate, least_squares_poly
from .config import default_conformal_params
from .conformal import ConformalParams, DiskPoints, W0Rule, disk_gap, map_data_points, map_to_disk
from .dataset import RenyiDataset, load_dataset, save_dataset
from .dilog import li2
from .errors import (
    ConfigError,
    DegenerateGeometryError,
    NumericalError,
    QuadratureError,
    SingularMatrixError,
    ZeroStateError,
)
from .estimator import (
    SacEstimate,
    SolverDiagnostics,
    chi2,
    constrained_min_norm,
    discrepancy_values,
    estimate,
    estimate_noiseless,
    estimate_noisy,
    solve_constrained,
)
from .kernel import (
    KernelMatrix,
    KernelMethod,
    kernel_matrix_dilog,
    kernel_matrix_quadrature,
    min_norm_noiseless,
)
from .quantum import (
    DensityMatrix,
    GroundStateResult,
    PureState,
    SpinHamiltonian,
    XYEvolver,
    depolarize,
    exact_renyi_table,
    neel_state,
    partial_trace,
    random_density_matrix,
    renyi_entropy,
    tfim_ground_state,
    von_neumann_entropy,
    xy_quench,
)
from .shadows import (
    CLIFFORDS,
    BatchShadowSet,
    MomentEstimates,
    ShadowRecord,
    batch_shadows,
    compute_moments,
    jackknife,
    renyi_from_moments,
    sample_shadows,
    u_statistic_moment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
