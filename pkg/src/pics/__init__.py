"""Parallel-imaging MRI reconstruction toolbox.

Analytic multi-coil simulation, under-sampling pattern generators, SENSE
and nuFFT forward models, regularized reconstruction (CG, ISTA, FISTA,
ADMM), subspace and nonlinear auto-calibration, and kernel-based sampling
analysis.  See the README for the matching command-line pipeline.
"""

from .arrays import fftc, ifftc, read_array, resize_center, write_array
from .calib import (
    CalibrationMatrix,
    EspiritResult,
    apply_kspace_projection,
    build_calibration_matrix,
    espirit_maps,
    split_subspaces,
)
from .errors import DivergenceError, NumericalError
from .nlinv import NlinvModel, NlinvState, nlinv, sobolev_weight
from .operators import (
    LinearOperator,
    Nufft,
    NufftSense,
    SenseCartesian,
    ToeplitzNormal,
    nufft,
    sense_cartesian,
    toeplitz_normal,
)
from .prox import grad, group_soft, prox_l1, prox_tv_iso
from .rkhs import (
    InterpolationSystem,
    KernelContext,
    build_kernel,
    build_system,
    coil_signals,
    image_norm,
    interpolate,
    power_function,
    power_map,
    solve_weights,
)
from .sampling import SamplingPattern, poisson_disc, radial_traj, regular_mask
from .sim import (
    CoilFilter,
    Ellipse,
    NoiseModel,
    SensitivitySet,
    add_noise,
    gen_sensitivities,
    phantom_grid_kspace,
    phantom_image,
    phantom_kspace,
    render_sensitivities,
    shepp_logan,
    synth_multicoil_kspace,
    whiten,
)
from .solvers import (
    ProxPenalty,
    QuadraticPenalty,
    SolveReport,
    admm,
    cg_normal,
    conjugate_gradient,
    fista,
    ista,
    power_iteration,
)
from .wavelets import WaveletTransform, dwt, idwt

__version__ = "0.1.0"
