"""Physics-informed kernel system identification."""
from ._accel import backend
from .embed import (EmbedConfig, EmbedResult, OptimizerConfig, PhysicsModel, fit_affine, fit_dm,
                    fit_krr_only, fit_ls, fit_nonlinear, predict_embed, psi_matrix, reduced_objective,
                    residual_weights)
from .errors import DegenerateDenominator, Diverged, IdkitError, InvalidArgument, NumericalFailure
from .kernels import KernelSpec, cross_gram, eval_kernel, gram_matrix, kernel_row
from .krr import KrrModel, fit_krr, predict_krr
from .metrics import fit_percent, rmse
from .smoother import (NoiseConfig, SmoothedTrajectory, StateSpaceModel, UtWeights, sigma_points,
                       ukf_filter, urtss_smooth)

__version__ = "0.1.0"
