"""Energy-conserving space-local POD-Galerkin reduced-order models.

Pipeline: full-order advection(-diffusion) solves produce snapshot sets;
global or subdomain-local proper-orthogonal bases are extracted from the
training window; Galerkin projection yields small (block-sparse, for the
local variants) systems that are integrated with RK4 or Crank-Nicolson
and compared against the full model.
"""

from .backend import active_backend
from .basis import (GramSolver, PodBasis, SvdResult, build_gpod, build_lopod,
                    build_lpod, identity_basis, load_basis, project,
                    projection_error, projector_apply, reconstruct, save_basis,
                    tail_energy_fraction, truncated_svd)
from .errors import (ConfigError, DegenerateBasisError, DimensionError,
                     EmptySelectionError, FactorizationError, FormatError,
                     GridError, KernelError, LayoutError, RomboxError,
                     SplitError, UndefinedMetricError, VelocityError)
from .fom import (FomModel, energy, exact_solution_1d, fom_1d, fom_2d,
                  gaussian_ic_1d, three_gaussian_ic_2d)
from .grids import Grid1D, Grid2D, grid_1d, grid_2d
from .integrators import (CrankNicolsonStepper, IntegratorSpec, StateVector,
                          Trajectory, crank_nicolson_prepare, integrate, rk4_step)
from .kernels import (KernelSpec, kernel_for, kernel_value, local_weights,
                      verify_partition_of_unity)
from .metrics import (ErrorSeries, energy_drift, energy_rate_relative,
                      energy_series, error_series, fit_loglog, gradient_error,
                      gradient_error_series, interp_periodic, match_times,
                      read_csv, relative_error, select_modes_by_threshold,
                      window_mean, write_csv)
from .rom import (RomModel, galerkin_project, nnz_stats, prune_small,
                  reconstruct_trajectory, rom_spectrum, run_rom,
                  spectral_radius)
from .snapshots import (LocalSnapshotMatrix, SnapshotSet, SubdomainLayout,
                        assemble_local, assemble_local_overlap, build_layout,
                        label_splits, load_snapshots, save_snapshots,
                        snapshot_set_from_trajectory)

__version__ = "0.1.0"
