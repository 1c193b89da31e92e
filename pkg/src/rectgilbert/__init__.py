"""Ray-length statistics for full and half rectangular Gilbert tessellations.

The package covers the four complementary routes to the same laws —
exact rational series coefficients, closed-form moments via confluent
hypergeometric functions, unbiased Monte Carlo (stopping-set episodes
for the full model, trapezoid walks for the half model), and the
mean-field approximation — plus a window renderer and a CLI tying them
together.  Simulations are deterministic for a fixed master seed,
independent of thread count and of whether the compiled kernels are in
use.
"""

from .backend import backend_name, have_compiled
from .meanfield import (
    MeanFieldSeries,
    MeanFieldSeriesError,
    meanfield_mean,
    meanfield_pdf,
    model_intensities,
    series_coefficients,
    survival,
)
from .moments import (
    ConvergenceError,
    MomentReport,
    expected_length_exact,
    general_q_mean,
    moment_report,
    mu1,
    mu2,
    second_moment_exact,
)
from .recurrence import (
    HCoefficients,
    SeriesEvalConfig,
    SeriesResult,
    cdf,
    compute_h,
    mean_series,
    pdf,
    second_moment_series,
)
from .fullsim import (
    EXACT_HBAR,
    EpisodeRecord,
    HHatEstimate,
    Seed,
    block,
    estimate,
    line_length_distribution,
    mean_length,
    naive_h_hat,
    run_episode,
    taylor_check,
)
from .halfsim import (
    HalfModelReport,
    TrapezoidState,
    monte_carlo_report,
    sample_ray_length,
    step,
)
from .rng import Xoshiro256PP
from .specfun import SpecialFnConfig, erfc, integrate, kummer_M, kummer_U
from .tessellation import RaySegment, Window, generate, render_svg

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "have_compiled",
    "HCoefficients",
    "SeriesEvalConfig",
    "SeriesResult",
    "compute_h",
    "cdf",
    "pdf",
    "mean_series",
    "second_moment_series",
    "SpecialFnConfig",
    "kummer_M",
    "kummer_U",
    "erfc",
    "integrate",
    "MomentReport",
    "ConvergenceError",
    "mu1",
    "mu2",
    "expected_length_exact",
    "second_moment_exact",
    "general_q_mean",
    "moment_report",
    "MeanFieldSeries",
    "MeanFieldSeriesError",
    "series_coefficients",
    "model_intensities",
    "survival",
    "meanfield_pdf",
    "meanfield_mean",
    "Seed",
    "EpisodeRecord",
    "HHatEstimate",
    "EXACT_HBAR",
    "block",
    "run_episode",
    "estimate",
    "mean_length",
    "naive_h_hat",
    "line_length_distribution",
    "taylor_check",
    "TrapezoidState",
    "HalfModelReport",
    "step",
    "sample_ray_length",
    "monte_carlo_report",
    "Window",
    "RaySegment",
    "generate",
    "render_svg",
    "Xoshiro256PP",
]
