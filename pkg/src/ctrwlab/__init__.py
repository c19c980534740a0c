"""Heavy-tailed random walks, their scaling limits, and convergence diagnostics."""

from .errors import (
    AdaptednessViolation,
    CtrwlabError,
    DataError,
    ParameterError,
    RangeError,
    ShapeError,
    UnsupportedDecomposition,
)
from .rng import (
    InnovationLaw,
    SeedSpec,
    StableParams,
    WaitingLaw,
    attractor_params,
    sample_innovation,
    sample_stable,
    sample_waiting,
    wait_attractor_scale,
)
from .paths import (
    GridPath,
    StepPath,
    avci_functional,
    jump_stats,
    m1_modulus,
    max_eps_increments,
    read_path_csv,
    total_variation,
    write_path_csv,
)
from .metrics import MetricResult, d_j1, d_m1, d_uniform
from .processes import (
    ProcessConfig,
    SimulationBundle,
    compose_time_change,
    driver_paths,
    gen_counting,
    gen_ctrw,
    gen_moving_average,
    gen_subordinator_inverse,
    gen_time_changed_levy,
)
from .stats import (
    DiagnosticReport,
    Estimate,
    SampleSet,
    ks_two_sample,
    mean_estimate,
    tail_estimate,
    wasserstein1,
)
from .decompositions import (
    BnEstimate,
    TcReport,
    TruncatedSplit,
    UVSplit,
    VniFamily,
    check_tc,
    clip_mean_limit,
    estimate_bn,
    gd_statistics,
    gdca_statistic,
    gdci_moment_sums,
    split_martingale,
    split_uv,
    truncated_mean,
)
from .integrals import (
    AdversarialIntegrand,
    DeterministicIntegrand,
    LipschitzFollower,
    PathIntegrand,
    adversarial_experiment,
    discretize_integrand,
    grid_integral,
    ito_integral,
    sup_difference_integral,
    upsilon_estimate,
)
from .sde import (
    SddeSpec,
    SdeSpec,
    solve_ext_sddn,
    solve_s_limit,
    solve_sdd_limit,
    solve_sddn,
    solve_sn,
)
from .exprs import make_expr
from .cli import emit_report, load_config, main, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AdaptednessViolation",
    "AdversarialIntegrand",
    "BnEstimate",
    "CtrwlabError",
    "DataError",
    "DeterministicIntegrand",
    "DiagnosticReport",
    "Estimate",
    "GridPath",
    "InnovationLaw",
    "LipschitzFollower",
    "MetricResult",
    "ParameterError",
    "PathIntegrand",
    "ProcessConfig",
    "RangeError",
    "SampleSet",
    "SddeSpec",
    "SdeSpec",
    "SeedSpec",
    "ShapeError",
    "SimulationBundle",
    "StableParams",
    "StepPath",
    "TcReport",
    "TruncatedSplit",
    "UVSplit",
    "UnsupportedDecomposition",
    "VniFamily",
    "WaitingLaw",
    "adversarial_experiment",
    "attractor_params",
    "avci_functional",
    "check_tc",
    "clip_mean_limit",
    "compose_time_change",
    "d_j1",
    "d_m1",
    "d_uniform",
    "discretize_integrand",
    "driver_paths",
    "emit_report",
    "estimate_bn",
    "gd_statistics",
    "gdca_statistic",
    "gdci_moment_sums",
    "gen_counting",
    "gen_ctrw",
    "gen_moving_average",
    "gen_subordinator_inverse",
    "gen_time_changed_levy",
    "grid_integral",
    "ito_integral",
    "jump_stats",
    "ks_two_sample",
    "load_config",
    "m1_modulus",
    "main",
    "make_expr",
    "max_eps_increments",
    "mean_estimate",
    "read_path_csv",
    "run_scenario",
    "sample_innovation",
    "sample_stable",
    "sample_waiting",
    "solve_ext_sddn",
    "solve_s_limit",
    "solve_sdd_limit",
    "solve_sddn",
    "solve_sn",
    "split_martingale",
    "split_uv",
    "sup_difference_integral",
    "tail_estimate",
    "total_variation",
    "truncated_mean",
    "upsilon_estimate",
    "wait_attractor_scale",
    "wasserstein1",
    "write_path_csv",
    "__version__",
]
