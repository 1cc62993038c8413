from monobayes.experiments.config import ConfigError, ExperimentConfig, load_config, parse_config
from monobayes.experiments.report import emit_report, read_radii_csv
from monobayes.experiments.runner import (
    fit_rate_slope,
    run_boundary_experiment,
    run_rate_experiment,
)
