"""Monte Carlo experiment harness."""
from .config import ExperimentConfig, dump_config, load_config, parse_config
from .experiment import ResultRow, ResultTable, TrialRecord, run_experiment, run_sweep, run_trial
from .outputs import emit_outputs, read_csv, write_csv
from .presets import preset, preset_names

__all__ = [
    "ExperimentConfig", "ResultRow", "ResultTable", "TrialRecord", "dump_config", "emit_outputs",
    "load_config", "parse_config", "preset", "preset_names", "read_csv", "run_experiment",
    "run_sweep", "run_trial", "write_csv",
]
