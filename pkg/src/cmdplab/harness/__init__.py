from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .evaluation import CSV_COLUMNS, EpisodeRecord, evaluate_episode
from .experiment import InvariantViolation, run_experiment, run_seed, sqrt_fit
from .schedules import ContextSchedule, next_context
