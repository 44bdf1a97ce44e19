"""Progress measures: master tournaments, progress tables, behaviour complexity, statistics."""
from .measures import (GenerationArchive, TournamentGrid, behavior_complexity, command_complexity,
                       cross_experiment, global_progress, historical_progress, master_tournament,
                       population_complexity)
from .stats import betainc_regularized, paired_t_test_one_tailed, pearson_correlation, student_t_sf
