"""The Generalist co-evolution engine and its Simplified and Vanilla controls."""
from .config import EvolutionConfig, Variant
from .evaluation import CrossEvalMatrix, EvalCache, Evaluator, evaluate_matrix
from .runner import (Engine, GenerationRecord, Lineage, ListSink, PhaseReport, Population, Sink,
                     generation_step, initial_population, phase_finalize, run_experiment)
from .selection import (cluster_opponents, cluster_vectors, opponent_weights, ranking_scores,
                        select_agents, select_opponents, top_by_score)
