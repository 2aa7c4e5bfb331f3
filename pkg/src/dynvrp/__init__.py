"""Bi-objective dynamic multi-vehicle routing toolkit.

Plan open tours from a start to an end depot for a fixed fleet while customer
requests arrive over time: minimize the maximum tour completion time and the
number of requested-but-unserved dynamic customers. Provides the era-based
dynamic planner with irreversible partial tours, a clairvoyant single-era
baseline, a benchmark instance generator, evaluation metrics, an experiment
CLI, and an interactive decision service.
"""

from .instance import Customer, GeneratorConfig, Instance, Kind, generate_instance, load_instance, save_instance
from .genotype import Individual, RealizedPrefix, TourPlan, decode, evaluate, extract_prefix, tour_length
from .evolution import EraContext, EvoParams, initialize, make_clairvoyant_context, make_context, mutate, nds_sort, select
from .localsearch import ExternalSolver, HppTask, LsParams, hpp_to_tsp_matrix, improve_path, local_search
from .orchestrator import (
    AutoD,
    DecisionPrompt,
    EraRecord,
    FrontApproximation,
    Interactive,
    RunConfig,
    era_length,
    run_clairvoyant,
    run_dynamic,
)
from .metrics import Front, chopped_hv_comparison, f1_gap, hypervolume_2d, rank_sum_test

__all__ = [
    "AutoD",
    "Customer",
    "DecisionPrompt",
    "EraContext",
    "EraRecord",
    "EvoParams",
    "ExternalSolver",
    "Front",
    "FrontApproximation",
    "GeneratorConfig",
    "HppTask",
    "Individual",
    "Instance",
    "Interactive",
    "Kind",
    "LsParams",
    "RealizedPrefix",
    "RunConfig",
    "TourPlan",
    "chopped_hv_comparison",
    "decode",
    "era_length",
    "evaluate",
    "extract_prefix",
    "f1_gap",
    "generate_instance",
    "hypervolume_2d",
    "improve_path",
    "hpp_to_tsp_matrix",
    "initialize",
    "load_instance",
    "local_search",
    "make_clairvoyant_context",
    "make_context",
    "mutate",
    "nds_sort",
    "rank_sum_test",
    "run_clairvoyant",
    "run_dynamic",
    "save_instance",
    "select",
    "tour_length",
]

__version__ = "0.1.0"
