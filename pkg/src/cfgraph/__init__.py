"""Causal graphs, structural models, identification and potential-outcome tools."""

from .dseparation import check_backdoor, d_separated, default_adjustment_set
from .errors import CausalError, InternalInvariantError
from .graph import Dag, Path, build_dag, directed_paths, relatives, undirected_paths
from .identify import QuerySpec, evaluate_expression, fci, render_expression
from .io import parse_model, serialize_model
from .mediation import causal_steps, difference_test, fit_mediation, sobel_test
from .oracle import ci_test_exact, enumerate_joint, interventional_oracle
from .pom import PomTable, adjusted_expectation, ate, caliper_match_impute, check_positivity, exact_match_impute
from .scm import CptModel, LinearScm, abduct, counterfactual, fit_linear, intervene, simulate
from .stbn import StbnTemplate, from_dynamics, stbn_query, unroll, validate_temporal

__version__ = "0.1.0"
