"""Finite-tree NA1 checks, numeraire portfolios and the counterexample study."""

from ._na1lab import (
    InconsistentRoutes,
    InvalidTree,
    RevivalError,
    ScenarioTree,
    __version__,
    counterexample,
    load_tree,
    na1_check,
    numeraire_portfolio,
    parse_tree,
    solve_node,
    stoch_exp,
    stoch_log,
)

__all__ = [
    "InconsistentRoutes",
    "InvalidTree",
    "RevivalError",
    "ScenarioTree",
    "counterexample",
    "load_tree",
    "na1_check",
    "numeraire_portfolio",
    "parse_tree",
    "solve_node",
    "stoch_exp",
    "stoch_log",
]
