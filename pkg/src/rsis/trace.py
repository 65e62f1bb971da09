"""Trace-level value types: addresses, execution modes, records, programs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .dists import Dist

__all__ = [
    "Address",
    "ExecutionMode",
    "ScopeId",
    "ScopeStats",
    "Choice",
    "TraceRecord",
    "ModelProgram",
]

# An address is a tuple of (label, scope_instance, iteration) frames: one
# frame per enclosing rejection scope plus a (label, 0, 0) leaf for the
# site itself.  Stable across replays by construction.
Address = tuple

# A scope is identified by its label and occurrence index within the trace.
ScopeId = tuple


class ExecutionMode(enum.Enum):
    PRIOR_ONLY = "prior_only"
    PROPOSAL = "proposal"
    SCOPE_REPLAY_PRIOR = "scope_replay_prior"
    SCOPE_REPLAY_PROPOSAL = "scope_replay_proposal"


@dataclass
class ScopeStats:
    """Per-execution statistics of one rejection scope.

    ``accept_count``/``accept_trials`` (K, N) and ``trial_counts`` (T_j)
    are filled only when the corrected estimator runs its replays.
    """

    accepted_iteration: int                      # L >= 1
    accept_count: Optional[int] = None           # K out of N proposal replays
    accept_trials: Optional[int] = None          # N
    trial_counts: Optional[list[int]] = None     # T_j, one per prior replication
    mean_trials: Optional[float] = None          # T_bar
    correction: Optional[float] = None           # K * T_bar / N


@dataclass
class Choice:
    dist: Dist
    value: float
    mode: ExecutionMode


@dataclass
class TraceRecord:
    """One complete program execution."""

    choices: dict[Address, Choice] = field(default_factory=dict)
    observations: list[tuple[Address, Dist, float]] = field(default_factory=list)
    ledger: "WeightLedger" = None  # type: ignore[assignment]
    scope_stats: dict[ScopeId, ScopeStats] = field(default_factory=dict)
    result: Any = None


@dataclass
class ModelProgram:
    """A generative program plus its inference-time proposal bindings.

    ``proposal_map`` matches on site label only, so one proposal serves a
    site across loop iterations.  ``collapsed_weight``, when the model
    admits closed-form loop conditionals, maps a finished trace to the
    exact collapsed weight.
    """

    entry: Callable[["Interpreter"], Any]
    proposal_map: dict[str, Dist] = field(default_factory=dict)
    collapsed_weight: Optional[Callable[[TraceRecord], float]] = None
    name: str = ""
