"""Single-particle program interpreter.

Runs a model program once, recording addressed random choices and
observations, routing each sample to prior or proposal per execution
mode, and accumulating log-weight factors per the active estimator.

Rejection scopes are delimited combinators: the body callable performs
its sample calls against the handle and returns ``(accepted, payload)``.
After a scope accepts under the corrected estimator, the engine replays
the body on fresh substreams, first under the proposal to estimate the
acceptance rate (K out of N), then under the prior to collect M
trials-to-acceptance counts, and multiplies the factor K*T_bar/N into
the particle's ledger.  Replays never touch the owning particle's
ledger, choices, or main random stream.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

from .dists import Dist
from .errors import (
    DuplicateAddress,
    ObserveInsideScope,
    ProposalSupportViolation,
    ScopeIterationCapExceeded,
)
from .estimators import (
    CORRECTION,
    LIKELIHOOD,
    LOOP_RATIO,
    PRIOR_RATIO,
    NAIVE_IC,
    EstimatorKind,
    WeightLedger,
)
from .rng import RngStream
from .trace import Choice, ExecutionMode, ModelProgram, ScopeStats, TraceRecord

__all__ = [
    "DEFAULT_SCOPE_CAP",
    "Interpreter",
    "run_trace",
    "estimate_q_accept",
    "estimate_inv_p_accept",
]

DEFAULT_SCOPE_CAP = 1_000_000

_NEG_INF = float("-inf")


class _Frame:
    """Open rejection-scope iteration: address prefix plus a factor buffer."""

    __slots__ = ("path", "site_log_ratio", "entries")

    def __init__(self, path: tuple):
        self.path = path
        self.site_log_ratio = 0.0
        self.entries: list[tuple[str, float, object]] = []


class Interpreter:
    """Executes one particle; shares nothing with other particles."""

    def __init__(
        self,
        program: ModelProgram,
        mode: ExecutionMode,
        rng: RngStream,
        estimator: EstimatorKind = NAIVE_IC,
        scope_cap: int = DEFAULT_SCOPE_CAP,
    ):
        if scope_cap < 1:
            raise ValueError("scope_cap must be >= 1")
        if mode not in (ExecutionMode.PRIOR_ONLY, ExecutionMode.PROPOSAL):
            raise ValueError("top-level execution mode must be PRIOR_ONLY or PROPOSAL")
        self.program = program
        self.mode = mode
        self.estimator = estimator
        self.scope_cap = scope_cap
        self._root_rng = rng
        self._rng = rng
        self._replay: Optional[ExecutionMode] = None
        self._frames: list[_Frame] = []
        self._addresses: set = set()
        self._scope_instances: dict[str, int] = {}
        self._ledger = WeightLedger()
        self._choices: dict = {}
        self._observations: list = []
        self._scope_stats: dict = {}

    # -- model-facing API ---------------------------------------------------

    def sample(self, label: str, prior: Dist) -> float:
        """Draw at an addressed site; ledger updated per the estimator."""
        replay = self._replay
        if replay is not None:
            if replay is ExecutionMode.SCOPE_REPLAY_PRIOR:
                return prior.sample(self._rng)
            prop = self.program.proposal_map.get(label)
            return (prop or prior).sample(self._rng)

        frames = self._frames
        if frames:
            addr = frames[-1].path + ((label, 0, 0),)
        else:
            addr = ((label, 0, 0),)
        if addr in self._addresses:
            raise DuplicateAddress(f"address {addr} already used in this trace")
        self._addresses.add(addr)

        prop = self.program.proposal_map.get(label) \
            if self.mode is ExecutionMode.PROPOSAL else None
        if prop is None:
            value = prior.sample(self._rng)
            self._choices[addr] = Choice(prior, value, ExecutionMode.PRIOR_ONLY)
            if frames:
                pass  # zero contribution to the iteration's ratio
            return value

        _check_support(label, prior, prop)
        value = prop.sample(self._rng)
        log_ratio = prior.log_pdf(value) - prop.log_pdf(value)
        self._choices[addr] = Choice(prop, value, ExecutionMode.PROPOSAL)
        if frames:
            frames[-1].site_log_ratio += log_ratio
        else:
            self._ledger.append(PRIOR_RATIO, log_ratio, addr)
        return value

    def observe(self, label: str, likelihood: Dist, value: float) -> None:
        """Condition on observing ``value``; adds one likelihood factor."""
        if self._frames or self._replay is not None:
            raise ObserveInsideScope(
                f"observe({label!r}) inside an open rejection scope"
            )
        addr = ((label, 0, 0),)
        if addr in self._addresses:
            raise DuplicateAddress(f"address {addr} already used in this trace")
        self._addresses.add(addr)
        self._observations.append((addr, likelihood, value))
        self._ledger.append(LIKELIHOOD, likelihood.log_pdf(value), addr)

    def rejection_scope(
        self,
        label: str,
        body: Callable[["Interpreter"], tuple[bool, object]],
        cap: Optional[int] = None,
    ):
        """Repeat ``body`` until it accepts; account per the estimator."""
        cap = self.scope_cap if cap is None else cap
        if self._replay is not None:
            # nested scope inside a replayed body: run to acceptance only
            for _ in range(cap):
                accepted, payload = body(self)
                if accepted:
                    return payload
            raise ScopeIterationCapExceeded(
                f"nested scope {label!r} hit cap {cap} during replay"
            )

        instance = self._scope_instances.get(label, 0)
        self._scope_instances[label] = instance + 1
        scope_id = (label, instance)
        parent_path = self._frames[-1].path if self._frames else ()
        est = self.estimator
        keep_all = est.keeps_rejected_iterations

        accepted_iteration = None
        payload = None
        for k in range(1, cap + 1):
            frame = _Frame(parent_path + ((label, instance, k),))
            self._frames.append(frame)
            try:
                accepted, payload = body(self)
            finally:
                self._frames.pop()
            if keep_all or accepted:
                frame.entries.append((LOOP_RATIO, frame.site_log_ratio, scope_id))
                self._commit(frame.entries)
            if accepted:
                accepted_iteration = k
                break
        if accepted_iteration is None:
            raise ScopeIterationCapExceeded(
                f"scope {label!r} did not accept within {cap} iterations"
            )

        if est.needs_correction:
            k_acc, n_rep = self.estimate_q_accept(body, est.n, scope_id)
            t_list = self.estimate_inv_p_accept(body, est.m_rep, cap, scope_id)
            t_bar = sum(t_list) / len(t_list)
            correction = k_acc * t_bar / n_rep
            log_corr = math.log(correction) if correction > 0.0 else _NEG_INF
            self._commit([(CORRECTION, log_corr, scope_id)])
            stats = ScopeStats(accepted_iteration, k_acc, n_rep,
                               t_list, t_bar, correction)
        else:
            stats = ScopeStats(accepted_iteration)
        self._scope_stats[scope_id] = stats
        return payload

    # -- replay sub-estimators ---------------------------------------------

    def estimate_q_accept(self, body, n: int, scope_id) -> tuple[int, int]:
        """K out of ``n`` proposal-mode body replays accepted (estimates
        the scope's acceptance probability under the proposal)."""
        k = 0
        with self._replaying(ExecutionMode.SCOPE_REPLAY_PROPOSAL, scope_id):
            for _ in range(n):
                accepted, _ = body(self)
                k += bool(accepted)
        return k, n

    def estimate_inv_p_accept(self, body, m_rep: int, cap: int, scope_id) -> list[int]:
        """``m_rep`` trials-to-first-acceptance counts under the prior
        (each unbiased for 1/p(A|x) by the geometric-trials argument)."""
        t_list = []
        with self._replaying(ExecutionMode.SCOPE_REPLAY_PRIOR, scope_id):
            for _ in range(m_rep):
                for trial in range(1, cap + 1):
                    accepted, _ = body(self)
                    if accepted:
                        t_list.append(trial)
                        break
                else:
                    raise ScopeIterationCapExceeded(
                        f"prior replay of scope {scope_id} hit cap {cap}"
                    )
        return t_list

    def _replaying(self, replay_mode: ExecutionMode, scope_id):
        return _ReplayContext(self, replay_mode, scope_id)

    # -- internals ----------------------------------------------------------

    def _commit(self, entries) -> None:
        if self._frames:
            self._frames[-1].entries.extend(entries)
        else:
            self._ledger.factors.extend(entries)

    def finish(self, result) -> TraceRecord:
        return TraceRecord(
            choices=self._choices,
            observations=self._observations,
            ledger=self._ledger,
            scope_stats=self._scope_stats,
            result=result,
        )


class _ReplayContext:
    """Swaps in a fresh replay substream; restores main state on exit.

    The substream is split off the particle's root stream by scope id and
    replay kind, so replay draws are independent of both the accepted
    draws and each other.
    """

    __slots__ = ("interp", "replay_mode", "scope_id", "_saved")

    def __init__(self, interp: Interpreter, replay_mode: ExecutionMode, scope_id):
        self.interp = interp
        self.replay_mode = replay_mode
        self.scope_id = scope_id

    def __enter__(self):
        interp = self.interp
        self._saved = (interp._rng, interp._replay)
        label, instance = self.scope_id
        interp._rng = interp._root_rng.split(
            "replay", label, instance, self.replay_mode.value
        )
        interp._replay = self.replay_mode
        return interp

    def __exit__(self, *exc):
        self.interp._rng, self.interp._replay = self._saved
        return False


def _check_support(label: str, prior: Dist, prop: Dist) -> None:
    prior_lo, prior_hi = prior.support()
    prop_lo, prop_hi = prop.support()
    if prop_lo > prior_lo or prop_hi < prior_hi:
        raise ProposalSupportViolation(
            f"proposal for site {label!r} covers [{prop_lo}, {prop_hi}] "
            f"but the prior needs [{prior_lo}, {prior_hi}]"
        )


def run_trace(
    program: ModelProgram,
    mode: ExecutionMode,
    rng: RngStream,
    estimator: EstimatorKind = NAIVE_IC,
    scope_cap: int = DEFAULT_SCOPE_CAP,
) -> TraceRecord:
    """Execute ``program`` once and return the completed trace record."""
    interp = Interpreter(program, mode, rng, estimator, scope_cap)
    result = program.entry(interp)
    return interp.finish(result)


def estimate_q_accept(handle: Interpreter, body, n: int, scope_id=("adhoc", 0)):
    """Module-level convenience wrapper around the handle method."""
    return handle.estimate_q_accept(body, n, scope_id)


def estimate_inv_p_accept(handle: Interpreter, body, m_rep: int,
                          cap: int = DEFAULT_SCOPE_CAP, scope_id=("adhoc", 0)):
    return handle.estimate_inv_p_accept(body, m_rep, cap, scope_id)
