"""The full step-size-measuring optimizer.

Training alternates between two phases. In the SGD phase each step loads one
batch and moves the parameters by a fixed scalar step along the normalized
negative batch gradient. Whenever the measured improvement over the last step
window falls below a fraction of the improvement the most recent line fit
promised, a search phase runs a few consecutive line searches, averages their
suggested step sizes, and training resumes with the new step.

Step accounting is strict: every batch load (SGD step, line-search sample,
grid-search probe) advances the step counter by exactly one and emits one
training-log row.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linesearch import LineSearchConfig, elf_line_search
from .poly import Polynomial, _bisect, evaluate
from .problems import BatchStream
from .regression import FitReport, SampleSet
from .seeding import RngStreams


class DivergenceError(RuntimeError):
    """Raised when a training loss stops being finite."""


@dataclass(frozen=True)
class ElfConfig:
    window_size: int = 150
    loss_improvement_factor: float = 0.01
    momentum_beta: float = 0.4
    decrease_factor_delta: float = 0.2
    lines_to_average: int = 3
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    grid_search_candidates: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
    grid_search_probe_steps: int = 20
    sample_from_validation: bool = True

    def __post_init__(self):
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.loss_improvement_factor < 0.0:
            raise ValueError("loss_improvement_factor must be >= 0")
        if not 0.0 <= self.momentum_beta < 1.0:
            raise ValueError("momentum_beta must lie in [0, 1)")
        if not 0.0 <= self.decrease_factor_delta < 1.0:
            raise ValueError("decrease_factor_delta must lie in [0, 1)")
        if self.lines_to_average < 1:
            raise ValueError("lines_to_average must be >= 1")


@dataclass
class OptimizerState:
    theta: np.ndarray
    momentum_buffer: np.ndarray
    update_step: float = 0.0
    losses: list[float] = field(default_factory=list)
    last_mean_loss: float = 0.0
    t: int = 0
    t_of_last_update: int = -1
    expected_per_step_improvement: float = np.inf
    current_batch: object = None
    baseline_level: float | None = None   # grid-search loss level at theta0


@dataclass(frozen=True)
class LogRow:
    step: int
    event: str                     # "sgd", "line_search", or "grid_search"
    train_loss: float
    update_step: float | None
    expected_improvement: float | None
    real_improvement: float | None


@dataclass(frozen=True)
class LineSearchRecord:
    index: int
    samples: SampleSet
    rounds: np.ndarray
    fit: FitReport
    minimum_position: float | None


@dataclass
class TrainingLog:
    rows: list[LogRow] = field(default_factory=list)
    line_searches: list[LineSearchRecord] = field(default_factory=list)

    def count(self, event: str) -> int:
        return sum(1 for row in self.rows if row.event == event)


def search_trigger(
    t: int,
    t_of_last_update: int,
    window_size: int,
    loss_improvement_factor: float,
    last_mean_loss: float,
    mean_window_loss: float,
    expected_per_step_improvement: float,
) -> bool:
    """Decide whether a new step size must be measured.

    Fires only on window boundaries, and only when the realized improvement
    over the window is at most the improvement-factor fraction of the
    extrapolated expectation.
    """
    if (t - t_of_last_update + 1) % (window_size + 1) != 0:
        return False
    real = last_mean_loss - mean_window_loss
    expected = last_mean_loss - expected_per_step_improvement * (t - t_of_last_update)
    return real <= expected * loss_improvement_factor


def apply_decrease_factor(
    fit: Polynomial,
    s_min: float,
    delta: float,
    bracket_end: float,
    grid_cells: int = 10_000,
) -> float:
    """Back off from the fitted minimum to the smallest step past it whose
    fitted loss gives back a delta fraction of the improvement.

    Solves fit(s) = fit(s_min) + delta * (fit(0) - fit(s_min)) for the
    smallest s > s_min by grid scan and bisection. Returns s_min itself when
    delta is zero or no such crossing exists before bracket_end.
    """
    if delta == 0.0 or bracket_end <= s_min:
        return s_min
    target = evaluate(fit, s_min) + delta * (evaluate(fit, 0.0) - evaluate(fit, s_min))

    def g(s):
        return evaluate(fit, s) - target

    grid = np.linspace(s_min, bracket_end, grid_cells + 1)
    gvals = g(grid)
    exact = grid[(gvals == 0.0) & (grid > s_min)]
    candidates = list(exact)
    crossing = np.nonzero(gvals[:-1] * gvals[1:] < 0.0)[0]
    if crossing.size:
        i = crossing[0]
        candidates.append(_bisect(g, grid[i], grid[i + 1], tol=1e-13))
    if not candidates:
        return s_min
    return float(min(candidates))


def initial_grid_search(
    problem,
    config: ElfConfig,
    train_stream: BatchStream,
    state: OptimizerState,
    log: TrainingLog,
) -> float:
    """Probe candidate step sizes from largest to smallest and keep the first
    (largest) whose probe losses beat standing still.

    Every probe runs unit-gradient SGD steps from a fresh copy of the current
    parameters; the baseline is the mean batch loss at the unmoved parameters
    over the same number of batches. Falls back to the smallest candidate.
    """
    probe = config.grid_search_probe_steps
    candidates = sorted(config.grid_search_candidates, reverse=True)
    theta0 = state.theta.copy()

    baseline_losses = []
    for _ in range(probe):
        batch = train_stream.next_batch()
        state.current_batch = batch
        loss = float(problem.batch_loss(theta0, batch))
        state.t += 1
        log.rows.append(LogRow(state.t, "grid_search", loss, None, None, None))
        baseline_losses.append(loss)
    baseline = float(np.mean(baseline_losses))
    state.baseline_level = baseline

    for candidate in candidates:
        theta = theta0.copy()
        probe_losses = []
        for _ in range(probe):
            batch = train_stream.next_batch()
            state.current_batch = batch
            loss = float(problem.batch_loss(theta, batch))
            gradient = problem.batch_gradient(theta, batch)
            norm = float(np.linalg.norm(gradient))
            if norm > 0.0:
                theta = theta - candidate * (gradient / norm)
            state.t += 1
            log.rows.append(LogRow(state.t, "grid_search", loss, candidate, None, None))
            probe_losses.append(loss)
        if float(np.mean(probe_losses)) < baseline:
            return candidate
    return candidates[-1]


def trigger_line_searches(
    state: OptimizerState,
    config: ElfConfig,
    problem,
    train_stream: BatchStream,
    val_stream: BatchStream,
    line_rng: np.random.Generator,
    cv_rng: np.random.Generator,
    log: TrainingLog,
    line_config: LineSearchConfig | None = None,
) -> OptimizerState:
    """Measure a new step size with consecutive line searches.

    Each search folds the current batch gradient into the momentum buffer,
    searches along the normalized negative buffer, and immediately applies
    its own (decrease-factor adjusted) step, so successive lines start from
    moved parameters. The SGD step size becomes the mean over the valid
    suggestions; searches without a positive minimum are discarded, and when
    none are valid the step size keeps its previous value.
    """
    if line_config is None:
        line_config = config.line_search
    sample_stream = val_stream if config.sample_from_validation else train_stream

    applied_steps: list[float] = []
    improvements: list[float] = []
    applied_improvements: list[float] = []
    fitted_origins: list[float] = []
    for _ in range(config.lines_to_average):
        gradient = problem.batch_gradient(state.theta, state.current_batch)
        state.momentum_buffer = config.momentum_beta * state.momentum_buffer + gradient
        norm = float(np.linalg.norm(state.momentum_buffer))
        if norm == 0.0:
            continue
        direction = -state.momentum_buffer / norm
        theta0 = state.theta.copy()

        def oracle(s: float) -> float:
            batch = sample_stream.next_batch()
            loss = float(problem.batch_loss(theta0 + s * direction, batch))
            state.t += 1
            log.rows.append(LogRow(state.t, "line_search", loss, state.update_step, None, None))
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite line-search loss at step {state.t}")
            return loss

        result = elf_line_search(oracle, line_config, line_rng, cv_rng)
        log.line_searches.append(
            LineSearchRecord(
                index=len(log.line_searches),
                samples=result.samples,
                rounds=result.rounds,
                fit=result.fit,
                minimum_position=result.minimum_position,
            )
        )
        if result.valid:
            s_target = apply_decrease_factor(
                result.fit.polynomial,
                result.minimum_position,
                config.decrease_factor_delta,
                float(result.samples.positions.max()),
            )
            state.theta = theta0 + s_target * direction
            applied_steps.append(s_target)
            improvements.append(result.expected_improvement)
            applied_improvements.append(
                evaluate(result.fit.polynomial, 0.0)
                - evaluate(result.fit.polynomial, s_target)
            )
            fitted_origins.append(evaluate(result.fit.polynomial, 0.0))

    if applied_steps:
        state.update_step = float(np.mean(applied_steps))
        state.expected_per_step_improvement = float(np.mean(improvements)) / config.window_size
    else:
        # No line produced a usable minimum: the step size keeps its previous
        # value, but the improvement expectation is re-measured as zero so an
        # infinite initial expectation cannot block every future trigger.
        state.expected_per_step_improvement = 0.0

    # Reference level for the next trigger evaluations: the loss level right
    # after this phase, estimated as the level before it minus the fitted
    # improvement the applied steps delivered. Anchoring to the post-phase
    # level makes real_improvement measure pure SGD-phase progress, which is
    # the only reading under which a later plateau can re-trigger a search.
    if state.losses:
        pre_level = float(np.mean(state.losses))
    elif state.baseline_level is not None:
        pre_level = state.baseline_level
    elif fitted_origins:
        pre_level = fitted_origins[0]
    else:
        pre_level = state.last_mean_loss
    state.last_mean_loss = pre_level - float(np.sum(applied_improvements))
    state.losses = []
    state.t_of_last_update = state.t
    return state


def run(
    problem,
    config: ElfConfig,
    steps_to_train: int,
    streams: RngStreams,
) -> tuple[OptimizerState, TrainingLog]:
    """Train for steps_to_train batch loads and return state plus full log.

    Start-up: an optional grid search picks the largest workable step size
    (it seeds both the first SGD step and the line-search interval width),
    then one search phase measures the actual step. After that the trigger
    predicate decides on every window boundary whether to re-measure.
    """
    if steps_to_train < 1:
        raise ValueError("steps_to_train must be >= 1")
    theta = np.asarray(problem.initial_theta(streams.theta_init), dtype=float).copy()
    state = OptimizerState(theta=theta, momentum_buffer=np.zeros_like(theta))
    log = TrainingLog()
    train_stream = BatchStream(problem.train_batches, streams.train_order)
    val_stream = BatchStream(problem.validation_batches, streams.val_order)

    line_config = config.line_search
    if config.grid_search_probe_steps > 0 and config.grid_search_candidates:
        selected = initial_grid_search(problem, config, train_stream, state, log)
        state.update_step = float(selected)
        line_config = replace(config.line_search, initial_interval_width=float(selected))
    if state.current_batch is None:
        _sgd_step(problem, state, train_stream, log)
    trigger_line_searches(
        state, config, problem, train_stream, val_stream,
        streams.line_search, streams.cv, log, line_config,
    )

    while state.t < steps_to_train:
        mean_window = float(np.mean(state.losses)) if state.losses else float("nan")
        real = state.last_mean_loss - mean_window
        expected = state.last_mean_loss - state.expected_per_step_improvement * (
            state.t - state.t_of_last_update
        )
        on_boundary = (state.t - state.t_of_last_update + 1) % (config.window_size + 1) == 0
        if search_trigger(
            state.t,
            state.t_of_last_update,
            config.window_size,
            config.loss_improvement_factor,
            state.last_mean_loss,
            mean_window,
            state.expected_per_step_improvement,
        ):
            t_before = state.t
            trigger_line_searches(
                state, config, problem, train_stream, val_stream,
                streams.line_search, streams.cv, log, line_config,
            )
            if state.t == t_before:
                # Zero-norm search direction everywhere: no batch was loaded,
                # so take an SGD step to keep the run progressing.
                _sgd_step(problem, state, train_stream, log, expected, real)
        else:
            if on_boundary and state.losses:
                # Window boundary without a search: roll the reference level
                # so real_improvement keeps measuring progress over the most
                # recent step window (a plateau then reads as ~0).
                state.last_mean_loss = mean_window
                state.losses = []
            _sgd_step(problem, state, train_stream, log, expected, real)
    return state, log


def _sgd_step(problem, state, train_stream, log, expected=None, real=None):
    """One unit-gradient SGD step: the displacement norm equals update_step."""
    batch = train_stream.next_batch()
    state.current_batch = batch
    loss = float(problem.batch_loss(state.theta, batch))
    state.t += 1
    log.rows.append(LogRow(state.t, "sgd", loss, state.update_step, expected, real))
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite training loss at step {state.t}")
    gradient = problem.batch_gradient(state.theta, batch)
    norm = float(np.linalg.norm(gradient))
    if norm > 0.0:
        state.theta = state.theta - state.update_step * (gradient / norm)
    state.losses.append(loss)
