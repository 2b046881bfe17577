"""Line search on the empirical loss: sample noisy batch losses along one
direction, fit a cross-validated polynomial, and step to its minimum.

The search runs k rounds. Each round draws n step sizes uniformly at random
from [0, interval_width], measures one batch loss per step size, refits over
all accumulated samples, and relocates the minimum nearest the origin. From
round 1 on the sampling interval is re-chosen so the point cloud around the
minimum stays wider than high.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .poly import Polynomial, closest_minimum_to_zero, derivative, evaluate, solve_for_value_nearest
from .regression import FitReport, SampleSet, select_degree_and_fit

# The fitted minimum may be located up to one interval width beyond the
# sampled region; mild extrapolation lets the interval adaptation chase a
# minimum that lies past the current window.
EXTRAPOLATION_FACTOR = 2.0


@dataclass(frozen=True)
class LineSearchConfig:
    k: int = 5                            # interval adaptations
    n: int = 100                          # losses sampled per adaptation
    initial_interval_width: float = 1.0
    min_window_size: int = 50
    folds: int = 5
    max_degree: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n < self.folds:
            raise ValueError("n must be >= folds")
        if self.initial_interval_width <= 0.0:
            raise ValueError("initial_interval_width must be positive")
        if self.min_window_size < 1:
            raise ValueError("min_window_size must be >= 1")


@dataclass(frozen=True)
class LineSearchResult:
    """Outcome of one line search.

    minimum_position and expected_improvement are None when the final fit has
    no minimum at a positive step; valid mirrors that. rounds[i] records which
    adaptation round produced samples[i].
    """

    minimum_position: float | None
    expected_improvement: float | None
    batches_consumed: int
    fit: FitReport
    samples: SampleSet
    rounds: np.ndarray
    valid: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "valid",
            self.minimum_position is not None and self.minimum_position > 0.0,
        )


def third_quartile(values: np.ndarray) -> float:
    """Q3 with linear interpolation between order statistics (R-7 rule)."""
    return float(np.quantile(np.asarray(values, dtype=float), 0.75))


def chose_sample_interval(
    minimum_position: float,
    samples: SampleSet,
    fit: Polynomial,
    min_window_size: int,
    current_width: float | None = None,
) -> float:
    """Pick the next sampling interval width around the located minimum.

    The window is every sample at position 0 <= m <= 2 * minimum_position,
    falling back to the min_window_size positions nearest the minimum when
    that strip is too thin. The new width is where |fit| returns to the
    window's third-quartile loss, nearest to the minimum; if the fit never
    reaches that level, twice the minimum position (or twice the smallest
    positive sample) is used.
    """
    if current_width is None:
        current_width = float(samples.positions.max())
    in_strip = (samples.positions >= 0.0) & (samples.positions <= 2.0 * minimum_position)
    if int(in_strip.sum()) < min_window_size:
        order = np.argsort(np.abs(samples.positions - minimum_position), kind="stable")
        window = order[: min(min_window_size, len(samples))]
        window_losses = samples.losses[window]
    else:
        window_losses = samples.losses[in_strip]
    target_loss = third_quartile(window_losses)

    bracket_end = max(4.0 * minimum_position, current_width)
    width = None
    if bracket_end > 0.0:
        width = solve_for_value_nearest(fit, target_loss, minimum_position, (0.0, bracket_end))
    if width is None:
        positive = samples.positions[samples.positions > 0.0]
        smallest_positive = float(positive.min()) if positive.size else 0.0
        width = 2.0 * max(minimum_position, smallest_positive)
    return float(width)


def elf_line_search(
    direction_oracle: Callable[[float], float],
    config: LineSearchConfig,
    rng: np.random.Generator,
    cv_rng: np.random.Generator | None = None,
) -> LineSearchResult:
    """Run the full adaptive-interval line search along one direction.

    direction_oracle maps a step size s to one batch loss measured at that
    step; it must draw a fresh batch per call. Every call is counted in
    batches_consumed, including one baseline measurement at s=0 that anchors
    the fit's value at the origin.
    """
    if cv_rng is None:
        cv_rng = rng
    width = config.initial_interval_width
    positions: list[float] = [0.0]
    losses: list[float] = [float(direction_oracle(0.0))]
    rounds: list[int] = [0]

    samples = SampleSet(np.array(positions), np.array(losses))
    report: FitReport | None = None
    minimum: float | None = None

    for r in range(config.k):
        if r != 0:
            if minimum is not None:
                adapted = chose_sample_interval(
                    minimum, samples, report.polynomial, config.min_window_size, width
                )
                width = adapted if adapted > 0.0 else width
            else:
                # No minimum yet: widen while the fit still descends at the
                # origin, otherwise shrink to resolve smaller steps.
                slope = evaluate(derivative(report.polynomial), 0.0)
                width = width * 2.0 if slope <= 0.0 else width * 0.5
        for s in np.sort(rng.uniform(0.0, width, config.n)):
            positions.append(float(s))
            losses.append(float(direction_oracle(float(s))))
            rounds.append(r)
        samples = SampleSet(np.array(positions), np.array(losses))
        report = select_degree_and_fit(samples, config.max_degree, config.folds, cv_rng)
        scan_end = EXTRAPOLATION_FACTOR * max(width, float(samples.positions.max()))
        found = closest_minimum_to_zero(report.polynomial, (0.0, scan_end))
        minimum = found[0] if found is not None else None

    improvement = None
    if minimum is not None and minimum > 0.0:
        improvement = evaluate(report.polynomial, 0.0) - evaluate(report.polynomial, minimum)
    return LineSearchResult(
        minimum_position=minimum,
        expected_improvement=improvement,
        batches_consumed=len(losses),
        fit=report,
        samples=samples,
        rounds=np.array(rounds),
    )
