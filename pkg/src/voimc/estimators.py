"""Estimators for the expected value of perfect and partial perfect information.

The information value of a decision problem is the gap between the expected
best payoff achievable with extra knowledge and the best expected payoff
without it.  Estimating the "without" side from finite samples pushes a sample
average through a max, which is systematically optimistic (Jensen), so the
plain nested estimators here are biased at any finite inner sample size.  The
randomized multilevel estimators remove that plug-in limit by telescoping it
across sample sizes base**0, base**1, ...: a level-l correction compares
best-decision block means at block sizes base**(l-1) and base**l over one
shared batch of base**l samples, and correction levels are drawn at random
with compensating probability weights, so each draw is an unbiased reading of
the whole telescope.

Numerical layout: every block mean is produced by ``_fold_blocks``, a
fixed-grouping sequential fold, and the same fold also averages the
best-of-block values across blocks.  Because inner and outer averages share
one reduction tree, models with a single decision or with constant payoffs
cancel to exactly 0.0, the unweighted bracket of a level correction is
non-negative for every realization (not merely in expectation), and the
level-1 single/coupled coupling identity holds to the bit.  Tests rely on all
three properties.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .levels import BudgetExhaustedError, EmpiricalLevelProfile, LevelDistribution, draws_for_budget
from .model import DecisionModel, FactoredSampler, PriorSampler
from .rng import RngStream

__all__ = [
    "LevelTerm",
    "LevelStats",
    "EstimateResult",
    "max_mean_payoff",
    "nested_allocation",
    "evpi_nested",
    "evppi_nested",
    "level_term_single",
    "level_term_coupled",
    "conditional_level_term_single",
    "conditional_level_term_coupled",
    "evpi_mlmc",
    "evppi_mlmc",
    "pilot_level_profile",
]

_VARIANTS = ("single", "coupled")


# ---------------------------------------------------------------------------
# results and running statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelTerm:
    """One realized level correction, probability weights included."""

    level: int
    value: float
    cost: int


@dataclass(frozen=True)
class LevelStats:
    """Count, mean and raw second moment of realized terms at one level."""

    count: int
    mean: float
    second_moment: float


@dataclass(frozen=True)
class EstimateResult:
    """Outcome of one estimator run.

    ``estimate`` is the arithmetic mean of the ``n_draws`` per-draw terms,
    ``cost_used`` the total payoff evaluations consumed, ``term_variance`` the
    sample variance of the per-draw terms (nan when n_draws < 2), and
    ``per_level`` maps each realized level to statistics of its terms.
    """

    estimate: float
    n_draws: int
    cost_used: int
    term_variance: float
    per_level: dict[int, LevelStats] = field(default_factory=dict)


class _RunningMoments:
    """Numerically stable one-pass accumulator (Welford / Chan merging)."""

    __slots__ = ("count", "mean", "_m2")

    def __init__(self) -> None:
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    def add_many(self, values: np.ndarray) -> None:
        k = int(values.shape[0])
        if k == 0:
            return
        batch_mean = float(np.mean(values))
        batch_m2 = float(np.sum((values - batch_mean) ** 2))
        total = self.count + k
        delta = batch_mean - self.mean
        self.mean += delta * k / total
        self._m2 += batch_m2 + delta * delta * self.count * k / total
        self.count = total

    @property
    def sample_variance(self) -> float:
        if self.count < 2:
            return float("nan")
        return self._m2 / (self.count - 1)

    @property
    def second_moment(self) -> float:
        if self.count == 0:
            return float("nan")
        return self._m2 / self.count + self.mean * self.mean


def _freeze_levels(acc: dict[int, _RunningMoments]) -> dict[int, LevelStats]:
    return {
        lvl: LevelStats(m.count, m.mean, m.second_moment)
        for lvl, m in sorted(acc.items())
    }


# ---------------------------------------------------------------------------
# block reductions
# ---------------------------------------------------------------------------


def _fold_blocks(values: np.ndarray, width: int) -> np.ndarray:
    """Mean of consecutive length-``width`` groups along axis 0.

    Summation is explicit and left-to-right so the grouping is identical
    whether ``values`` is 1-D or has trailing axes; the exactness guarantees
    in the module docstring depend on that.
    """
    grouped = values.reshape(-1, width, *values.shape[1:])
    acc = grouped[:, 0].astype(np.float64, copy=True)
    for i in range(1, width):
        acc += grouped[:, i]
    acc /= width
    return acc


def _tree_mean(values: np.ndarray, width: int) -> float:
    """Arithmetic mean of a length-width**k vector via repeated folds."""
    while values.shape[0] > 1:
        values = _fold_blocks(values, width)
    return float(values[0])


def _level_brackets(payoffs: np.ndarray, base: int, level: int) -> list[float]:
    """Unweighted correction brackets at scales 1..level from one payoff batch.

    Element j-1 is the average over blocks of the best-decision block mean at
    block size base**(j-1), minus the same at block size base**j, all from the
    identical base**level rows of ``payoffs``.  Each element is >= 0 for every
    realization, because averaging best values over sub-blocks can only beat
    taking the best of the pooled averages.
    """
    if payoffs.shape[0] != base**level:
        raise ValueError(
            f"expected {base**level} payoff rows for level {level}, "
            f"got {payoffs.shape[0]}"
        )
    block_means = payoffs
    tree = [_tree_mean(block_means.max(axis=1), base)]
    for _ in range(level):
        block_means = _fold_blocks(block_means, base)
        tree.append(_tree_mean(block_means.max(axis=1), base))
    return [tree[j - 1] - tree[j] for j in range(1, level + 1)]


def _term_value(brackets: list[float], dist: LevelDistribution, variant: str) -> float:
    """Apply probability weights to the brackets of one level-term draw."""
    if variant == "single":
        return brackets[-1] / dist.pmf(len(brackets))
    if variant == "coupled":
        # 1/tail(j) applied as (1/pmf(j)) * pmf(1), which is exact for the
        # geometric law and makes the level-1 coupled term bitwise equal to
        # pmf(1) times the single term on shared samples.
        head = dist.pmf(1)
        return sum((b / dist.pmf(j)) * head for j, b in enumerate(brackets, start=1))
    raise ValueError(f"variant must be one of {_VARIANTS}, got {variant!r}")


# ---------------------------------------------------------------------------
# plug-in statistics and nested estimators
# ---------------------------------------------------------------------------


def max_mean_payoff(model: DecisionModel, samples: np.ndarray) -> float:
    """Best per-decision sample mean: the max of means, not the mean of maxes.

    As the sample grows this converges from above (in expectation) to the best
    expected payoff; with a single sample it is just that sample's best payoff.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None] if model.dimension == 1 else samples[None, :]
    if samples.shape[0] < 1:
        raise ValueError("need at least one sample")
    return float(model.payoff_matrix(samples).mean(axis=0).max())


def nested_allocation(budget: int, gamma: float = 1.0) -> tuple[int, int]:
    """Split a budget of inner*outer evaluations for the nested estimator.

    With the inner bias decaying like inner**-gamma, the error-optimal split
    puts outer = budget**w and inner = budget**(1-w) with w = 2*gamma/(1+2*gamma)
    (more samples outside, fewer inside).  Returns (inner, outer), each
    floored at 1.  Requires gamma > 1/2.
    """
    if budget < 4:
        raise ValueError("budget must be at least 4")
    if gamma <= 0.5:
        raise ValueError("gamma must exceed 1/2 for the allocation heuristic")
    w = 2.0 * gamma / (1.0 + 2.0 * gamma)
    return max(1, _floor_power(budget, 1.0 - w)), max(1, _floor_power(budget, w))


def _floor_power(budget: int, exponent: float) -> int:
    # floor(budget**exponent) with a relative nudge so exact integer powers
    # (e.g. 4096**(2/3) = 256) survive floating-point rounding.
    x = float(budget) ** exponent
    return int(np.floor(x * (1.0 + 1e-12) + 1e-12))


def _accumulate_best_means(
    model: DecisionModel,
    prior: PriorSampler,
    draws: int,
    rng: np.random.Generator,
    chunk: int,
) -> float:
    """max_d of the per-decision mean over ``draws`` prior samples, chunked."""
    sums = np.zeros(model.n_decisions, dtype=np.float64)
    remaining = draws
    while remaining > 0:
        m = min(chunk, remaining)
        sums += model.payoff_matrix(prior.draw(rng, m)).sum(axis=0)
        remaining -= m
    return float((sums / draws).max())


def evpi_nested(
    model: DecisionModel,
    prior: PriorSampler,
    *,
    outer_draws: int,
    baseline_draws: int,
    rng: RngStream,
    chunk: int = 65536,
) -> EstimateResult:
    """Plain two-sample estimator of the value of perfect information.

    Averages the per-sample best payoff over ``outer_draws`` prior samples and
    subtracts the best per-decision mean over an independent batch of
    ``baseline_draws``.  The first term is unbiased; the subtracted term
    over-estimates its target at any finite size, so the whole estimator is
    biased low.  Cost: outer_draws + baseline_draws.
    """
    if outer_draws < 1 or baseline_draws < 1:
        raise ValueError("outer_draws and baseline_draws must be >= 1")
    moments = _RunningMoments()
    gen = rng.child(0).generator()
    remaining = outer_draws
    while remaining > 0:
        m = min(chunk, remaining)
        payoffs = model.payoff_matrix(prior.draw(gen, m))
        moments.add_many(payoffs.max(axis=1))
        remaining -= m
    baseline = _accumulate_best_means(
        model, prior, baseline_draws, rng.child(1).generator(), chunk
    )
    return EstimateResult(
        estimate=float(moments.mean - baseline),
        n_draws=outer_draws,
        cost_used=outer_draws + baseline_draws,
        term_variance=moments.sample_variance,
    )


def evppi_nested(
    model: DecisionModel,
    factored: FactoredSampler,
    prior: PriorSampler,
    *,
    outer_draws: int,
    inner_draws: int,
    baseline_draws: int,
    rng: RngStream,
    chunk: int = 65536,
) -> EstimateResult:
    """Nested estimator of the value of revealing the factored-out block.

    For each of ``outer_draws`` revealed-block samples, takes the best
    decision of an ``inner_draws``-sample conditional mean, averages those
    bests, and subtracts the baseline term of `evpi_nested`.  Both terms carry
    finite-sample Jensen bias.  Cost: outer_draws*inner_draws + baseline_draws.
    """
    if outer_draws < 1 or inner_draws < 1 or baseline_draws < 1:
        raise ValueError("all draw counts must be >= 1")
    revealed = factored.draw_marginal(rng.child(0).generator(), outer_draws)
    moments = _RunningMoments()
    for i in range(1, outer_draws + 1):
        gen = rng.child(2, i).generator()
        hidden = factored.draw_conditional(revealed[i - 1], gen, inner_draws)
        payoffs = model.payoff_matrix(factored.combine(revealed[i - 1], hidden))
        moments.add(float(payoffs.mean(axis=0).max()))
    baseline = _accumulate_best_means(
        model, prior, baseline_draws, rng.child(1).generator(), chunk
    )
    return EstimateResult(
        estimate=float(moments.mean - baseline),
        n_draws=outer_draws,
        cost_used=outer_draws * inner_draws + baseline_draws,
        term_variance=moments.sample_variance,
    )


# ---------------------------------------------------------------------------
# level correction terms
# ---------------------------------------------------------------------------


def level_term_single(
    model: DecisionModel,
    prior: PriorSampler,
    level: int,
    dist: LevelDistribution,
    rng: np.random.Generator,
) -> LevelTerm:
    """One single-term correction draw for the perfect-information value.

    Draws base**level fresh prior samples, compares the average best-of-block
    mean at block size base**(level-1) against the best pooled mean over the
    same samples, and divides by pmf(level).
    """
    n = dist.cost(level)
    payoffs = model.payoff_matrix(prior.draw(rng, n))
    brackets = _level_brackets(payoffs, dist.base, level)
    return LevelTerm(level=level, value=brackets[-1] / dist.pmf(level), cost=n)


def level_term_coupled(
    model: DecisionModel,
    prior: PriorSampler,
    level: int,
    dist: LevelDistribution,
    rng: np.random.Generator,
) -> LevelTerm:
    """One coupled-sum correction draw for the perfect-information value.

    Same base**level samples as the single term, but sums the brackets at
    every scale j <= level, each weighted by the reciprocal tail mass of the
    level law at j.
    """
    n = dist.cost(level)
    payoffs = model.payoff_matrix(prior.draw(rng, n))
    brackets = _level_brackets(payoffs, dist.base, level)
    return LevelTerm(
        level=level, value=_term_value(brackets, dist, "coupled"), cost=n
    )


def conditional_level_term_single(
    model: DecisionModel,
    factored: FactoredSampler,
    revealed_values: np.ndarray,
    level: int,
    dist: LevelDistribution,
    rng: np.random.Generator,
) -> LevelTerm:
    """Single-term correction draw conditioned on one revealed block.

    Identical block structure to `level_term_single`, with the base**level
    samples drawn from the conditional law of the hidden block given
    ``revealed_values``.  Averaged over revealed draws these terms estimate
    the gap between the perfect-information value and the revealed-block
    value.
    """
    n = dist.cost(level)
    hidden = factored.draw_conditional(revealed_values, rng, n)
    payoffs = model.payoff_matrix(factored.combine(revealed_values, hidden))
    brackets = _level_brackets(payoffs, dist.base, level)
    return LevelTerm(level=level, value=brackets[-1] / dist.pmf(level), cost=n)


def conditional_level_term_coupled(
    model: DecisionModel,
    factored: FactoredSampler,
    revealed_values: np.ndarray,
    level: int,
    dist: LevelDistribution,
    rng: np.random.Generator,
) -> LevelTerm:
    """Coupled-sum correction draw conditioned on one revealed block."""
    n = dist.cost(level)
    hidden = factored.draw_conditional(revealed_values, rng, n)
    payoffs = model.payoff_matrix(factored.combine(revealed_values, hidden))
    brackets = _level_brackets(payoffs, dist.base, level)
    return LevelTerm(
        level=level, value=_term_value(brackets, dist, "coupled"), cost=n
    )


# ---------------------------------------------------------------------------
# randomized multilevel estimators
# ---------------------------------------------------------------------------
#
# Stream layout shared by both estimators (rng is the run's root stream):
#   child(0)   level sequence, generated serially before any draws
#   child(i)   all samples of draw i (i = 1..n): prior samples first, then,
#              for the partial-information estimator only, the revealed block
#              and its conditional samples
# The perfect-information part of `evppi_mlmc` consumes the prefix of each
# draw stream exactly as `evpi_mlmc` would, which keeps the two estimators
# bit-identical on models whose conditional part is degenerate.


def evpi_mlmc(
    model: DecisionModel,
    prior: PriorSampler,
    dist: LevelDistribution,
    budget: int,
    variant: str,
    rng: RngStream,
) -> EstimateResult:
    """Randomized multilevel estimator of the perfect-information value.

    Draws i.i.d. levels until their cumulative cost base**l would exceed
    ``budget``, evaluates one correction term per level, and averages.  Raises
    BudgetExhaustedError when even the first level does not fit (re-drawing it
    would tilt the level law).
    """
    if variant not in _VARIANTS:
        raise ValueError(f"variant must be one of {_VARIANTS}, got {variant!r}")
    if budget < dist.cost(1):
        raise ValueError(f"budget must be at least base**1 = {dist.cost(1)}")
    levels, n = draws_for_budget(dist, budget, rng.child(0).generator())
    if n == 0:
        raise BudgetExhaustedError(
            f"first drawn level does not fit within budget {budget}"
        )
    moments = _RunningMoments()
    per_level: dict[int, _RunningMoments] = {}
    cost_used = 0
    for i, level in enumerate(levels, start=1):
        gen = rng.child(i).generator()
        payoffs = model.payoff_matrix(prior.draw(gen, dist.cost(level)))
        value = _term_value(_level_brackets(payoffs, dist.base, level), dist, variant)
        moments.add(value)
        per_level.setdefault(level, _RunningMoments()).add(value)
        cost_used += dist.cost(level)
    return EstimateResult(
        estimate=float(moments.mean),
        n_draws=n,
        cost_used=cost_used,
        term_variance=moments.sample_variance,
        per_level=_freeze_levels(per_level),
    )


def _paired_levels_for_budget(
    dist: LevelDistribution,
    budget: int,
    rng_first: np.random.Generator,
    rng_second: np.random.Generator,
) -> list[tuple[int, int]]:
    """Prefix rule over independent level pairs costing base**l1 + base**l2."""
    pairs: list[tuple[int, int]] = []
    total = 0
    for first, second in zip(dist.stream(rng_first), dist.stream(rng_second)):
        cost = dist.cost(first) + dist.cost(second)
        if total + cost > budget:
            break
        pairs.append((first, second))
        total += cost
    return pairs


def evppi_mlmc(
    model: DecisionModel,
    factored: FactoredSampler,
    prior: PriorSampler,
    dist: LevelDistribution,
    budget: int,
    variant_y: str = "coupled",
    variant_z: str = "coupled",
    shared_level: bool = True,
    *,
    rng: RngStream,
) -> EstimateResult:
    """Randomized multilevel estimator of the revealed-block information value.

    Each draw combines a perfect-information correction term (from fresh prior
    samples) minus a conditional correction term (from a fresh revealed-block
    sample and conditional samples); the difference targets the revealed-block
    value directly.  With ``shared_level`` one random level serves both parts
    of a draw, otherwise the parts get independent levels.  Either way a draw
    costs both parts' evaluations, and the draw count follows the same prefix
    budget rule as `evpi_mlmc` applied to the per-draw cost.

    ``per_level`` in the result is keyed by the perfect-information part's
    level.
    """
    for name, variant in (("variant_y", variant_y), ("variant_z", variant_z)):
        if variant not in _VARIANTS:
            raise ValueError(f"{name} must be one of {_VARIANTS}, got {variant!r}")
    if budget < 2 * dist.cost(1):
        raise ValueError(f"budget must be at least 2*base = {2 * dist.cost(1)}")
    if shared_level:
        # cost per draw is 2*base**l, so the prefix rule over budget reduces
        # to the plain rule over budget // 2
        levels, n = draws_for_budget(dist, budget // 2, rng.child(0).generator())
        pairs = [(lvl, lvl) for lvl in levels]
    else:
        pairs = _paired_levels_for_budget(
            dist, budget, rng.child(0, 0).generator(), rng.child(0, 1).generator()
        )
        n = len(pairs)
    if n == 0:
        raise BudgetExhaustedError(
            f"first drawn level pair does not fit within budget {budget}"
        )
    moments = _RunningMoments()
    per_level: dict[int, _RunningMoments] = {}
    cost_used = 0
    for i, (level_y, level_z) in enumerate(pairs, start=1):
        gen = rng.child(i).generator()
        payoffs = model.payoff_matrix(prior.draw(gen, dist.cost(level_y)))
        value_y = _term_value(
            _level_brackets(payoffs, dist.base, level_y), dist, variant_y
        )
        revealed_values = factored.draw_marginal(gen, 1)[0]
        hidden = factored.draw_conditional(revealed_values, gen, dist.cost(level_z))
        payoffs_z = model.payoff_matrix(factored.combine(revealed_values, hidden))
        value_z = _term_value(
            _level_brackets(payoffs_z, dist.base, level_z), dist, variant_z
        )
        term = value_y - value_z
        moments.add(term)
        per_level.setdefault(level_y, _RunningMoments()).add(term)
        cost_used += dist.cost(level_y) + dist.cost(level_z)
    return EstimateResult(
        estimate=float(moments.mean),
        n_draws=n,
        cost_used=cost_used,
        term_variance=moments.sample_variance,
        per_level=_freeze_levels(per_level),
    )


# ---------------------------------------------------------------------------
# pilot profiling
# ---------------------------------------------------------------------------


def pilot_level_profile(
    model: DecisionModel,
    prior: PriorSampler,
    base: int,
    rng: RngStream,
    levels: tuple[int, ...] = (1, 2, 3, 4, 5, 6),
    draws_per_level: int = 1000,
) -> EmpiricalLevelProfile:
    """Estimate per-level second moments of the unweighted correction brackets.

    Runs a fixed-size pilot at each requested level; the resulting profile
    feeds `optimal_level_pmf` and `expected_cost_for_rmse` when choosing a
    level law empirically rather than from an assumed decay exponent.
    """
    if draws_per_level < 1:
        raise ValueError("draws_per_level must be >= 1")
    second_moments: dict[int, float] = {}
    counts: dict[int, int] = {}
    for level in sorted(set(int(l) for l in levels)):
        if level < 1:
            raise ValueError("levels must be positive integers")
        gen = rng.child(level).generator()
        total_sq = 0.0
        for _ in range(draws_per_level):
            payoffs = model.payoff_matrix(prior.draw(gen, base**level))
            bracket = _level_brackets(payoffs, base, level)[-1]
            total_sq += bracket * bracket
        second_moments[level] = total_sq / draws_per_level
        counts[level] = draws_per_level
    return EmpiricalLevelProfile(second_moments=second_moments, counts=counts)
