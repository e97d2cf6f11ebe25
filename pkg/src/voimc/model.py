"""Decision-problem abstraction: decisions, payoffs, and parameter samplers.

A decision problem is a finite set of decisions, a payoff function over an
uncertain parameter vector, and samplers for that vector.  For partial
information analyses the vector splits into a revealed block (the coordinates
whose uncertainty would be eliminated) and a hidden block, sampled through a
marginal / conditional factorization.

Everything here is immutable and payoff evaluation is pure, so models and
samplers may be shared freely across workers as long as each worker owns its
own random stream.  Payoffs are assumed square-integrable under the prior;
that assumption is documented, not enforced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DecisionModel",
    "PriorSampler",
    "FactoredSampler",
    "PayoffEvaluationError",
    "payoff_vector",
    "max_payoff",
]


class PayoffEvaluationError(ValueError):
    """A payoff evaluated to a non-finite value."""


@dataclass(frozen=True)
class DecisionModel:
    """A finite decision set with one payoff function per decision.

    Args:
        decisions: ordered, non-empty, duplicate-free decision labels.
        payoff: (decision, x) -> monetary value for a single parameter vector.
        dimension: length of the parameter vector.
        batch_payoff: optional vectorized form, (n, dimension) -> (n, len(decisions));
            used by the estimators when present, otherwise ``payoff`` is looped.
    """

    decisions: tuple
    payoff: Callable[[object, np.ndarray], float]
    dimension: int
    batch_payoff: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if len(self.decisions) == 0:
            raise ValueError("decision set must be non-empty")
        if len(set(self.decisions)) != len(self.decisions):
            raise ValueError("decision labels must be unique")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def n_decisions(self) -> int:
        return len(self.decisions)

    def payoff_matrix(self, xs: np.ndarray) -> np.ndarray:
        """Payoffs of every decision at every row of ``xs``.

        Returns an (n, n_decisions) float array; raises PayoffEvaluationError
        if any entry is non-finite, naming the decision and the point.
        """
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.dimension:
            raise ValueError(
                f"expected samples of shape (n, {self.dimension}), got {xs.shape}"
            )
        if self.batch_payoff is not None:
            out = np.asarray(self.batch_payoff(xs), dtype=np.float64)
            if out.shape != (xs.shape[0], self.n_decisions):
                raise ValueError(
                    f"batch_payoff returned shape {out.shape}, expected "
                    f"{(xs.shape[0], self.n_decisions)}"
                )
        else:
            out = np.empty((xs.shape[0], self.n_decisions), dtype=np.float64)
            for j, decision in enumerate(self.decisions):
                out[:, j] = [float(self.payoff(decision, x)) for x in xs]
        if not np.isfinite(out).all():
            i, j = np.argwhere(~np.isfinite(out))[0]
            raise PayoffEvaluationError(
                f"payoff for decision {self.decisions[j]!r} is not finite "
                f"at x={xs[i].tolist()}"
            )
        return out


def payoff_vector(model: DecisionModel, x: np.ndarray) -> np.ndarray:
    """All decision payoffs at a single point, in decision order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dimension,):
        raise ValueError(f"expected x of shape ({model.dimension},), got {x.shape}")
    return model.payoff_matrix(x[None, :])[0]


def max_payoff(model: DecisionModel, x: np.ndarray) -> tuple[float, object]:
    """Best payoff at a point and the decision attaining it.

    Ties go to the decision appearing first in ``model.decisions``.
    """
    values = payoff_vector(model, x)
    best = int(np.argmax(values))  # argmax returns the first maximal index
    return float(values[best]), model.decisions[best]


@dataclass(frozen=True)
class PriorSampler:
    """I.i.d. sampler for the full parameter vector.

    ``draw_fn(rng, size)`` must return a (size, dimension) array of
    independent samples, consuming only the supplied generator.
    """

    dimension: int
    draw_fn: Callable[[np.random.Generator, int], np.ndarray]

    def draw(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        out = np.asarray(self.draw_fn(rng, int(size)), dtype=np.float64)
        if out.shape != (size, self.dimension):
            raise ValueError(
                f"prior sampler returned shape {out.shape}, expected "
                f"{(size, self.dimension)}"
            )
        return out


@dataclass(frozen=True)
class FactoredSampler:
    """Marginal / conditional factorization of the parameter vector.

    ``revealed`` lists the 1-based coordinates of the revealed block; the
    hidden block is its complement.  Composing ``draw_marginal`` with
    ``draw_conditional`` must reproduce the joint prior law.
    """

    dimension: int
    revealed: tuple[int, ...]
    marginal_fn: Callable[[np.random.Generator, int], np.ndarray]
    conditional_fn: Callable[[np.ndarray, np.random.Generator, int], np.ndarray]

    def __post_init__(self) -> None:
        if any(not (1 <= ix <= self.dimension) for ix in self.revealed):
            raise ValueError(
                f"revealed coordinates must lie in 1..{self.dimension}, "
                f"got {self.revealed}"
            )
        if len(set(self.revealed)) != len(self.revealed):
            raise ValueError("revealed coordinates must be unique")
        r_idx = np.asarray(sorted(ix - 1 for ix in self.revealed), dtype=np.intp)
        h_idx = np.asarray(
            [ix for ix in range(self.dimension) if ix + 1 not in set(self.revealed)],
            dtype=np.intp,
        )
        object.__setattr__(self, "_revealed_idx", r_idx)
        object.__setattr__(self, "_hidden_idx", h_idx)

    @property
    def n_revealed(self) -> int:
        return len(self.revealed)

    @property
    def n_hidden(self) -> int:
        return self.dimension - len(self.revealed)

    def draw_marginal(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        out = np.asarray(self.marginal_fn(rng, int(size)), dtype=np.float64)
        if out.shape != (size, self.n_revealed):
            raise ValueError(
                f"marginal sampler returned shape {out.shape}, expected "
                f"{(size, self.n_revealed)}"
            )
        return out

    def draw_conditional(
        self, revealed_values: np.ndarray, rng: np.random.Generator, size: int = 1
    ) -> np.ndarray:
        revealed_values = np.asarray(revealed_values, dtype=np.float64)
        if revealed_values.shape != (self.n_revealed,):
            raise ValueError(
                f"expected revealed block of shape ({self.n_revealed},), "
                f"got {revealed_values.shape}"
            )
        out = np.asarray(
            self.conditional_fn(revealed_values, rng, int(size)), dtype=np.float64
        )
        if out.shape != (size, self.n_hidden):
            raise ValueError(
                f"conditional sampler returned shape {out.shape}, expected "
                f"{(size, self.n_hidden)}"
            )
        return out

    def combine(
        self, revealed_values: np.ndarray, hidden_samples: np.ndarray
    ) -> np.ndarray:
        """Full parameter vectors from one revealed block and many hidden draws."""
        hidden_samples = np.asarray(hidden_samples, dtype=np.float64)
        out = np.empty((hidden_samples.shape[0], self.dimension), dtype=np.float64)
        out[:, self._revealed_idx] = np.asarray(revealed_values, dtype=np.float64)
        out[:, self._hidden_idx] = hidden_samples
        return out
