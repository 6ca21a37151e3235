"""Online regression oracles over finite function classes.

Both oracles keep log-scale weights over the members of a ``FunctionClass``
and predict with the weighted mixture, so predictions may fall in the convex
hull of the class rather than on a member.

``SquareLossOracle``
    Exponentially weighted average forecaster for square loss. With
    ``eta = 1/2`` the square loss on [0, 1] is eta-exp-concave, which gives
    realized regret at most ``2 ln N``.
``LogLossOracle``
    Bayesian mixture (eta = 1) for log loss on transitions; realized regret is
    at most ``ln N``.
"""

from __future__ import annotations

import numpy as np

from .core import FunctionClass

# per-sample member loss recorded when a member gives an observed event probability 0
ZERO_LIKELIHOOD_LOSS = 1e9


class RealizabilityError(RuntimeError):
    """Every member of the class ruled out an observed transition."""


class AggregationOracle:
    kind = None

    def __init__(self, function_class: FunctionClass, learning_rate: float):
        if function_class.kind != self.kind:
            raise ValueError(f"{type(self).__name__} needs a {self.kind} class, got {function_class.kind}")
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.function_class = function_class
        self.learning_rate = float(learning_rate)
        n = len(function_class)
        self.log_weights = np.zeros(n)
        self.cumulative_own_loss = 0.0
        self.cumulative_member_loss = np.zeros(n)
        self.samples_seen = 0

    @property
    def weights(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def realized_regret(self) -> float:
        """Own cumulative loss minus the best member's cumulative loss."""
        if self.samples_seen == 0:
            return 0.0
        return float(self.cumulative_own_loss - self.cumulative_member_loss.min())

    def _renormalize(self):
        self.log_weights -= self.log_weights.max()

    def snapshot(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "cumulative_own_loss": self.cumulative_own_loss,
            "cumulative_member_loss": self.cumulative_member_loss.tolist(),
            "samples_seen": self.samples_seen,
        }


class SquareLossOracle(AggregationOracle):
    kind = "reward"

    def __init__(self, function_class: FunctionClass, learning_rate: float = 0.5):
        super().__init__(function_class, learning_rate)

    def predict(self, context: int) -> np.ndarray:
        """Mixture reward table ``f_hat[s, a]`` at ``context``."""
        return np.tensordot(self.weights, self.function_class.members[:, context], axes=1)

    def update(self, samples) -> None:
        """Process ``((c, s, a), r)`` samples one at a time, in order."""
        samples = list(samples)
        for (_, _, _), r in samples:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"reward observation {r} outside [0, 1]")
        F = self.function_class.members
        for (c, s, a), r in samples:
            preds = F[:, c, s, a]
            y_hat = float(self.weights @ preds)
            losses = (preds - r) ** 2
            self.cumulative_own_loss += (y_hat - r) ** 2
            self.cumulative_member_loss += losses
            self.log_weights -= self.learning_rate * losses
            self._renormalize()
            self.samples_seen += 1


class LogLossOracle(AggregationOracle):
    kind = "dynamics"

    def __init__(self, function_class: FunctionClass, learning_rate: float = 1.0):
        super().__init__(function_class, learning_rate)

    def predict(self, context: int) -> np.ndarray:
        """Posterior-predictive transition tensor ``P_hat[s, a, s']`` at ``context``."""
        return np.tensordot(self.weights, self.function_class.members[:, context], axes=1)

    def update(self, samples) -> None:
        """Process ``(c, s, a, s_next)`` transitions one at a time, in order."""
        Pm = self.function_class.members
        for c, s, a, s_next in samples:
            likes = Pm[:, c, s, a, s_next]
            p_hat = float(self.weights @ likes)
            if p_hat <= 0.0:
                raise RealizabilityError(
                    f"all members assign probability 0 to transition {(c, s, a, s_next)}"
                )
            with np.errstate(divide="ignore"):
                losses = -np.log(likes)
            self.cumulative_own_loss += -np.log(p_hat)
            self.cumulative_member_loss += np.minimum(losses, ZERO_LIKELIHOOD_LOSS)
            # infinite loss drives the log-weight to -inf: the member is out for good
            self.log_weights -= self.learning_rate * losses
            self._renormalize()
            self.samples_seen += 1
