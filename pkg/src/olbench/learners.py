"""Online binary classifiers behind a single predict/update interface.

First-order learners keep a weight vector; second-order learners keep a
Gaussian weight distribution (mean and full covariance). Every learner
expects augmented inputs (raw features plus a trailing constant 1) so the
bias is handled uniformly. ``update`` always advances the step counter; the
model itself changes only when the algorithm's trigger fires.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from statistics import NormalDist

import numpy as np

from .datamodel import (
    NEGATIVE,
    POSITIVE,
    FirstOrderModel,
    SecondOrderModel,
    UpdateOutcome,
    decide,
)

FIRST_ORDER_ALGORITHMS = ("perceptron", "pa", "pa1", "pa2", "ogd", "alma", "romma", "aromma")
SECOND_ORDER_ALGORITHMS = ("sop", "arow", "narow", "cw", "scw1", "scw2", "nherd", "iellip")

# Canonical listing order, also used for CLI help and display.
ALGORITHMS = (
    "perceptron", "sop", "pa", "pa1", "pa2", "ogd", "alma", "romma",
    "aromma", "arow", "narow", "cw", "scw1", "scw2", "nherd", "iellip",
)

DISPLAY_NAMES = {
    "perceptron": "Perceptron",
    "sop": "SOP",
    "pa": "PA",
    "pa1": "PA1",
    "pa2": "PA2",
    "ogd": "OGD",
    "alma": "ALMA",
    "romma": "ROMMA",
    "aromma": "aROMMA",
    "arow": "AROW",
    "narow": "NAROW",
    "cw": "CW",
    "scw1": "SCW1",
    "scw2": "SCW2",
    "nherd": "NHERD",
    "iellip": "IELLIP",
}

_DEGENERATE_DIRECTION = 1e-12


@dataclass(frozen=True)
class LearnerConfig:
    """Algorithm choice plus every hyperparameter, with fixed defaults.

    C: aggressiveness for PA1/PA2, SCW, and NHERD.
    r: regularizer for AROW.
    eta: confidence level for CW/SCW, in (0.5, 1).
    alpha: accuracy parameter for ALMA, in (0, 1].
    a: ridge added to the SOP Gram matrix.
    b_bound: eigenvalue bound for NAROW.
    ellip_b, ellip_c: geometric decay of the IELLIP covariance step.
    eta0: base step size for OGD.
    """

    algorithm: str
    C: float = 1.0
    r: float = 1.0
    eta: float = 0.75
    alpha: float = 0.9
    a: float = 1.0
    b_bound: float = 1.0
    ellip_b: float = 0.3
    ellip_c: float = 0.5
    eta0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", self.algorithm.lower())
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; valid names: {', '.join(ALGORITHMS)}"
            )
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.r <= 0:
            raise ValueError("r must be positive")
        if not 0.5 < self.eta < 1.0:
            raise ValueError("eta must lie in (0.5, 1)")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.b_bound <= 0:
            raise ValueError("b_bound must be positive")
        if not 0.0 <= self.ellip_b <= 1.0 or not 0.0 <= self.ellip_c <= 1.0:
            raise ValueError("ellip_b and ellip_c must lie in [0, 1]")
        if self.ellip_b == 1.0 and self.ellip_c == 1.0:
            raise ValueError("ellip_b and ellip_c cannot both be 1")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")


def _check_label(y: int) -> None:
    if y not in (POSITIVE, NEGATIVE):
        raise ValueError(f"label must be +1 or -1, got {y}")


class OnlineLearner:
    """Shared lifecycle for all learners; subclasses define trigger and rule."""

    second_order = False

    def __init__(self, config: LearnerConfig, dim: int) -> None:
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.config = config
        self.dim = dim
        self.step = 1
        self.k = 1.0
        self.n_updates = 0

    # -- interface -------------------------------------------------------

    def margin_of(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _trigger(self, x: np.ndarray, y: int, margin: float) -> tuple[float, bool]:
        raise NotImplementedError

    def _apply(self, x: np.ndarray, y: int, margin: float) -> None:
        raise NotImplementedError

    # -- driving ---------------------------------------------------------

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected augmented input of length {self.dim}, got {x.shape}")
        if not np.isfinite(x).all():
            raise ValueError("input vector must be finite")
        return x

    def predict(self, x, y: int | None = None) -> UpdateOutcome:
        """Score a sample without touching the state."""
        x = self._check_x(x)
        margin = self.margin_of(x)
        loss = max(0.0, 1.0 - y * margin) if y is not None else None
        return UpdateOutcome(decide(margin), margin, loss, False)

    def update(self, x, y: int) -> UpdateOutcome:
        """Score a sample, then apply the learner's rule if its trigger fires."""
        x = self._check_x(x)
        _check_label(y)
        margin = self.margin_of(x)
        loss, fired = self._trigger(x, y, margin)
        if fired:
            self._apply(x, y, margin)
            self.n_updates += 1
        self.step += 1
        return UpdateOutcome(decide(margin), margin, loss, fired)

    # -- serialization ---------------------------------------------------

    def _model_payload(self) -> dict:
        raise NotImplementedError

    def _restore_model(self, payload: dict) -> None:
        raise NotImplementedError

    def snapshot(self) -> dict:
        return {
            "algorithm": self.config.algorithm,
            "config": asdict(self.config),
            "dim": self.dim,
            "step": self.step,
            "k": self.k,
            "n_updates": self.n_updates,
            "model": self._model_payload(),
        }

    def to_json(self) -> str:
        return json.dumps(self.snapshot())

    def clone(self) -> "OnlineLearner":
        return from_snapshot(self.snapshot())


class _FirstOrderLearner(OnlineLearner):
    def __init__(self, config: LearnerConfig, dim: int) -> None:
        super().__init__(config, dim)
        self.model = FirstOrderModel(np.zeros(dim))

    def margin_of(self, x: np.ndarray) -> float:
        return float(self.model.w @ x)

    def _model_payload(self) -> dict:
        return {"kind": "first", "w": self.model.w.tolist()}

    def _restore_model(self, payload: dict) -> None:
        self.model = FirstOrderModel(np.array(payload["w"], dtype=np.float64))


class _SecondOrderLearner(OnlineLearner):
    second_order = True

    def __init__(self, config: LearnerConfig, dim: int) -> None:
        super().__init__(config, dim)
        self.model = SecondOrderModel(np.zeros(dim), np.eye(dim))

    def margin_of(self, x: np.ndarray) -> float:
        return float(self.model.mu @ x)

    def _shrink(self, sx: np.ndarray, coef: float) -> None:
        # Rank-one downdate followed by re-symmetrization to kill float drift.
        s = self.model.sigma - coef * np.outer(sx, sx)
        self.model.sigma = 0.5 * (s + s.T)

    def _model_payload(self) -> dict:
        return {
            "kind": "second",
            "mu": self.model.mu.tolist(),
            "sigma": self.model.sigma.tolist(),
        }

    def _restore_model(self, payload: dict) -> None:
        self.model = SecondOrderModel(
            np.array(payload["mu"], dtype=np.float64),
            np.array(payload["sigma"], dtype=np.float64),
        )


def _hinge(y: int, margin: float) -> float:
    return max(0.0, 1.0 - y * margin)


class Perceptron(_FirstOrderLearner):
    """Mistake-driven additive update; a zero margin counts as a mistake."""

    def _trigger(self, x, y, margin):
        mistake = y * margin <= 0.0
        return (1.0 if mistake else 0.0), mistake

    def _apply(self, x, y, margin):
        self.model.w += y * x


class PassiveAggressive(_FirstOrderLearner):
    """Margin projection; plain, C-capped (pa1), and squared-slack (pa2) step sizes."""

    def _trigger(self, x, y, margin):
        loss = _hinge(y, margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        loss = 1.0 - y * margin
        sq = float(x @ x)
        if sq == 0.0:
            return
        algo = self.config.algorithm
        if algo == "pa":
            tau = loss / sq
        elif algo == "pa1":
            tau = min(self.config.C, loss / sq)
        else:
            tau = loss / (sq + 0.5 / self.config.C)
        self.model.w += tau * y * x


class OnlineGradientDescent(_FirstOrderLearner):
    """Hinge subgradient step scaled by eta0 / sqrt(step)."""

    def _trigger(self, x, y, margin):
        loss = _hinge(y, margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        self.model.w += (self.config.eta0 / math.sqrt(self.step)) * y * x


class Alma(_FirstOrderLearner):
    """Approximate large-margin updates on the unit sphere; k counts triggers."""

    def _threshold(self) -> float:
        return (1.0 - self.config.alpha) * math.sqrt(2.0 / self.k)

    def _trigger(self, x, y, margin):
        nx = float(np.linalg.norm(x))
        if nx == 0.0:
            return 0.0, False
        proj = y * margin / nx
        thresh = self._threshold()
        return max(0.0, thresh - proj), proj <= thresh

    def _apply(self, x, y, margin):
        xn = x / float(np.linalg.norm(x))
        w = self.model.w + math.sqrt(2.0 / self.k) * y * xn
        norm = float(np.linalg.norm(w))
        if norm > 1.0:
            w = w / norm
        self.model.w = w
        self.k += 1.0


class Romma(_FirstOrderLearner):
    """Relaxed maximum-margin update; aromma also fires on positive hinge loss."""

    def _trigger(self, x, y, margin):
        if self.config.algorithm == "aromma":
            loss = _hinge(y, margin)
            return loss, loss > 0.0
        mistake = y * margin <= 0.0
        return (1.0 if mistake else 0.0), mistake

    def _apply(self, x, y, margin):
        w = self.model.w
        ww = float(w @ w)
        xx = float(x @ x)
        wx = margin
        denom = xx * ww - wx * wx
        if ww == 0.0 or denom < _DEGENERATE_DIRECTION:
            self.model.w = w + y * x
            return
        c = (xx * ww - y * wx) / denom
        d = ww * (y - wx) / denom
        self.model.w = c * w + d * x


class Arow(_SecondOrderLearner):
    """Adaptive regularization: hinge-triggered mean step with confidence shrink."""

    def _trigger(self, x, y, margin):
        loss = _hinge(y, margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        sx = self.model.sigma @ x
        v = float(x @ sx)
        beta = 1.0 / (v + self.config.r)
        alpha = (1.0 - y * margin) * beta
        self.model.mu += alpha * y * sx
        self._shrink(sx, beta)


class Narow(_SecondOrderLearner):
    """AROW with an adaptive regularizer keeping covariance eigenvalues bounded."""

    def _trigger(self, x, y, margin):
        loss = _hinge(y, margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        sx = self.model.sigma @ x
        v = float(x @ sx)
        if v == 0.0:
            return
        loss = 1.0 - y * margin
        scale = self.config.b_bound * v - 1.0
        if scale > _DEGENERATE_DIRECTION:
            gamma = v / scale
            beta = 1.0 / (v + gamma)
            self.model.mu += (loss * beta) * y * sx
            self._shrink(sx, beta)
        else:
            # Unbounded regularizer: covariance held fixed, bounded mean step.
            self.model.mu += (loss / (2.0 * v)) * y * sx


class ConfidenceWeighted(_SecondOrderLearner):
    """Minimal distribution change subject to classifying at confidence eta.

    The closed form is the exact KL projection onto the variance-form
    constraint y*mu'x >= phi * x'Sigma x, so the trigger tests that same
    constraint; after an update it holds with equality.
    """

    def __init__(self, config: LearnerConfig, dim: int) -> None:
        super().__init__(config, dim)
        self.phi = NormalDist().inv_cdf(config.eta)

    def _trigger(self, x, y, margin):
        v = float(x @ (self.model.sigma @ x))
        loss = max(0.0, self.phi * v - y * margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        phi = self.phi
        sx = self.model.sigma @ x
        v = float(x @ sx)
        my = y * margin
        b = 1.0 + 2.0 * phi * my
        # Discriminant equals (1 - 2*phi*my)^2 + 8*phi^2*v, always non-negative.
        alpha = (-b + math.sqrt(b * b - 8.0 * phi * (my - phi * v))) / (4.0 * phi * v)
        alpha = max(0.0, alpha)
        self.model.mu += alpha * y * sx
        self._shrink(sx, 2.0 * alpha * phi / (1.0 + 2.0 * alpha * phi * v))


class SoftConfidenceWeighted(ConfidenceWeighted):
    """Soft-margin variant of CW, penalizing the confidence hinge
    max(0, phi*sqrt(x'Sigma x) - y*mu'x) linearly (scw1) or squared (scw2)."""

    def _trigger(self, x, y, margin):
        v = float(x @ (self.model.sigma @ x))
        loss = max(0.0, self.phi * math.sqrt(v) - y * margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        phi = self.phi
        C = self.config.C
        sx = self.model.sigma @ x
        v = float(x @ sx)
        my = y * margin
        if self.config.algorithm == "scw1":
            zeta = 1.0 + phi * phi
            psi = 1.0 + phi * phi / 2.0
            alpha = (-my * psi + math.sqrt(my * my * phi**4 / 4.0 + v * phi * phi * zeta)) / (v * zeta)
            alpha = min(C, max(0.0, alpha))
        else:
            n = v + 1.0 / (2.0 * C)
            disc = phi**4 * my * my * v * v + 4.0 * n * v * phi * phi * (n + v * phi * phi)
            alpha = (-(2.0 * my * n + phi * phi * my * v) + math.sqrt(disc)) / (
                2.0 * (n * n + n * v * phi * phi)
            )
            alpha = max(0.0, alpha)
        sqrt_u = (-alpha * v * phi + math.sqrt(alpha * alpha * v * v * phi * phi + 4.0 * v)) / 2.0
        beta = alpha * phi / (sqrt_u + v * alpha * phi)
        self.model.mu += alpha * y * sx
        self._shrink(sx, beta)


class Nherd(_SecondOrderLearner):
    """Gaussian herding: squared-hinge driven mean step with quadratic shrink."""

    def _trigger(self, x, y, margin):
        loss = _hinge(y, margin)
        return loss, loss > 0.0

    def _apply(self, x, y, margin):
        C = self.config.C
        sx = self.model.sigma @ x
        v = float(x @ sx)
        loss = 1.0 - y * margin
        self.model.mu += (y * loss / (v + 1.0 / C)) * sx
        self._shrink(sx, (C * C * v + 2.0 * C) / (1.0 + C * v) ** 2)


class Iellip(_SecondOrderLearner):
    """Ellipsoid-style mistake-driven update with geometrically decaying shrink."""

    def _trigger(self, x, y, margin):
        mistake = y * margin <= 0.0
        return (1.0 if mistake else 0.0), mistake

    def _apply(self, x, y, margin):
        sx = self.model.sigma @ x
        v = float(x @ sx)
        if v <= 0.0:
            return
        sv = math.sqrt(v)
        sg = (y / sv) * sx
        alpha = min(1.0, max(0.0, 0.5 * (1.0 - y * margin / sv)))
        c_t = self.config.ellip_c * self.config.ellip_b ** self.step
        self.model.mu += alpha * sg
        s = (self.model.sigma - c_t * np.outer(sg, sg)) / (1.0 - c_t)
        self.model.sigma = 0.5 * (s + s.T)


class SecondOrderPerceptron(_SecondOrderLearner):
    """Whitened perceptron: sigma tracks the inverse ridge Gram of mistake inputs,
    mu accumulates the mistake-weighted inputs, and the score is mu' sigma x."""

    def __init__(self, config: LearnerConfig, dim: int) -> None:
        super().__init__(config, dim)
        self.model.sigma = np.eye(dim) / config.a

    def margin_of(self, x: np.ndarray) -> float:
        return float(self.model.mu @ (self.model.sigma @ x))

    def _trigger(self, x, y, margin):
        mistake = y * margin <= 0.0
        return (1.0 if mistake else 0.0), mistake

    def _apply(self, x, y, margin):
        sx = self.model.sigma @ x
        self._shrink(sx, 1.0 / (1.0 + float(x @ sx)))
        self.model.mu += y * x


_REGISTRY: dict[str, type[OnlineLearner]] = {
    "perceptron": Perceptron,
    "pa": PassiveAggressive,
    "pa1": PassiveAggressive,
    "pa2": PassiveAggressive,
    "ogd": OnlineGradientDescent,
    "alma": Alma,
    "romma": Romma,
    "aromma": Romma,
    "sop": SecondOrderPerceptron,
    "arow": Arow,
    "narow": Narow,
    "cw": ConfidenceWeighted,
    "scw1": SoftConfidenceWeighted,
    "scw2": SoftConfidenceWeighted,
    "nherd": Nherd,
    "iellip": Iellip,
}


def make_learner(config: LearnerConfig, dim: int) -> OnlineLearner:
    """Instantiate a zero-initialized learner for augmented inputs of length dim."""
    return _REGISTRY[config.algorithm](config, dim)


def from_snapshot(snap: dict) -> OnlineLearner:
    """Rebuild a learner from :meth:`OnlineLearner.snapshot`; round-trips exactly."""
    config = LearnerConfig(**snap["config"])
    learner = make_learner(config, int(snap["dim"]))
    learner.step = int(snap["step"])
    learner.k = float(snap["k"])
    learner.n_updates = int(snap["n_updates"])
    learner._restore_model(snap["model"])
    return learner


def from_json(text: str) -> OnlineLearner:
    return from_snapshot(json.loads(text))
