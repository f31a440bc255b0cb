"""Binary logistic models fit by MAP, the scalable belief representation.

One linear model predicts the label (probability of label 2), a second
predicts the labeler's abstention probability.  Both carry an independent
Gaussian prior on every parameter and are refit from their accumulated
observations after each response.  A previously saved checkpoint can act
as the prior mean, so a finished session's abstention posterior seeds the
next session.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Example, Pool, Response
from .errors import ConvergenceError, InputError

LABEL_KIND = "label"
ABSTENTION_KIND = "abstention"
DEFAULT_MAX_ITER = 500


def sigmoid(z):
    """1/(1+exp(-z)) without overflow on large |z|."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LinearModel:
    """Dense weight vector, bias, and the prior variance it was fit under."""

    weights: np.ndarray
    bias: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0.0:
            raise InputError(f"prior variance must be positive, got {self.sigma2}")
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    def logit(self, x: Example) -> float:
        z = self.bias
        for idx, val in x.features:
            if idx >= self.dimension:
                raise InputError(f"feature index {idx} outside model dimension {self.dimension}")
            z += self.weights[idx] * val
        return float(z)

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (
            self.bias == other.bias
            and self.sigma2 == other.sigma2
            and self.weights.shape == other.weights.shape
            and bool(np.all(self.weights == other.weights))
        )


def zero_model(dimension: int, sigma2: float) -> LinearModel:
    return LinearModel(np.zeros(dimension), 0.0, sigma2)


@dataclass(frozen=True)
class LabeledObservations:
    """Accumulated (example id, outcome) pairs for one model.

    Label observations carry outcomes in {1,2}; abstention observations
    carry the abstain bit in {0,1}.
    """

    kind: str
    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in (LABEL_KIND, ABSTENTION_KIND):
            raise InputError(f"unknown observation kind {self.kind!r}")
        allowed = (1, 2) if self.kind == LABEL_KIND else (0, 1)
        seen = set()
        for x, outcome in self.items:
            if x in seen:
                raise InputError(f"example {x} observed twice")
            seen.add(x)
            if outcome not in allowed:
                raise InputError(f"outcome {outcome} invalid for {self.kind} observations")

    def __len__(self) -> int:
        return len(self.items)

    def append(self, x: int, outcome: int) -> "LabeledObservations":
        return LabeledObservations(self.kind, self.items + ((x, outcome),))

    def targets(self) -> np.ndarray:
        """Outcomes as 0/1 regression targets (label 2 is the positive class)."""
        if self.kind == LABEL_KIND:
            return np.array([y - 1 for _, y in self.items], dtype=float)
        return np.array([z for _, z in self.items], dtype=float)


def _design_matrix(obs: LabeledObservations, pool: Pool) -> np.ndarray:
    X = np.zeros((len(obs), pool.dimension))
    for row, (x, _) in enumerate(obs.items):
        for idx, val in pool[x].features:
            X[row, idx] = val
    return X


def _log_likelihood(z: np.ndarray, t: np.ndarray) -> float:
    # log p(t|z) = t*z - log(1+exp(z)), stable in both tails
    return float(np.sum(t * z - np.logaddexp(0.0, z)))


def map_objective_and_gradient(
    m: LinearModel,
    obs: LabeledObservations,
    pool: Pool,
    prior: LinearModel | None = None,
) -> tuple[float, np.ndarray]:
    """Regularized log-likelihood and its exact gradient.

    The gradient vector stacks the weight coordinates first and the bias
    last.  ``prior`` recenters the Gaussian away from the origin.
    """
    d = pool.dimension
    if m.dimension != d:
        raise InputError(f"model dimension {m.dimension} does not match pool dimension {d}")
    w0 = np.zeros(d) if prior is None else prior.weights
    b0 = 0.0 if prior is None else prior.bias
    if w0.shape != (d,):
        raise InputError("prior model dimension mismatch")
    X = _design_matrix(obs, pool)
    t = obs.targets()
    z = X @ m.weights + m.bias
    p = sigmoid(z) if len(obs) else np.zeros(0)
    dw = m.weights - w0
    db = m.bias - b0
    value = _log_likelihood(z, t) - (float(dw @ dw) + db * db) / (2.0 * m.sigma2)
    grad_w = X.T @ (t - p) - dw / m.sigma2
    grad_b = float(np.sum(t - p)) - db / m.sigma2
    return value, np.concatenate([grad_w, [grad_b]])


def fit_map(
    obs: LabeledObservations,
    pool: Pool,
    sigma2: float,
    tol: float | None = None,
    prior: LinearModel | None = None,
    init: LinearModel | None = None,
    use_bias: bool = True,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LinearModel:
    """Damped-Newton MAP fit; unique optimum by strict concavity.

    Stops when the gradient norm drops to ``tol`` (default 1e-8 per
    observation, floored at 1e-8); raises ConvergenceError carrying the
    last iterate if the iteration cap is hit first.
    """
    if sigma2 <= 0.0:
        raise InputError(f"prior variance must be positive, got {sigma2}")
    d = pool.dimension
    if tol is None:
        tol = 1e-8 * max(1, len(obs))
    w0 = np.zeros(d) if prior is None else np.asarray(prior.weights, dtype=float)
    b0 = 0.0 if prior is None else prior.bias
    if w0.shape != (d,):
        raise InputError("prior model dimension mismatch")
    X = _design_matrix(obs, pool)
    t = obs.targets()
    if use_bias:
        Xa = np.hstack([X, np.ones((len(obs), 1))])
        theta0 = np.concatenate([w0, [b0]])
    else:
        Xa = X
        theta0 = w0.copy()
    if init is not None:
        theta = np.concatenate([init.weights, [init.bias]]) if use_bias else init.weights.copy()
        if theta.shape != theta0.shape:
            raise InputError("init model dimension mismatch")
        theta = np.asarray(theta, dtype=float).copy()
    else:
        theta = theta0.copy()

    def objective(th: np.ndarray) -> float:
        delta = th - theta0
        return _log_likelihood(Xa @ th + (0.0 if use_bias else b0), t) - float(delta @ delta) / (2.0 * sigma2)

    def gradient(th: np.ndarray) -> np.ndarray:
        p = sigmoid(Xa @ th + (0.0 if use_bias else b0)) if len(obs) else np.zeros(0)
        return Xa.T @ (t - p) - (th - theta0) / sigma2

    def model_of(th: np.ndarray) -> LinearModel:
        if use_bias:
            return LinearModel(th[:-1].copy(), float(th[-1]), sigma2)
        return LinearModel(th.copy(), b0, sigma2)

    for _ in range(max_iter):
        g = gradient(theta)
        if float(np.linalg.norm(g)) <= tol:
            return model_of(theta)
        p = sigmoid(Xa @ theta + (0.0 if use_bias else b0)) if len(obs) else np.zeros(0)
        curvature = p * (1.0 - p)
        hess = Xa.T @ (Xa * curvature[:, None]) + np.eye(Xa.shape[1]) / sigma2
        step = np.linalg.solve(hess, g)
        value = objective(theta)
        scale = 1.0
        for _ in range(60):
            candidate = theta + scale * step
            if objective(candidate) > value:
                theta = candidate
                break
            scale *= 0.5
        else:
            # no representable improvement at any scale: float exhaustion near
            # the optimum, where the undamped step converges quadratically
            theta = theta + step
    if float(np.linalg.norm(gradient(theta))) <= tol:
        return model_of(theta)
    raise ConvergenceError(
        f"no convergence within {max_iter} Newton iterations", last_iterate=model_of(theta)
    )


def predict_label_dist(m: LinearModel, x: Example) -> np.ndarray:
    """(p[Y=1;x], p[Y=2;x]) with p[Y=2;x] = sigmoid of the linear score."""
    p2 = sigmoid(m.logit(x))
    return np.array([1.0 - p2, p2])


def predict_abstention(m_r: LinearModel, x: Example) -> float:
    return float(sigmoid(m_r.logit(x)))


def model_to_checkpoint(m: LinearModel) -> dict:
    """JSON-ready form: prior variance, bias, and nonzero weights."""
    weights = [[int(i), float(v)] for i, v in enumerate(m.weights) if v != 0.0]
    return {"sigma2": m.sigma2, "bias": m.bias, "weights": weights}


def model_from_checkpoint(obj: dict, dimension: int) -> LinearModel:
    w = np.zeros(dimension)
    for idx, val in obj["weights"]:
        if not 0 <= int(idx) < dimension:
            raise InputError(f"checkpoint weight index {idx} outside dimension {dimension}")
        w[int(idx)] = float(val)
    return LinearModel(w, float(obj["bias"]), float(obj["sigma2"]))


@dataclass(frozen=True)
class MapBelief:
    """Both MAP models plus the observations behind them.

    Implements the strategies BeliefView protocol; refits are from-scratch
    in meaning but warm-started from the previous iterate, which cannot
    change the (unique) optimum.
    """

    pool: Pool
    label_obs: LabeledObservations
    abst_obs: LabeledObservations
    label_model: LinearModel
    abst_model: LinearModel
    label_prior: LinearModel | None = None
    abst_prior: LinearModel | None = None

    @classmethod
    def initial(
        cls,
        pool: Pool,
        sigma2_label: float = 1.0,
        sigma2_abst: float = 1.0,
        label_prior: LinearModel | None = None,
        abst_prior: LinearModel | None = None,
    ) -> "MapBelief":
        if pool.alphabet.size != 2:
            raise InputError("MAP beliefs support binary labels only")
        label_obs = LabeledObservations(LABEL_KIND)
        abst_obs = LabeledObservations(ABSTENTION_KIND)
        return cls(
            pool,
            label_obs,
            abst_obs,
            fit_map(label_obs, pool, sigma2_label, prior=label_prior),
            fit_map(abst_obs, pool, sigma2_abst, prior=abst_prior),
            label_prior,
            abst_prior,
        )

    def updated(self, x: int, resp: Response) -> "MapBelief":
        """One response folded in: abstention always, label only when given."""
        abst_obs = self.abst_obs.append(x, 1 if resp.is_abstain else 0)
        abst_model = fit_map(
            abst_obs, self.pool, self.abst_model.sigma2, prior=self.abst_prior, init=self.abst_model
        )
        if resp.is_abstain:
            return MapBelief(
                self.pool, self.label_obs, abst_obs, self.label_model, abst_model,
                self.label_prior, self.abst_prior,
            )
        if resp.label not in self.pool.alphabet:
            raise InputError(f"label {resp.label} outside the binary alphabet")
        label_obs = self.label_obs.append(x, resp.label)
        label_model = fit_map(
            label_obs, self.pool, self.label_model.sigma2, prior=self.label_prior, init=self.label_model
        )
        return MapBelief(
            self.pool, label_obs, abst_obs, label_model, abst_model,
            self.label_prior, self.abst_prior,
        )

    def label_dist(self, x: int) -> np.ndarray:
        return predict_label_dist(self.label_model, self.pool[x])

    def abstention(self, x: int) -> float:
        return predict_abstention(self.abst_model, self.pool[x])
