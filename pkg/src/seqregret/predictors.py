"""Online ridge prediction on feature vectors, plus LMS / forgetting-RLS baselines.

The predictor keeps the running Gram matrix R = sum f f^T and cross vector
r = sum x*f and predicts r^T (R + delta*I)^{-1} f, maintaining the inverse
incrementally by a rank-1 identity with a periodic dense refresh.

Each run records two prediction traces:

* the plain prediction  r^T (R + dI)^{-1} f  (what `predict` returns), and
* the leverage-damped prediction  plain / (1 + f^T (R + dI)^{-1} f), which is
  what the regret certificate in `batch.RegretReport` provably covers.  The
  plain trace can overshoot that certificate on short sign-flip bursts; see
  `batch.bound_convention_audit` for the frozen counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequences import BoundedSequence, FeatureSpec, feature_matrix

# Dense re-factorization cadence for the incrementally maintained inverse.
REFRESH_EVERY = 512


@dataclass
class PredictorState:
    """Sufficient statistics of the online ridge predictor.

    Treated as an immutable value: `update` returns a fresh successor state
    and never mutates its argument, so states may be shared across threads.
    """

    gram_R: np.ndarray
    cross_r: np.ndarray
    delta: float
    steps_n: int
    inv_cache: np.ndarray

    @property
    def order_m(self) -> int:
        return self.cross_r.shape[0]


def _symmetric_inverse(matrix: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via its Cholesky factor."""
    low = np.linalg.cholesky(matrix)
    low_inv = np.linalg.solve(low, np.eye(matrix.shape[0]))
    inv = low_inv.T @ low_inv
    return (inv + inv.T) / 2.0


def init(m: int, delta: float) -> PredictorState:
    """Fresh state: zero statistics, inverse cache = I/delta."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    delta = float(delta)
    return PredictorState(
        gram_R=np.zeros((m, m)),
        cross_r=np.zeros(m),
        delta=delta,
        steps_n=0,
        inv_cache=np.eye(m) / delta,
    )


def _as_feature(state: PredictorState, f) -> np.ndarray:
    vec = np.asarray(f, dtype=float).reshape(-1)
    if vec.shape[0] != state.order_m:
        raise ValueError(f"feature vector of length {vec.shape[0]} against state of order {state.order_m}")
    return vec


def predict(state: PredictorState, f) -> float:
    """Plain online prediction r^T (R + delta I)^{-1} f; 0 on empty statistics."""
    vec = _as_feature(state, f)
    # associate as r @ (cache @ f) so a run's inlined loop reproduces this bitwise
    return float(state.cross_r @ (state.inv_cache @ vec))


def update(state: PredictorState, f, x: float) -> PredictorState:
    """Successor state after observing (f, x): statistics and inverse advance.

    The inverse cache moves by the rank-1 identity
    (M + f f^T)^{-1} = M^{-1} - (M^{-1} f)(M^{-1} f)^T / (1 + f^T M^{-1} f)
    and is rebuilt from a dense symmetric factorization every
    `REFRESH_EVERY` updates to cap drift.
    """
    vec = _as_feature(state, f)
    gram = state.gram_R + np.outer(vec, vec)
    cross = state.cross_r + float(x) * vec
    steps = state.steps_n + 1

    cache_f = state.inv_cache @ vec
    denom = 1.0 + float(vec @ cache_f)
    if not denom > 0.0:
        raise FloatingPointError(f"rank-1 update denominator {denom} <= 0; state is corrupted")
    inv = state.inv_cache - np.outer(cache_f, cache_f) / denom
    inv = (inv + inv.T) / 2.0
    if steps % REFRESH_EVERY == 0:
        inv = _symmetric_inverse(gram + state.delta * np.eye(state.order_m))
    return PredictorState(gram_R=gram, cross_r=cross, delta=state.delta, steps_n=steps, inv_cache=inv)


@dataclass
class OnlineRunResult:
    """Trace of one sequential run.

    `predictions` / `per_step_losses` / `cumulative_loss` describe the plain
    online predictions.  For ridge runs, `damped_predictions` / `damped_loss`
    hold the leverage-damped trace that the determinant certificate covers
    (None for the LMS / forgetting-RLS baselines).  `max_dense_gap` is the
    worst per-step deviation between the incrementally maintained prediction
    and a fresh dense solve, when that audit was requested.
    """

    predictions: np.ndarray
    cumulative_loss: float
    per_step_losses: np.ndarray
    damped_predictions: np.ndarray | None = None
    damped_loss: float | None = None
    max_dense_gap: float | None = None


def run_online(
    spec: FeatureSpec,
    seq: BoundedSequence,
    delta: float,
    clip: bool = False,
    verify_dense: bool = False,
) -> OnlineRunResult:
    """Run the online ridge predictor over the whole sequence.

    At each step t: form the feature vector, predict (optionally clamping the
    plain prediction to [-A, A]), score the squared error against x[t], then
    fold (f, x[t]) into the statistics.  `verify_dense=True` additionally
    re-solves (R + delta I) a = r densely at every step and records the worst
    relative gap against the incrementally maintained prediction.
    """
    if len(seq) == 0:
        raise ValueError("sequence must be nonempty")
    F = feature_matrix(spec, seq)
    x = seq.values
    A = seq.bound_A
    n = len(seq)
    state = init(spec.order_m, delta)

    preds = np.empty(n)
    damped = np.empty(n)
    losses = np.empty(n)
    worst_gap = 0.0
    eye = np.eye(spec.order_m)
    for t in range(n):
        f = F[t]
        cache_f = state.inv_cache @ f
        raw = float(state.cross_r @ cache_f)
        leverage = float(f @ cache_f)
        pred = min(A, max(-A, raw)) if clip else raw
        if verify_dense:
            direct = float(np.linalg.solve(state.gram_R + state.delta * eye, state.cross_r) @ f)
            gap = abs(raw - direct) / max(1.0, abs(raw), abs(direct))
            worst_gap = max(worst_gap, gap)
        preds[t] = pred
        damped[t] = raw / (1.0 + leverage)
        losses[t] = (x[t] - pred) ** 2
        state = update(state, f, x[t])

    return OnlineRunResult(
        predictions=preds,
        cumulative_loss=float(np.sum(losses)),
        per_step_losses=losses,
        damped_predictions=damped,
        damped_loss=float(np.sum((x - damped) ** 2)),
        max_dense_gap=worst_gap if verify_dense else None,
    )


def run_lms(spec: FeatureSpec, seq: BoundedSequence, step_size: float) -> OnlineRunResult:
    """Gradient baseline: w <- w + step_size * error * f, weights start at 0."""
    if len(seq) == 0:
        raise ValueError("sequence must be nonempty")
    if step_size < 0:
        raise ValueError("step_size must be nonnegative")
    F = feature_matrix(spec, seq)
    x = seq.values
    n = len(seq)
    w = np.zeros(spec.order_m)
    preds = np.empty(n)
    losses = np.empty(n)
    for t in range(n):
        f = F[t]
        pred = float(w @ f)
        err = x[t] - pred
        preds[t] = pred
        losses[t] = err ** 2
        w = w + step_size * err * f
    return OnlineRunResult(predictions=preds, cumulative_loss=float(np.sum(losses)), per_step_losses=losses)


def run_rls(
    spec: FeatureSpec,
    seq: BoundedSequence,
    delta: float,
    forgetting: float = 1.0,
) -> OnlineRunResult:
    """Exponentially weighted recursive least squares.

    At forgetting factor 1.0 this is the same estimator as `run_online`
    (asserted in tests); it is kept as an independently coded recursion with
    the usual discounting of both statistics for forgetting < 1.
    """
    if len(seq) == 0:
        raise ValueError("sequence must be nonempty")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0.0 < forgetting <= 1.0:
        raise ValueError("forgetting factor must be in (0, 1]")
    F = feature_matrix(spec, seq)
    x = seq.values
    n = len(seq)
    m = spec.order_m
    P = np.eye(m) / float(delta)
    r = np.zeros(m)
    preds = np.empty(n)
    losses = np.empty(n)
    for t in range(n):
        f = F[t]
        pred = float(r @ P @ f)
        preds[t] = pred
        losses[t] = (x[t] - pred) ** 2
        P = P / forgetting
        Pf = P @ f
        P = P - np.outer(Pf, Pf) / (1.0 + float(f @ Pf))
        P = (P + P.T) / 2.0
        r = forgetting * r + x[t] * f
    return OnlineRunResult(predictions=preds, cumulative_loss=float(np.sum(losses)), per_step_losses=losses)
