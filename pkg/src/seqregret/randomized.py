"""Randomized-output prediction: mixtures of predictors and their derandomization.

A randomized predictor draws, at every step, one constituent predictor
according to a (possibly history-dependent) probability vector and outputs
that constituent's prediction.  Its expected time-accumulated squared loss on
a fixed sequence decomposes per step as

    E[(x - f)^2] = (x - E f)^2 + Var(f),

so replacing the random output by its mixture mean (derandomizing) removes
exactly the variance term and can never lose.  The functions here compute the
Monte-Carlo and analytic sides of that account.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .predictors import init, predict, update
from .sequences import BoundedSequence, FeatureSpec, features

# A constituent maps the observed history x_1..x_{t-1} (1d array) to a real
# prediction of x_t.  A probability rule maps the same history to a vector of
# mixture weights over the constituents.
PredictorFn = Callable[[np.ndarray], float]
ProbRule = Callable[[np.ndarray], np.ndarray]

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class RandomizedPredictor:
    constituents: tuple[PredictorFn, ...]
    prob_rule: ProbRule
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.constituents) == 0:
            raise ValueError("randomized predictor needs at least one constituent")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


def static_rule(weights) -> ProbRule:
    """Probability rule that ignores history and always returns `weights`."""
    w = np.array(weights, dtype=float)
    w.flags.writeable = False
    return lambda history: w


def uniform_rule(n_constituents: int) -> ProbRule:
    return static_rule(np.full(n_constituents, 1.0 / n_constituents))


def _probs_at(rp: RandomizedPredictor, history: np.ndarray) -> np.ndarray:
    probs = np.asarray(rp.prob_rule(history), dtype=float)
    k = len(rp.constituents)
    if probs.shape != (k,):
        raise ValueError(f"probability rule returned shape {probs.shape}, expected ({k},)")
    if np.any(probs < 0):
        raise ValueError("probability rule returned a negative weight")
    if abs(float(np.sum(probs)) - 1.0) > PROB_SUM_TOL:
        raise ValueError("probability weights must sum to 1 within 1e-12")
    return probs


def mixture_tables(rp: RandomizedPredictor, seq: BoundedSequence) -> tuple[np.ndarray, np.ndarray]:
    """Per-step constituent predictions and mixture weights, each (K, n).

    Both depend only on the fixed sequence, not on the realized randomization,
    so one pass serves the analytic and every Monte-Carlo path.
    """
    values = seq.values
    n = values.size
    k = len(rp.constituents)
    preds = np.empty((k, n))
    probs = np.empty((k, n))
    for t in range(n):
        history = values[:t]
        probs[:, t] = _probs_at(rp, history)
        for i, fn in enumerate(rp.constituents):
            preds[i, t] = float(fn(history))
    return preds, probs


def mc_trial_totals(rp: RandomizedPredictor, seq: BoundedSequence, trials: int) -> np.ndarray:
    """Cumulative randomized loss of `trials` independent runs (seeded by rp.seed)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    preds, probs = mixture_tables(rp, seq)
    values = seq.values
    rng = np.random.default_rng(rp.seed)
    k = preds.shape[0]
    totals = np.zeros(trials)
    for t in range(values.size):
        idx = rng.choice(k, size=trials, p=probs[:, t])
        totals += (values[t] - preds[idx, t]) ** 2
    return totals


def run_randomized(rp: RandomizedPredictor, seq: BoundedSequence, trials: int) -> tuple[float, list[float]]:
    """Monte-Carlo total expected loss plus the exact per-step mixture expectations.

    Returns (empirical mean over `trials` of the randomized cumulative loss,
    [sum_k p_k[t] * (x[t] - f_k[t])^2 for each step t]).  The sum of the second
    is the analytic expected loss the first estimates.
    """
    totals = mc_trial_totals(rp, seq, trials)
    preds, probs = mixture_tables(rp, seq)
    per_step = np.sum(probs * (seq.values[None, :] - preds) ** 2, axis=0)
    return float(np.mean(totals)), [float(v) for v in per_step]


def derandomize(rp: RandomizedPredictor) -> PredictorFn:
    """The deterministic predictor outputting the mixture mean at every step."""

    def mixture_mean(history: np.ndarray) -> float:
        probs = _probs_at(rp, np.asarray(history, dtype=float))
        outputs = np.array([fn(history) for fn in rp.constituents])
        return float(probs @ outputs)

    return mixture_mean


def variance_decomposition(rp: RandomizedPredictor, seq: BoundedSequence) -> tuple[float, float]:
    """(total squared bias, total output variance) of the mixture on seq.

    Per step the expected loss splits as (x - mean)^2 + sum_k p_k (f_k - mean)^2;
    the two totals therefore sum to the analytic expected loss.
    """
    preds, probs = mixture_tables(rp, seq)
    means = np.sum(probs * preds, axis=0)
    variances = np.sum(probs * (preds - means[None, :]) ** 2, axis=0)
    bias_sq = (seq.values - means) ** 2
    return float(math.fsum(bias_sq)), float(math.fsum(variances))


def run_predictor_fn(fn: PredictorFn, seq: BoundedSequence) -> float:
    """Cumulative squared loss of a plain history -> prediction function."""
    values = seq.values
    return float(math.fsum((values[t] - float(fn(values[:t]))) ** 2 for t in range(values.size)))


def ridge_predictor_fn(
    spec: FeatureSpec,
    delta: float,
    damped: bool = False,
    clip_to: float | None = None,
) -> PredictorFn:
    """A pure history -> prediction wrapper around the online ridge recursion.

    Replays the recursion from scratch on each call (cost grows with the
    history length), which keeps the handle a genuine function of the observed
    prefix as the mixture contract requires.  `damped` selects the
    leverage-damped output (the certificate-carrying form); `clip_to` clamps
    the output into [-clip_to, +clip_to].
    """

    def predict_next(history: np.ndarray) -> float:
        h = np.asarray(history, dtype=float)
        bound = float(np.max(np.abs(h))) if h.size else 0.0
        seq = BoundedSequence(h, bound)
        state = init(spec.order_m, delta)
        for t in range(1, h.size + 1):
            state = update(state, features(spec, seq, t), h[t - 1])
        f_next = features(spec, seq, h.size + 1)
        raw = predict(state, f_next)
        if damped:
            leverage = float(f_next @ (state.inv_cache @ f_next))
            raw = raw / (1.0 + leverage)
        if clip_to is not None:
            raw = min(max(raw, -clip_to), clip_to)
        return raw

    return predict_next


EXTENDED_CSV_COLUMNS = (
    "n", "m", "class", "delta", "seq_loss", "batch_ridge",
    "batch_raw", "regret", "det_bound", "simple_bound",
    "p_rand_mc", "p_rand_analytic", "variance_total",
)


def extended_csv_row(report, p_rand_mc: float, p_rand_analytic: float, variance_total: float) -> list[str]:
    """RegretReport row plus the randomized-account columns."""
    return report.csv_row() + [repr(float(p_rand_mc)), repr(float(p_rand_analytic)), repr(float(variance_total))]
