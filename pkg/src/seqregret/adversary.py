"""Sign-flip adversaries, the Bayes reference predictor, and regret floor estimates.

The construction: draw a stay probability theta from a symmetric beta(C, C)
prior, then emit a two-valued sequence in {+A, -A} where each new sample
either repeats or flips a reference value (the sample one lag-k chain back,
or the sign of a normalized monomial of the recent history).  The conditional
mean predictor under this law is (2*theta_hat - 1) times the reference, with
theta_hat the conjugate posterior mean of theta.  Averaging the gap between
that predictor's sequential loss and the best hindsight fit gives a Monte
Carlo floor on how much any sequential algorithm must regret.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .batch import batch_solve, _fmt
from .sequences import (
    BoundedSequence,
    FeatureSpec,
    Monomial,
    linear_lag,
    monomial_features,
)

# Seedable generator used throughout: numpy PCG64 behind default_rng, with
# per-task streams derived by SeedSequence.spawn.  Gamma draws (for the beta
# prior) use numpy's standard rejection sampler.
RNG_ALGORITHM = "PCG64"


class AdversaryKind(Enum):
    SIGN_FLIP_LAG = "lag"
    SIGN_FLIP_MONOMIAL = "monomial"


@dataclass(frozen=True)
class AdversarySpec:
    """A lower-bound sequence distribution.

    kind = SIGN_FLIP_LAG: x[t] repeats x[t-k] with probability theta, else
    flips it; the first k samples are +A.  kind = SIGN_FLIP_MONOMIAL: the
    reference is the sign of the monomial evaluated on recent history
    (normalized to magnitude A, which is exact for any pure monomial on
    two-valued input); the first max-lag samples are +A.
    """

    kind: AdversaryKind
    beta_C: float
    bound_A: float
    horizon_n: int
    seed: int
    lag_k: int = 1
    monomial: Monomial = ()

    def __post_init__(self) -> None:
        if not self.beta_C > 0:
            raise ValueError("beta_C must be positive")
        if not (self.bound_A > 0 and math.isfinite(self.bound_A)):
            raise ValueError("bound_A must be positive and finite")
        if self.horizon_n < 1:
            raise ValueError("horizon_n must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.kind is AdversaryKind.SIGN_FLIP_LAG:
            if self.lag_k < 1:
                raise ValueError("lag_k must be >= 1")
            if self.monomial:
                raise ValueError("monomial is only meaningful for the monomial adversary")
        else:
            if not self.monomial:
                raise ValueError("monomial adversary needs a monomial")
            for lag, exp in self.monomial:
                if lag < 1 or exp < 1:
                    raise ValueError(f"monomial terms need lag >= 1 and exponent >= 1, got {(lag, exp)}")

    @property
    def memory(self) -> int:
        if self.kind is AdversaryKind.SIGN_FLIP_LAG:
            return self.lag_k
        return max(lag for lag, _ in self.monomial)

    def matching_feature_spec(self, order_m: int = 1) -> FeatureSpec:
        """The hindsight comparator class this adversary is built against."""
        if self.kind is AdversaryKind.SIGN_FLIP_LAG:
            return linear_lag(self.lag_k, order_m)
        return monomial_features([self.monomial])


def sample_theta(beta_C: float, rng: np.random.Generator) -> float:
    """One beta(C, C) draw built from two gamma draws (theta = g1 / (g1 + g2)).

    Degenerate draws (0 or 1, possible only by floating-point underflow at
    tiny C) are rejected and redrawn so the result is always in (0, 1).
    """
    if not beta_C > 0:
        raise ValueError("beta_C must be positive")
    while True:
        g1 = rng.gamma(beta_C)
        g2 = rng.gamma(beta_C)
        total = g1 + g2
        if total > 0:
            theta = g1 / total
            if 0.0 < theta < 1.0:
                return float(theta)


def generate(spec: AdversarySpec, theta: float, rng: np.random.Generator) -> BoundedSequence:
    """Sample one two-valued sequence of length horizon_n under stay probability theta.

    The endpoints theta = 0 (always flip) and theta = 1 (always stay) are
    legal and deterministic; prior draws from :func:`sample_theta` stay in the
    open interval.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must be in [0, 1]")
    n = spec.horizon_n
    A = spec.bound_A
    mem = spec.memory
    x = np.empty(n)
    x[: min(mem, n)] = A
    if n <= mem:
        return BoundedSequence(x, A)

    signs = np.where(rng.random(n - mem) < theta, 1.0, -1.0)
    if spec.kind is AdversaryKind.SIGN_FLIP_LAG:
        k = spec.lag_k
        for j in range(k):
            chain = signs[j::k]
            if chain.size:
                x[j + k::k] = A * np.cumprod(chain)
    else:
        for i, t in enumerate(range(mem, n)):
            ref = 1.0
            for lag, exp in spec.monomial:
                ref *= x[t - lag] ** exp
            x[t] = signs[i] * math.copysign(A, ref)
    return BoundedSequence(x, A)


def _check_two_valued(values: np.ndarray, A: float) -> None:
    if not np.all((values == A) | (values == -A)):
        raise ValueError("history must take values exactly in {+A, -A}")


def bayes_predict(history: BoundedSequence, beta_C: float, k: int) -> float:
    """Conditional-mean prediction of the next sample of a lag-k sign-flip chain.

    Counts stays/flips inside the lag-k subchain the next index belongs to
    and returns (2*theta_hat - 1) * x[t-k] with the conjugate posterior mean
    theta_hat = (stays + C) / (stays + flips + 2C).  With no usable history
    (next index <= k) the prior mean theta = 1/2 gives 0.
    """
    if not beta_C > 0:
        raise ValueError("beta_C must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = history.values
    t = vals.size  # 0-based index of the sample being predicted
    if t < k:
        return 0.0
    _check_two_valued(vals, history.bound_A)
    # positions q in t's subchain with both x[q] and x[q-k] observed
    positions = np.arange(t % k + k, t, k)
    stays = int(np.sum(vals[positions] == vals[positions - k])) if positions.size else 0
    total = int(positions.size)
    theta_hat = (stays + beta_C) / (total + 2.0 * beta_C)
    return float((2.0 * theta_hat - 1.0) * vals[t - k])


def bayes_prediction_trace(values: np.ndarray, beta_C: float, k: int) -> np.ndarray:
    """Vectorized bayes_predict over a whole chain: entry t predicts values[t]."""
    n = values.size
    preds = np.zeros(n)
    if n <= k:
        return preds
    stay = (values[k:] == values[:-k]).astype(float)
    C = float(beta_C)
    for j in range(k):
        chain = stay[j::k]
        L = chain.size
        if L == 0:
            continue
        seen = np.arange(L, dtype=float)
        stays_before = np.concatenate([[0.0], np.cumsum(chain)[:-1]])
        theta_hat = (stays_before + C) / (seen + 2.0 * C)
        positions = j + k + np.arange(L) * k
        preds[positions] = (2.0 * theta_hat - 1.0) * values[positions - k]
    return preds


def _monomial_reference_signs(values: np.ndarray, A: float, mono: Monomial) -> np.ndarray:
    """Normalized monomial of the history preceding each position (entries +-A or 0)."""
    n = values.size
    mem = max(lag for lag, _ in mono)
    ref = np.ones(n)
    for lag, exp in mono:
        shifted = np.concatenate([np.zeros(lag), values[: n - lag]])
        ref *= np.sign(shifted) ** exp
    ref[:mem] = 0.0
    return ref * A


def monomial_bayes_prediction_trace(values: np.ndarray, A: float, beta_C: float, mono: Monomial) -> np.ndarray:
    """Conditional-mean trace for the monomial adversary (single pooled chain)."""
    n = values.size
    mem = max(lag for lag, _ in mono)
    preds = np.zeros(n)
    if n <= mem:
        return preds
    ref = _monomial_reference_signs(values, A, mono)
    agree = (values[mem:] == ref[mem:]).astype(float)
    seen = np.arange(agree.size, dtype=float)
    agrees_before = np.concatenate([[0.0], np.cumsum(agree)[:-1]])
    theta_hat = (agrees_before + beta_C) / (seen + 2.0 * beta_C)
    preds[mem:] = (2.0 * theta_hat - 1.0) * ref[mem:]
    return preds


@dataclass(frozen=True)
class LowerBoundRow:
    n: int
    mean_regret: float
    std_error: float
    trials: int


@dataclass(frozen=True)
class LowerBoundTable:
    """Monte-Carlo regret floor per horizon, with a log-rate fit.

    mean_regret at horizon n averages (Bayes predictor cumulative loss) minus
    (hindsight least-squares loss, delta = 0 pseudo-solve) over independent
    sequence draws; fitted_slope_vs_ln_n is the least-squares slope of those
    means against ln n.
    """

    rows: tuple[LowerBoundRow, ...]
    fitted_slope_vs_ln_n: float

    CSV_COLUMNS = ("n", "mean_regret", "std_error", "trials")

    def csv_text(self) -> str:
        lines = [",".join(self.CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join([str(row.n), _fmt(row.mean_regret), _fmt(row.std_error), str(row.trials)]))
        lines.append(",".join(["slope_fit", _fmt(self.fitted_slope_vs_ln_n), "", ""]))
        return "\n".join(lines) + "\n"


def _bayes_loss(spec: AdversarySpec, seq: BoundedSequence) -> float:
    if spec.kind is AdversaryKind.SIGN_FLIP_LAG:
        preds = bayes_prediction_trace(seq.values, spec.beta_C, spec.lag_k)
    else:
        preds = monomial_bayes_prediction_trace(seq.values, seq.bound_A, spec.beta_C, spec.monomial)
    return float(np.sum((seq.values - preds) ** 2))


def estimate_lower_bound(
    spec: AdversarySpec,
    n_grid: list[int],
    trials: int,
    order_m: int = 1,
) -> LowerBoundTable:
    """Monte-Carlo estimate of the expected regret floor on a horizon grid.

    For each n, `trials` independent draws of (theta, sequence); each trial
    contributes (Bayes cumulative loss) - (delta=0 hindsight loss on the
    matching feature class).  Trials use seeds split from spec.seed with
    SeedSequence.spawn, so the table is reproducible bit-for-bit and the
    reduction is a plain array mean (order-independent).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    feature_spec = spec.matching_feature_spec(order_m)
    root = np.random.SeedSequence(spec.seed)
    per_n_seeds = root.spawn(len(n_grid))
    rows = []
    for n, n_seed in zip(n_grid, per_n_seeds):
        spec_n = replace(spec, horizon_n=int(n))
        gaps = np.empty(trials)
        for i, trial_seed in enumerate(n_seed.spawn(trials)):
            rng = np.random.default_rng(trial_seed)
            theta = sample_theta(spec.beta_C, rng)
            seq = generate(spec_n, theta, rng)
            _, hindsight = batch_solve(feature_spec, seq, 0.0)
            gaps[i] = _bayes_loss(spec_n, seq) - hindsight
        mean = float(np.mean(gaps))
        se = float(np.std(gaps, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        rows.append(LowerBoundRow(n=int(n), mean_regret=mean, std_error=se, trials=trials))
    slope = float(np.polyfit(np.log([r.n for r in rows]), [r.mean_regret for r in rows], 1)[0]) if len(rows) > 1 else 0.0
    return LowerBoundTable(rows=tuple(rows), fitted_slope_vs_ln_n=slope)


@dataclass(frozen=True)
class TransitionCheck:
    """Monte-Carlo summary of the flip-count law of a lag-1 chain.

    flip_fraction aggregates all transitions; lag_product_* summarize
    x[t]*x[t-1]/A^2 (zero-mean unconditionally by prior symmetry);
    chi_square compares the per-trial flip-count histogram against the
    binomial (theta fixed) or prior-mixed binomial (theta drawn) law, with
    low-expectation bins merged into the tails.
    """

    trials: int
    horizon_n: int
    theta: float | None
    flip_fraction: float
    expected_flip_fraction: float
    flip_var_ratio: float | None
    lag_product_mean: float
    lag_product_z: float
    chi_square: float
    chi_square_dof: int


def _flip_count_pmf(n_transitions: int, beta_C: float, theta: float | None) -> np.ndarray:
    pmf = np.empty(n_transitions + 1)
    for flips in range(n_transitions + 1):
        comb = math.comb(n_transitions, flips)
        if theta is not None:
            pmf[flips] = comb * (1 - theta) ** flips * theta ** (n_transitions - flips)
        else:
            # prior-mixed: integrate the binomial against beta(C, C)
            log_b = (
                math.lgamma(flips + beta_C)
                + math.lgamma(n_transitions - flips + beta_C)
                - math.lgamma(n_transitions + 2 * beta_C)
            )
            log_b0 = 2 * math.lgamma(beta_C) - math.lgamma(2 * beta_C)
            pmf[flips] = comb * math.exp(log_b - log_b0)
    return pmf


def transition_posterior_check(
    n: int,
    beta_C: float,
    trials: int,
    seed: int = 0,
    theta: float | None = None,
) -> TransitionCheck:
    """Check generated chains against their advertised transition law.

    Simulates `trials` lag-1 chains of length n (A = 1), either at a fixed
    theta or with theta drawn from the beta(C, C) prior per trial, and
    summarizes flip statistics; see :class:`TransitionCheck`.
    """
    if n < 2:
        raise ValueError("need n >= 2 for at least one transition")
    if trials < 2:
        raise ValueError("need trials >= 2")
    rng = np.random.default_rng(seed)
    if theta is not None:
        thetas = np.full(trials, float(theta))
    else:
        thetas = np.array([sample_theta(beta_C, rng) for _ in range(trials)])
    stays = rng.random((trials, n - 1)) < thetas[:, None]
    flips_per_trial = (n - 1) - stays.sum(axis=1)

    flip_fraction = float(np.mean(flips_per_trial) / (n - 1))
    expected_flip = 1.0 - float(theta) if theta is not None else 0.5
    products_per_trial = np.mean(2.0 * stays - 1.0, axis=1)  # mean of x[t]*x[t-1] per chain
    prod_mean = float(np.mean(products_per_trial))
    prod_se = float(np.std(products_per_trial, ddof=1) / math.sqrt(trials))
    prod_z = prod_mean / prod_se if prod_se > 0 else 0.0

    if theta is not None:
        expected_var = (n - 1) * theta * (1.0 - theta)
        var_ratio = float(np.var(flips_per_trial, ddof=1) / expected_var) if expected_var > 0 else None
    else:
        var_ratio = None

    pmf = _flip_count_pmf(n - 1, beta_C, theta)
    expected = pmf * trials
    observed = np.bincount(flips_per_trial.astype(int), minlength=n)[:n].astype(float)
    # merge small-expectation bins into the tails so the Pearson statistic is sane
    keep = expected >= 5.0
    if not np.any(keep):
        chi_square, dof = 0.0, 0
    else:
        first, last = int(np.argmax(keep)), int(len(keep) - 1 - np.argmax(keep[::-1]))
        obs = observed[first:last + 1].copy()
        exp = expected[first:last + 1].copy()
        obs[0] += observed[:first].sum()
        exp[0] += expected[:first].sum()
        obs[-1] += observed[last + 1:].sum()
        exp[-1] += expected[last + 1:].sum()
        chi_square = float(np.sum((obs - exp) ** 2 / exp))
        dof = max(len(obs) - 1, 1)

    return TransitionCheck(
        trials=trials,
        horizon_n=n,
        theta=theta,
        flip_fraction=flip_fraction,
        expected_flip_fraction=expected_flip,
        flip_var_ratio=var_ratio,
        lag_product_mean=prod_mean,
        lag_product_z=prod_z,
        chi_square=chi_square,
        chi_square_dof=dof,
    )
