"""Command-line front end: regret runs, lower-bound experiments, baselines, identities.

Subcommands
-----------
regret      one sequence, one feature class: online run, regret report CSV,
            optional SVG of cumulative certified loss vs the certificate.
lowerbound  Monte-Carlo regret floor over a horizon grid (adversarial draws).
compare     universal ridge vs LMS vs RLS (vs the Bayes reference on
            adversarial data) at prefix checkpoints of one sequence.
identity    evidence-identity and randomized/derandomized accounting checks.

Exit codes: 0 = success and all checks passed; 1 = a check failed;
2 = usage, config, or input-parse error.

Every command is deterministic given its full configuration (seed included):
CSV and SVG outputs are byte-identical across repeat runs.
"""

from __future__ import annotations

import argparse
import math
import re
import sys

import numpy as np

from .adversary import (
    AdversaryKind,
    AdversarySpec,
    bayes_prediction_trace,
    estimate_lower_bound,
    generate,
    sample_theta,
)
from .batch import batch_solve, mixture_log_evidence, regret_report, RegretReport
from .predictors import init, run_lms, run_online, run_rls, update
from .randomized import (
    EXTENDED_CSV_COLUMNS,
    RandomizedPredictor,
    derandomize,
    extended_csv_row,
    ridge_predictor_fn,
    run_predictor_fn,
    run_randomized,
    static_rule,
    variance_decomposition,
)
from .sequences import (
    BoundedSequence,
    FeatureSpec,
    features,
    linear_lag,
    monomial_features,
    univariate_poly,
)
from .svgchart import line_chart

STOCHASTIC_FAMILIES = ("walk", "adversarial")


class InputFileError(Exception):
    """Raised for malformed sequence or config files; mapped to exit code 2."""


# ---------------------------------------------------------------- input files

def read_sequence_file(path: str) -> BoundedSequence:
    """Parse one real per line; optional '# A=<bound>' header; other # lines ignored.

    Without a header the bound is taken as max |x| (zero for the all-zero
    file), per the declared file format.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputFileError(f"cannot read sequence file {path}: {exc}") from exc
    bound = None
    values: list[float] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            match = re.match(r"#\s*A\s*=\s*(\S+)\s*$", text)
            if match:
                try:
                    bound = float(match.group(1))
                except ValueError as exc:
                    raise InputFileError(f"{path}:{lineno}: bad bound in header: {text!r}") from exc
            continue
        try:
            values.append(float(text))
        except ValueError as exc:
            raise InputFileError(f"{path}:{lineno}: not a number: {text!r}") from exc
    if not values:
        raise InputFileError(f"{path}: no samples found")
    arr = np.array(values)
    if bound is None:
        bound = float(np.max(np.abs(arr)))
    try:
        return BoundedSequence(arr, bound)
    except ValueError as exc:
        raise InputFileError(f"{path}: {exc}") from exc


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value file; '#' starts a comment; keys are long flag names."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputFileError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise InputFileError(f"{path}:{lineno}: expected key=value, got {text!r}")
        key, value = text.split("=", 1)
        key = key.strip().replace("_", "-")
        if not key:
            raise InputFileError(f"{path}:{lineno}: empty key")
        out[key] = value.strip()
    return out


# ----------------------------------------------------------- built sequences

def build_sequence(ns: argparse.Namespace) -> BoundedSequence:
    if ns.input:
        return read_sequence_file(ns.input)
    n, A = ns.n, ns.A
    if ns.family == "zero":
        return BoundedSequence(np.zeros(n), 0.0)
    if ns.family == "sinusoid":
        t = np.arange(1, n + 1)
        return BoundedSequence(A * np.sin(2.0 * math.pi * 0.05 * t), A)
    if ns.family == "walk":
        rng = np.random.default_rng(ns.seed)
        steps = rng.normal(0.0, A / 8.0, size=n)
        return BoundedSequence(np.clip(np.cumsum(steps), -A, A), A)
    if ns.family == "adversarial":
        spec = AdversarySpec(
            kind=AdversaryKind.SIGN_FLIP_LAG,
            beta_C=ns.C,
            bound_A=A,
            horizon_n=n,
            seed=ns.seed,
            lag_k=ns.k,
        )
        rng = np.random.default_rng(np.random.SeedSequence(ns.seed))
        theta = sample_theta(ns.C, rng)
        return generate(spec, theta, rng)
    raise InputFileError(f"unknown family {ns.family!r}")


def default_monomials(order_m: int) -> list[dict[int, int]]:
    """Chained products x[t-1]*...*x[t-i] for i = 1..m (degrees 1..m)."""
    return [{lag: 1 for lag in range(1, i + 1)} for i in range(1, order_m + 1)]


def build_feature_spec(ns: argparse.Namespace) -> FeatureSpec:
    if ns.klass == "univar":
        return univariate_poly(ns.m)
    if ns.klass == "linear":
        return linear_lag(ns.k, ns.m)
    return monomial_features(default_monomials(ns.m))


# ------------------------------------------------------------------- outputs

def write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def svg_path_for(out: str | None) -> str:
    if out is None:
        raise InputFileError("--svg requires --out (the chart path is derived from it)")
    stem = out[:-4] if out.endswith(".csv") else out
    return stem + ".svg"


# ------------------------------------------------------------------ commands

def bound_trace(spec: FeatureSpec, seq: BoundedSequence, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-prefix certified loss and certificate value, for charting.

    Returns (cumulative damped loss at each t, penalized hindsight objective
    at prefix t plus A^2 * sum_{s<=t} ln(1 + leverage_s)); the second majorizes
    the first at every prefix under the certified convention.
    """
    n = len(seq)
    A = seq.bound_A
    state = init(spec.order_m, delta)
    cum_damped = np.empty(n)
    certificate = np.empty(n)
    damped_total = 0.0
    log_det = 0.0
    sum_sq = 0.0
    for t in range(1, n + 1):
        f = features(spec, seq, t)
        cache_f = state.inv_cache @ f
        raw = float(state.cross_r @ cache_f)
        leverage = float(f @ cache_f)
        x_t = seq.values[t - 1]
        damped_total += (x_t - raw / (1.0 + leverage)) ** 2
        log_det += math.log1p(leverage)
        sum_sq += x_t * x_t
        state = update(state, f, x_t)
        objective = sum_sq - float(state.cross_r @ np.linalg.solve(
            state.gram_R + delta * np.eye(spec.order_m), state.cross_r))
        cum_damped[t - 1] = damped_total
        certificate[t - 1] = objective + A * A * log_det
    return cum_damped, certificate


def cmd_regret(ns: argparse.Namespace) -> int:
    seq = build_sequence(ns)
    spec = build_feature_spec(ns)
    run = run_online(spec, seq, ns.delta, clip=ns.clip)
    report = regret_report(spec, seq, ns.delta, run)
    lines = [",".join(RegretReport.CSV_COLUMNS), ",".join(report.csv_row())]
    write_text(ns.out, "\n".join(lines) + "\n")
    if ns.svg:
        steps = [float(t) for t in range(1, len(seq) + 1)]
        cum_damped, certificate = bound_trace(spec, seq, ns.delta)
        chart = line_chart(
            [
                ("certified loss", steps, [float(v) for v in cum_damped]),
                ("certificate", steps, [float(v) for v in certificate]),
            ],
            title=f"cumulative certified loss vs certificate ({spec.label}, m={spec.order_m})",
            x_label="t",
            y_label="cumulative squared error",
        )
        write_text(svg_path_for(ns.out), chart)
    if not report.bound_satisfied():
        print(
            f"BOUND CHECK FAILED: certified loss {report.bound_loss!r} > "
            f"{report.batch_loss_ridge!r} + {report.det_bound!r}",
            file=sys.stderr,
        )
        return 1
    return 0


def default_n_grid(n_top: int) -> list[int]:
    grid = []
    n = 128
    while n <= n_top:
        grid.append(n)
        n *= 2
    return grid or [n_top]


def cmd_lowerbound(ns: argparse.Namespace) -> int:
    if ns.klass == "monomial":
        spec = AdversarySpec(
            kind=AdversaryKind.SIGN_FLIP_MONOMIAL,
            beta_C=ns.C,
            bound_A=ns.A,
            horizon_n=ns.n,
            seed=ns.seed,
            monomial=((1, 1), (2, 1)),
        )
    else:
        spec = AdversarySpec(
            kind=AdversaryKind.SIGN_FLIP_LAG,
            beta_C=ns.C,
            bound_A=ns.A,
            horizon_n=ns.n,
            seed=ns.seed,
            lag_k=ns.k,
        )
    table = estimate_lower_bound(spec, default_n_grid(ns.n), ns.trials, order_m=ns.m)
    write_text(ns.out, table.csv_text())
    if ns.svg:
        chart = line_chart(
            [("mean regret", [math.log(r.n) for r in table.rows], [r.mean_regret for r in table.rows])],
            title=f"regret floor vs ln n (trials={ns.trials})",
            x_label="ln n",
            y_label="mean regret",
        )
        write_text(svg_path_for(ns.out), chart)
    failing = [r for r in table.rows if r.mean_regret < -3.0 * r.std_error]
    if failing:
        rows = ", ".join(f"n={r.n}: {r.mean_regret!r} (se {r.std_error!r})" for r in failing)
        print(f"LOWER-BOUND CHECK FAILED: negative mean regret beyond 3 SE at {rows}", file=sys.stderr)
        return 1
    return 0


COMPARE_COLUMNS = ("algo", "n", "m", "class", "delta", "loss", "batch_raw", "regret")


def cmd_compare(ns: argparse.Namespace) -> int:
    seq = build_sequence(ns)
    spec = build_feature_spec(ns)
    n = len(seq)
    checkpoints = sorted({max(1, n // 8), max(1, n // 4), max(1, n // 2), n})
    # LMS step size: conservative normalization by the worst-case feature energy
    feature_energy = spec.order_m * max(seq.bound_A, 1.0) ** 2
    mu = ns.mu if ns.mu is not None else 0.5 / feature_energy
    two_valued = seq.bound_A > 0 and bool(
        np.all((seq.values == seq.bound_A) | (seq.values == -seq.bound_A))
    )

    lines = [",".join(COMPARE_COLUMNS)]
    for nc in checkpoints:
        prefix = seq.prefix(nc)
        _, batch_raw = batch_solve(spec, prefix, 0.0)
        rows = [
            ("universal", run_online(spec, prefix, ns.delta, clip=ns.clip).cumulative_loss),
            ("lms", run_lms(spec, prefix, mu).cumulative_loss),
            ("rls", run_rls(spec, prefix, ns.delta, forgetting=ns.forgetting).cumulative_loss),
        ]
        if two_valued:
            preds = bayes_prediction_trace(prefix.values, ns.C, ns.k)
            rows.append(("bayes", float(np.sum((prefix.values - preds) ** 2))))
        for algo, loss in rows:
            lines.append(
                ",".join(
                    [
                        algo,
                        str(nc),
                        str(spec.order_m),
                        spec.label,
                        repr(float(ns.delta)),
                        repr(float(loss)),
                        repr(float(batch_raw)),
                        repr(float(loss - batch_raw)),
                    ]
                )
            )
    write_text(ns.out, "\n".join(lines) + "\n")
    return 0


def evidence_quadrature(spec: FeatureSpec, seq: BoundedSequence, h: float, sigma2: float) -> float:
    """-2h ln of the scale-mixture evidence by brute trapezoid integration.

    Deliberately independent of the algebraic path: integrates the weight
    variable over +-12 posterior widths with log-sum-exp shifting.
    """
    from .sequences import feature_matrix

    F = feature_matrix(spec, seq)[:, 0]
    x = seq.values
    R = float(F @ F)
    r = float(x @ F)
    delta_eff = h / sigma2
    center = r / (R + delta_eff)
    width = math.sqrt(h / (R + delta_eff))
    grid = np.linspace(center - 12.0 * width, center + 12.0 * width, 20001)
    log_vals = np.empty(grid.size)
    for i, b in enumerate(grid):
        resid = x - b * F
        log_vals[i] = -0.5 * b * b / sigma2 - float(resid @ resid) / (2.0 * h)
    shift = float(np.max(log_vals))
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    integral = trapezoid(np.exp(log_vals - shift), grid)
    log_evidence = shift + math.log(integral) - 0.5 * math.log(2.0 * math.pi * sigma2)
    return -2.0 * h * log_evidence


def cmd_identity(ns: argparse.Namespace) -> int:
    seq = build_sequence(ns)
    spec = build_feature_spec(ns)
    failures: list[str] = []

    # evidence identity on the scalar restriction of the chosen class
    if ns.klass == "univar":
        scalar_spec = univariate_poly(1)
    elif ns.klass == "linear":
        scalar_spec = linear_lag(ns.k, 1)
    else:
        scalar_spec = monomial_features(default_monomials(1))
    h = 2.0 * ns.delta
    sigma2 = 2.0  # delta_eff = h / sigma2 = delta
    algebraic = mixture_log_evidence(scalar_spec, seq, h, sigma2)
    quadrature = evidence_quadrature(scalar_spec, seq, h, sigma2)
    rel_gap = abs(algebraic - quadrature) / max(1.0, abs(algebraic))
    print(f"evidence identity: algebraic={algebraic!r} quadrature={quadrature!r} rel_gap={rel_gap:.3e}")
    if rel_gap > 1e-4:
        failures.append(f"evidence identity mismatch (rel gap {rel_gap:.3e})")

    # randomized mixture of certified predictors vs its derandomization
    constituents = (
        ridge_predictor_fn(spec, ns.delta, damped=True),
        ridge_predictor_fn(spec, ns.delta, damped=True, clip_to=seq.bound_A),
        ridge_predictor_fn(spec, 2.0 * ns.delta, damped=True),
    )
    rp = RandomizedPredictor(constituents, static_rule([0.5, 0.3, 0.2]), seed=ns.seed)
    p_rand_mc, per_step = run_randomized(rp, seq, ns.trials)
    p_rand_analytic = float(math.fsum(per_step))
    bias_sq, variance_total = variance_decomposition(rp, seq)
    derand_loss = run_predictor_fn(derandomize(rp), seq)

    decomposition_gap = abs(bias_sq + variance_total - p_rand_analytic)
    identity_gap = abs(derand_loss - (p_rand_analytic - variance_total))
    scale = max(1.0, p_rand_analytic)
    print(
        f"randomized account: p_rand_mc={p_rand_mc!r} p_rand_analytic={p_rand_analytic!r} "
        f"variance_total={variance_total!r} derandomized_loss={derand_loss!r}"
    )
    if decomposition_gap > 1e-10 * scale:
        failures.append(f"bias+variance decomposition gap {decomposition_gap:.3e}")
    if identity_gap > 1e-10 * scale:
        failures.append(f"derandomized-loss identity gap {identity_gap:.3e}")
    if derand_loss > p_rand_analytic + 1e-10 * scale:
        failures.append("derandomization failed to dominate the randomized loss")

    run = run_online(spec, seq, ns.delta, clip=ns.clip)
    report = regret_report(spec, seq, ns.delta, run)
    lines = [
        ",".join(EXTENDED_CSV_COLUMNS),
        ",".join(extended_csv_row(report, p_rand_mc, p_rand_analytic, variance_total)),
    ]
    write_text(ns.out, "\n".join(lines) + "\n")

    for message in failures:
        print(f"IDENTITY CHECK FAILED: {message}", file=sys.stderr)
    return 1 if failures else 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqregret",
        description="Sequential prediction experiments: regret certificates, "
        "lower-bound floors, baselines, and randomization identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_sequence: bool) -> None:
        p.add_argument("--config", help="flat key=value file; explicit flags override it")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (required for stochastic runs)")
        p.add_argument("--delta", type=float, default=1.0, help="ridge regularizer (> 0)")
        p.add_argument("--A", type=float, default=1.0, help="amplitude bound for generated sequences")
        p.add_argument(
            "--class", dest="klass", choices=("univar", "monomial", "linear"), default="linear",
            help="feature class (univar: powers of x[t-1]; linear: lagged window; "
            "monomial: chained lag products)",
        )
        p.add_argument("--m", type=int, default=1, help="number of features")
        p.add_argument("--k", type=int, default=1, help="prediction lookahead / adversary lag")
        p.add_argument("--n", type=int, default=256, help="sequence length / top of horizon grid")
        p.add_argument("--trials", type=int, default=200, help="Monte-Carlo trials")
        p.add_argument("--C", type=float, default=1.0, help="beta prior parameter of the adversary")
        p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
        p.add_argument("--svg", action="store_true", help="also write a chart next to --out")
        p.add_argument("--clip", action="store_true", help="clamp online predictions to [-A, A]")
        if with_sequence:
            p.add_argument("--input", default=None, help="sequence file (one real per line, optional '# A=' header)")
            p.add_argument(
                "--family", choices=("zero", "sinusoid", "walk", "adversarial"), default="sinusoid",
                help="built-in sequence generator when --input is absent",
            )

    p_regret = sub.add_parser("regret", help="one online run + regret certificate")
    add_common(p_regret, with_sequence=True)
    p_regret.set_defaults(func=cmd_regret)

    p_lower = sub.add_parser("lowerbound", help="Monte-Carlo regret floor on a horizon grid")
    add_common(p_lower, with_sequence=False)
    p_lower.set_defaults(func=cmd_lowerbound)

    p_compare = sub.add_parser("compare", help="universal vs LMS vs RLS (vs Bayes on two-valued data)")
    add_common(p_compare, with_sequence=True)
    p_compare.add_argument("--mu", type=float, default=None, help="LMS step size (default: 0.5 / (m*max(A,1)^2))")
    p_compare.add_argument("--forgetting", type=float, default=1.0, help="RLS forgetting factor in (0, 1]")
    p_compare.set_defaults(func=cmd_compare)

    p_identity = sub.add_parser("identity", help="evidence + randomization identity checks")
    add_common(p_identity, with_sequence=True)
    p_identity.set_defaults(func=cmd_identity)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Splice config-file entries in as flags ahead of the explicit ones.

    The config key 'svg=true' style booleans become bare flags; everything
    else becomes --key=value.  Explicit command-line flags come later in the
    synthesized argv, so they override the file.
    """
    if "--config" not in " ".join(argv):
        return argv
    # find the config path without committing to full parsing yet
    path = None
    rest = list(argv)
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            rest = argv[:i] + argv[i + 2:]
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            rest = argv[:i] + argv[i + 1:]
            break
    if path is None:
        return argv
    entries = read_config_file(path)
    synthesized: list[str] = []
    for key, value in entries.items():
        if key in ("svg", "clip"):
            if value.lower() in ("1", "true", "yes", "on"):
                synthesized.append(f"--{key}")
            elif value.lower() not in ("0", "false", "no", "off"):
                raise InputFileError(f"config key {key!r}: expected a boolean, got {value!r}")
        else:
            synthesized.append(f"--{key}={value}")
    if not rest:
        raise InputFileError("config file cannot supply the subcommand itself")
    return [rest[0], *synthesized, *rest[1:]]


def _needs_seed(ns: argparse.Namespace) -> bool:
    if ns.command == "lowerbound":
        return True
    if ns.command == "identity":
        return True  # the randomized Monte-Carlo path always draws
    family = getattr(ns, "family", None)
    return getattr(ns, "input", None) is None and family in STOCHASTIC_FAMILIES


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if _needs_seed(ns) and ns.seed is None:
        print(f"error: {ns.command} is stochastic here; --seed is required", file=sys.stderr)
        return 2
    if ns.seed is None:
        ns.seed = 0
    try:
        return ns.func(ns)
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
