"""Empirical checks of tail-parameter closure rules and dependence bounds.

Covers the three closure rules (sums take the minimum tail parameter,
independent products compose harmonically, powers divide it), the
positive-dependence constant behind the sum rule, and the negative
controls built from truncation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTailError,
    InsufficientDataError,
    ParameterError,
)
from .rng import RngStream
from .tail_distributions import (
    BOUNDED,
    GWT_NONNEG,
    GWT_REAL,
    WT_REAL,
    DistributionSpec,
    TailClass,
    sample_iid,
)
from .tail_estimation import (
    SIDE_ABSOLUTE,
    SIDE_RIGHT,
    EmpiricalTail,
    FitWindow,
    TailEstimate,
    empirical_survival,
    estimate_tail_index,
    loglog_points,
)

RULE_SUM_MIN = "sum_min"
RULE_PRODUCT_HARMONIC = "product_harmonic"
RULE_POWER = "power"

DEFAULT_Z_QUANTILES = (0.5, 0.9, 0.99, 0.999, 0.9999)
DEFAULT_MIN_CELL_COUNT = 100
_PD_MIN_SAMPLES = 10**5

# relative band plus noise floor: slowly-varying bias scales with beta
RELATIVE_TOLERANCE = 0.15


def closure_tolerance(predicted_beta: float, stderr: float) -> float:
    return max(RELATIVE_TOLERANCE * predicted_beta, 2.0 * stderr)


def feasible_z_quantiles(
    n: int,
    quantiles=DEFAULT_Z_QUANTILES,
    min_cell_count: int = DEFAULT_MIN_CELL_COUNT,
) -> tuple[float, ...]:
    """Drop z-grid quantiles whose conditioning cell would be under-filled."""
    kept = tuple(q for q in quantiles if n * (1.0 - q) >= min_cell_count)
    if not kept:
        raise InsufficientDataError(
            f"no usable z quantile at n={n} with min_cell_count={min_cell_count}"
        )
    return kept


@dataclass(frozen=True)
class PDEstimate:
    """Empirical positive-dependence constant over a z-grid.

    ``per_z_conditional[k]`` is the conditional probability that all
    non-conditioning coordinates fall on the required side of zero given
    the conditioning coordinate exceeds (right) or falls below (left)
    ``z_grid[k]``; ``c_hat`` is the grid minimum.
    """

    c_hat: float
    z_grid: np.ndarray
    per_z_conditional: np.ndarray
    min_cell_count: int
    side: str


@dataclass(frozen=True)
class ClosureReport:
    """Predicted vs estimated tail parameter for one closure check."""

    rule: str
    inputs: tuple[TailClass, ...]
    predicted_beta: float
    estimated: TailEstimate
    verdict: str
    points: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(frozen=True)
class TruncationReport:
    """Outcome of the truncation negative control."""

    m: float
    bound: float
    max_abs_sum: float
    within_bound: bool
    survival_beyond_bound: float
    tail_outcome: str
    tail_estimate: TailEstimate | None
    pd: PDEstimate
    points: np.ndarray | None = None


def estimate_pd_constant(
    joint_samples,
    conditioning_index: int = -1,
    side: str = SIDE_RIGHT,
    z_quantiles=DEFAULT_Z_QUANTILES,
    min_cell_count: int = DEFAULT_MIN_CELL_COUNT,
) -> PDEstimate:
    """Empirical PD constant of a joint sample matrix.

    For each z at the requested quantiles of the conditioning coordinate,
    computes P(all other coordinates >= 0 | X_cond >= z) on the right
    side (both inequalities flipped on the left). Every conditioning cell
    must contain at least ``min_cell_count`` events.
    """
    x = np.asarray(joint_samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ParameterError("joint_samples must be an (n, N) matrix with N >= 2")
    n = x.shape[0]
    if n < _PD_MIN_SAMPLES:
        raise InsufficientDataError(f"PD estimation needs n >= {_PD_MIN_SAMPLES}, got {n}")
    if side not in (SIDE_RIGHT, "left"):
        raise ParameterError("side must be 'right' or 'left'")
    qs = np.asarray(z_quantiles, dtype=np.float64)
    if np.any(qs < 0.5) or np.any(qs > 0.9999):
        raise ParameterError("z_quantiles must lie within [0.5, 0.9999]")
    cond = x[:, conditioning_index]
    others = np.delete(x, conditioning_index % x.shape[1], axis=1)
    if side == SIDE_RIGHT:
        z_grid = np.quantile(cond, qs)
        all_ok = (others >= 0).all(axis=1)
    else:
        z_grid = np.quantile(cond, 1.0 - qs)
        all_ok = (others <= 0).all(axis=1)
    per_z = np.empty(z_grid.size)
    for k, z in enumerate(z_grid):
        cell = cond >= z if side == SIDE_RIGHT else cond <= z
        count = int(cell.sum())
        if count < min_cell_count:
            raise InsufficientDataError(
                f"conditioning cell at z={z:g} has {count} events, need {min_cell_count}"
            )
        per_z[k] = all_ok[cell].mean()
    return PDEstimate(
        c_hat=float(per_z.min()),
        z_grid=z_grid,
        per_z_conditional=per_z,
        min_cell_count=min_cell_count,
        side=side,
    )


def _spec_beta(spec: DistributionSpec):
    tc = spec.tail_class()
    return tc, tc.beta


def _verdict(predicted: float, estimate: TailEstimate) -> str:
    tol = closure_tolerance(predicted, estimate.stderr_slope)
    return "pass" if abs(estimate.beta_hat - predicted) <= tol else "fail"


def _report(rule, inputs, predicted, samples, side, window) -> ClosureReport:
    tail = EmpiricalTail.from_samples(samples, side=side)
    pts = loglog_points(tail, window)
    estimate = estimate_tail_index(tail, window)
    return ClosureReport(
        rule=rule,
        inputs=tuple(inputs),
        predicted_beta=predicted,
        estimated=estimate,
        verdict=_verdict(predicted, estimate),
        points=pts,
    )


def check_sum_rule(
    specs,
    n: int,
    window: FitWindow = FitWindow(),
    rng: RngStream = RngStream(0),
) -> ClosureReport:
    """Sum of independent draws: the tail parameter is the minimum.

    Independent coordinates satisfy the positive-dependence condition, so
    the minimum rule applies. Bounded summands (point masses) do not
    constrain the minimum.
    """
    specs = list(specs)
    if len(specs) < 2:
        raise ParameterError("sum rule needs at least two specs")
    classes, betas = zip(*(_spec_beta(s) for s in specs))
    finite = [b for b in betas if b is not None]
    if not finite:
        raise ParameterError("no summand carries a tail parameter")
    if any(c.kind not in (WT_REAL, GWT_REAL, GWT_NONNEG, BOUNDED) for c in classes):
        raise ParameterError("sum rule applies to Weibull-like (or bounded) summands")
    total = np.zeros(n)
    for k, spec in enumerate(specs):
        total += sample_iid(spec, n, rng.child(k))
    return _report(RULE_SUM_MIN, classes, min(finite), total, SIDE_RIGHT, window)


def _require_symmetric_real(spec: DistributionSpec, what: str) -> TailClass:
    tc = spec.tail_class()
    if tc.kind not in (WT_REAL, GWT_REAL) or not tc.symmetric:
        raise ParameterError(f"{what} requires a symmetric real-line Weibull-like family")
    return tc


def check_product_rule(
    spec_x: DistributionSpec,
    spec_y: DistributionSpec,
    n: int,
    window: FitWindow = FitWindow(),
    rng: RngStream = RngStream(0),
) -> ClosureReport:
    """Product of independent symmetric draws: reciprocals add.

    Estimated on |XY| (absolute folding). A nonzero point mass acts as a
    pure rescaling and leaves the other factor's tail parameter.
    """
    pm_x = spec_x.family == "point_mass"
    pm_y = spec_y.family == "point_mass"
    if pm_x and pm_y:
        raise ParameterError("product of two point masses has no tail")
    if pm_x or pm_y:
        pm, other = (spec_x, spec_y) if pm_x else (spec_y, spec_x)
        if pm.params["value"] == 0:
            raise ParameterError("point-mass factor must be nonzero")
        tc_other = _require_symmetric_real(other, "product rule")
        predicted = tc_other.beta
        classes = (spec_x.tail_class(), spec_y.tail_class())
    else:
        tc_x = _require_symmetric_real(spec_x, "product rule")
        tc_y = _require_symmetric_real(spec_y, "product rule")
        predicted = 1.0 / (1.0 / tc_x.beta + 1.0 / tc_y.beta)
        classes = (tc_x, tc_y)
    x = sample_iid(spec_x, n, rng.child(0))
    y = sample_iid(spec_y, n, rng.child(1))
    return _report(RULE_PRODUCT_HARMONIC, classes, predicted, x * y, SIDE_ABSOLUTE, window)


def check_power_rule(
    spec: DistributionSpec,
    a: float,
    b: float,
    n: int,
    window: FitWindow = FitWindow(),
    rng: RngStream = RngStream(0),
) -> ClosureReport:
    """a |X|**b has tail parameter beta / b; the scale a changes nothing."""
    if a <= 0 or b <= 0:
        raise ParameterError("a and b must be > 0")
    tc = _require_symmetric_real(spec, "power rule")
    x = sample_iid(spec, n, rng.child(0))
    transformed = a * np.abs(x) ** b
    return _report(RULE_POWER, (tc,), tc.beta / b, transformed, SIDE_RIGHT, window)


def negative_control_truncation(
    spec: DistributionSpec,
    m: float,
    n: int,
    rng: RngStream = RngStream(0),
    window: FitWindow = FitWindow(),
) -> TruncationReport:
    """Truncation control: Y flips X outside [-m, m], so X + Y is capped.

    X + Y = 2 X 1{|X| <= m} algebraically, hence every sum lies in
    [-2m, 2m] and the pair (X, Y) violates positive dependence. The tail
    estimator must refuse (degenerate or insufficient) or return a fit
    whose window never crosses 2m.
    """
    if m <= 0:
        raise ParameterError("m must be > 0")
    x = sample_iid(spec, n, rng.child(0))
    inside = np.abs(x) <= m
    y = np.where(inside, x, -x)
    z = x + y
    tail = EmpiricalTail.from_samples(z, side=SIDE_RIGHT)
    beyond = float(empirical_survival(tail, 2.0 * m * (1.0 + 1e-12)))
    outcome, estimate, points = "estimate", None, None
    try:
        estimate = estimate_tail_index(tail, window)
        points = loglog_points(tail, window)
    except DegenerateTailError:
        outcome = "degenerate"
    except InsufficientDataError:
        outcome = "insufficient_data"
    pd = estimate_pd_constant(
        np.column_stack([x, y]), z_quantiles=feasible_z_quantiles(n)
    )
    return TruncationReport(
        m=m,
        bound=2.0 * m,
        max_abs_sum=float(np.abs(z).max()),
        within_bound=bool(np.abs(z).max() <= 2.0 * m),
        survival_beyond_bound=beyond,
        tail_outcome=outcome,
        tail_estimate=estimate,
        pd=pd,
        points=points,
    )


def weight_unit_product_samples(
    n: int,
    n_units: int,
    rng: RngStream = RngStream(0),
    input_dim: int = 16,
    hidden_width: int = 4,
) -> np.ndarray:
    """Joint samples of weight-times-unit products from a two-layer net.

    Returns an (n, n_units) matrix whose columns are w_i * h_i with h_i
    dependent nonnegative hidden units (they share the first layer) and
    w_i independent symmetric weights, the construction behind the
    positive-dependence lower bound 1 / 2**(N-1).
    """
    if n_units < 2:
        raise ParameterError("need at least two product coordinates")
    gen = rng.generator()
    x = rng.child(1).generator().standard_normal(input_dim)
    out = np.empty((n, n_units))
    chunk = 100_000
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        m = stop - start
        w1 = gen.standard_normal((m, input_dim, hidden_width))
        h1 = np.maximum(np.einsum("d,mdk->mk", x, w1), 0.0)
        w2 = gen.standard_normal((m, hidden_width, n_units))
        h2 = np.maximum(np.einsum("mk,mku->mu", h1, w2), 0.0)
        w3 = gen.standard_normal((m, n_units))
        out[start:stop] = w3 * h2
    return out
