"""Landscape features over processed designs.

Six feature sets, 45 features total, computed exclusively on the processed
(normalized) form of a design so that every feature is invariant to shifting
and scaling of the raw objective:

* ``ela_meta``   (9)  — goodness of fit and coefficient structure of linear and
  quadratic surrogate models, with and without pairwise interactions.
* ``ela_distr``  (3)  — skewness, excess kurtosis, and modality (kernel-density
  peak count) of the objective distribution.
* ``disp``       (16) — dispersion of the best-q fraction of the sample versus
  the full sample, as ratios and differences of mean/median pairwise distances.
* ``ic``         (5)  — information content of a seeded nearest-neighbor tour:
  entropy of consecutive slope-symbol pairs over an epsilon grid, plus the
  symbol-string complexity at epsilon zero.
* ``nbc``        (5)  — nearest-better clustering: statistics of
  nearest-neighbor versus nearest-better distances and the in-degree structure
  of the nearest-better digraph.
* ``fdc``        (7)  — fitness-distance correlation to the sample-best point
  and the moments feeding it.

Missing values never appear as NaN or infinity: a feature that is undefined on
the given sample is reported as an explicit missing entry with a reason code.

Estimator conventions: skewness and kurtosis use biased (population) moment
estimators; standard deviations and covariances elsewhere are sample
estimators (ddof=1); Pearson correlations of a constant vector are undefined
and reported missing.  The kernel-density peak count uses a Gaussian kernel
with Silverman's rule-of-thumb bandwidth 0.9 * min(sd, IQR/1.34) * n^(-1/5)
on a uniform grid over [0, 1]; a peak is a grid point strictly greater than
both neighbors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist

FEATURE_SET_VERSIONS = {
    "ela_meta": "1",
    "ela_distr": "1",
    "disp": "1",
    "ic": "1",
    "nbc": "1",
    "fdc": "1",
}

_DEFAULT_QUANTILES = (0.02, 0.05, 0.10, 0.25)


def _default_epsilon_grid() -> tuple[float, ...]:
    return tuple(float(x) for x in np.logspace(-5.0, 15.0, 1000))


@dataclass(frozen=True)
class ElaConfig:
    """Knobs for the feature computation.

    ``epsilon_grid`` holds the positive epsilon values for the information
    content scan (epsilon zero is always included in addition);
    ``settling_threshold`` is the entropy level below which the landscape
    counts as settled; ``kde_grid_points`` sets the density grid resolution
    for peak counting; ``dispersion_quantiles`` are the best-fraction levels.
    Only the Euclidean metric is supported.
    """

    dispersion_quantiles: tuple[float, ...] = _DEFAULT_QUANTILES
    epsilon_grid: tuple[float, ...] = field(default_factory=_default_epsilon_grid)
    settling_threshold: float = 0.05
    kde_grid_points: int = 512
    distance_metric: str = "euclidean"

    def __post_init__(self):
        object.__setattr__(self, "dispersion_quantiles", tuple(self.dispersion_quantiles))
        object.__setattr__(self, "epsilon_grid", tuple(self.epsilon_grid))
        if not self.dispersion_quantiles:
            raise ValueError("at least one dispersion quantile is required")
        for q in self.dispersion_quantiles:
            if not 0 < q < 1:
                raise ValueError("dispersion quantiles must lie in (0, 1)")
        if not self.epsilon_grid:
            raise ValueError("epsilon grid must be non-empty")
        grid = self.epsilon_grid
        if any(e <= 0 for e in grid):
            raise ValueError("epsilon grid values must be positive (zero is added internally)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("epsilon grid must be strictly increasing")
        if not 0 < self.settling_threshold < 1:
            raise ValueError("settling threshold must lie in (0, 1)")
        if self.kde_grid_points < 8:
            raise ValueError("kde grid needs at least 8 points")
        if self.distance_metric != "euclidean":
            raise ValueError("only the euclidean metric is supported")


@dataclass
class FeatureVector:
    """Ordered feature map with explicit missing entries.

    ``values`` maps feature name to a finite float or None; every None has a
    reason string in ``reasons``.  ``meta`` records the sample size, processed
    dimension, tour seed, and estimator conventions.
    """

    values: dict[str, float | None]
    reasons: dict[str, str]
    meta: dict

    def __post_init__(self):
        for name, v in self.values.items():
            if v is None:
                if name not in self.reasons:
                    raise ValueError(f"missing feature {name!r} has no reason")
            elif not math.isfinite(v):
                raise ValueError(f"feature {name!r} is not finite")

    def names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def __getitem__(self, name: str) -> float | None:
        return self.values[name]

    def to_obj(self) -> dict:
        out: dict = dict(self.values)
        out["_meta"] = dict(self.meta)
        out["_meta"]["missing_reasons"] = dict(self.reasons)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2, sort_keys=False)

    def to_csv(self) -> str:
        """Header line plus one value row; missing features are empty fields."""
        header = ",".join(self.values)
        row = ",".join("" if v is None else repr(float(v)) for v in self.values.values())
        return header + "\n" + row + "\n"


class _Emitter:
    """Collects feature values, routing non-finite or undefined results to
    explicit missing entries."""

    def __init__(self):
        self.values: dict[str, float | None] = {}
        self.reasons: dict[str, str] = {}

    def put(self, name: str, value, reason: str = "undefined") -> None:
        if value is None:
            self.values[name] = None
            self.reasons[name] = reason
            return
        value = float(value)
        if not math.isfinite(value):
            self.values[name] = None
            self.reasons[name] = "non_finite_result"
        else:
            self.values[name] = value

    def put_all_missing(self, names: list[str], reason: str) -> None:
        for name in names:
            self.put(name, None, reason)

    def merge(self, other: "_Emitter") -> None:
        self.values.update(other.values)
        self.reasons.update(other.reasons)


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    """Pearson correlation; None when either vector has zero variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    na = float(np.sqrt(np.dot(da, da)))
    nb = float(np.sqrt(np.dot(db, db)))
    if na == 0.0 or nb == 0.0:
        return None
    # mathematically |r| <= 1; rounding can overshoot by an ulp
    return min(1.0, max(-1.0, float(np.dot(da, db) / (na * nb))))


# ── surrogate-model fits ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class LeastSquaresFit:
    coefficients: np.ndarray
    intercept: float
    r2: float
    adjusted_r2: float
    rank_deficient: bool


def fit_least_squares(Z: np.ndarray, y: np.ndarray) -> LeastSquaresFit:
    """Ordinary least squares with intercept.

    Rank-deficient systems are solved in the minimum-norm sense and flagged.
    Adjusted R^2 = 1 - (1 - R^2)(n - 1)/(n - p - 1); a constant response gives
    R^2 = 0 with zero coefficients.  Requires n > p + 1.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = Z.shape
    if n <= p + 1:
        raise ValueError(f"need more rows than parameters: n={n}, p={p}")
    ybar = float(y.mean())
    sst = float(np.sum((y - ybar) ** 2))
    X = np.column_stack([np.ones(n), Z])
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    rank_deficient = rank < p + 1
    if sst == 0.0:
        adj = 1.0 - (n - 1) / (n - p - 1)
        return LeastSquaresFit(np.zeros(p), ybar, 0.0, adj, rank_deficient)
    ssr = float(np.sum((y - X @ beta) ** 2))
    r2 = 1.0 - ssr / sst
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)
    return LeastSquaresFit(beta[1:], float(beta[0]), r2, adj, rank_deficient)


def _interaction_terms(X: np.ndarray) -> np.ndarray:
    n, d = X.shape
    cols = [X[:, i] * X[:, j] for i in range(d) for j in range(i + 1, d)]
    return np.column_stack(cols) if cols else np.empty((n, 0))


def ela_meta(pd) -> _Emitter:
    """Surrogate-model features: four OLS fits on the processed sample."""
    out = _Emitter()
    X = pd.matrix
    y = pd.objective
    n, d = X.shape
    inter = _interaction_terms(X)
    designs = {
        "lin": X,
        "lin_int": np.column_stack([X, inter]) if inter.size else X,
        "quad": np.column_stack([X, X**2]),
        "quad_int": np.column_stack([X, X**2, inter]) if inter.size else np.column_stack([X, X**2]),
    }
    fits: dict[str, LeastSquaresFit | None] = {}
    for key, Z in designs.items():
        fits[key] = fit_least_squares(Z, y) if n > Z.shape[1] + 1 else None

    lin = fits["lin"]
    lin_names = [
        "ela_meta.lin_simple.adj_r2",
        "ela_meta.lin_simple.intercept",
        "ela_meta.lin_simple.coef.min",
        "ela_meta.lin_simple.coef.max",
        "ela_meta.lin_simple.coef.max_by_min",
    ]
    if lin is None:
        out.put_all_missing(lin_names, "insufficient_sample")
    else:
        out.put("ela_meta.lin_simple.adj_r2", lin.adjusted_r2)
        out.put("ela_meta.lin_simple.intercept", lin.intercept)
        mags = np.abs(lin.coefficients)
        cmin, cmax = float(mags.min()), float(mags.max())
        out.put("ela_meta.lin_simple.coef.min", cmin)
        out.put("ela_meta.lin_simple.coef.max", cmax)
        if cmin == 0.0:
            out.put("ela_meta.lin_simple.coef.max_by_min", None, "zero_coefficient")
        else:
            out.put("ela_meta.lin_simple.coef.max_by_min", cmax / cmin)

    li = fits["lin_int"]
    out.put(
        "ela_meta.lin_w_interact.adj_r2",
        None if li is None else li.adjusted_r2,
        "insufficient_sample",
    )

    quad = fits["quad"]
    if quad is None:
        out.put_all_missing(
            ["ela_meta.quad_simple.adj_r2", "ela_meta.quad_simple.cond"], "insufficient_sample"
        )
    else:
        out.put("ela_meta.quad_simple.adj_r2", quad.adjusted_r2)
        qmag = np.abs(quad.coefficients[d:])
        qmin, qmax = float(qmag.min()), float(qmag.max())
        if qmin == 0.0:
            out.put("ela_meta.quad_simple.cond", None, "zero_coefficient")
        else:
            out.put("ela_meta.quad_simple.cond", qmax / qmin)

    qi = fits["quad_int"]
    out.put(
        "ela_meta.quad_w_interact.adj_r2",
        None if qi is None else qi.adjusted_r2,
        "insufficient_sample",
    )
    return out


# ── objective-distribution features ──────────────────────────────────────────


def _kde_peak_count(y: np.ndarray, grid_points: int) -> int:
    n = y.size
    sd = float(np.sqrt(np.mean((y - y.mean()) ** 2)))
    iqr = float(np.quantile(y, 0.75) - np.quantile(y, 0.25))
    scale = sd if iqr == 0.0 else min(sd, iqr / 1.34)
    bandwidth = 0.9 * scale * n ** (-1 / 5)
    grid = np.linspace(0.0, 1.0, grid_points)
    z = (grid[:, None] - y[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (n * bandwidth * math.sqrt(2 * math.pi))
    interior = density[1:-1]
    peaks = (interior > density[:-2]) & (interior > density[2:])
    return int(np.count_nonzero(peaks))


def ela_distr(pd, cfg: ElaConfig | None = None) -> _Emitter:
    """Skewness, excess kurtosis (population estimators), and KDE peak count."""
    cfg = cfg or ElaConfig()
    out = _Emitter()
    y = pd.objective
    names = ["ela_distr.skewness", "ela_distr.kurtosis", "ela_distr.number_of_peaks"]
    if y.size < 4:
        out.put_all_missing(names, "insufficient_sample")
        return out
    centered = y - y.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        out.put("ela_distr.skewness", None, "zero_variance")
        out.put("ela_distr.kurtosis", None, "zero_variance")
        out.put("ela_distr.number_of_peaks", 1.0)
        return out
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    out.put("ela_distr.skewness", m3 / m2**1.5)
    out.put("ela_distr.kurtosis", m4 / m2**2 - 3.0)
    out.put("ela_distr.number_of_peaks", float(_kde_peak_count(y, cfg.kde_grid_points)))
    return out


# ── dispersion ───────────────────────────────────────────────────────────────


def _quantile_suffix(q: float) -> str:
    return f"{int(round(q * 100)):02d}"


def dispersion_feature_names(cfg: ElaConfig | None = None) -> list[str]:
    cfg = cfg or ElaConfig()
    names = []
    for q in cfg.dispersion_quantiles:
        s = _quantile_suffix(q)
        names += [
            f"disp.ratio_mean_{s}",
            f"disp.ratio_median_{s}",
            f"disp.diff_mean_{s}",
            f"disp.diff_median_{s}",
        ]
    return names


def dispersion(pd, cfg: ElaConfig | None = None) -> _Emitter:
    """Best-subset versus full-sample pairwise-distance statistics.

    For each quantile q the subset holds the ceil(q*n) rows with the smallest
    objective (ties broken by row index).  Ratios are subset/full and are
    undefined when the full-sample statistic is zero (all points identical);
    differences are subset - full.
    """
    cfg = cfg or ElaConfig()
    out = _Emitter()
    X = pd.matrix
    y = pd.objective
    n = X.shape[0]
    full = pdist(X)
    if full.size == 0:
        out.put_all_missing(dispersion_feature_names(cfg), "insufficient_sample")
        return out
    full_mean = float(full.mean())
    full_median = float(np.median(full))
    order = np.argsort(y, kind="stable")
    for q in cfg.dispersion_quantiles:
        s = _quantile_suffix(q)
        names = [
            f"disp.ratio_mean_{s}",
            f"disp.ratio_median_{s}",
            f"disp.diff_mean_{s}",
            f"disp.diff_median_{s}",
        ]
        size = math.ceil(q * n)
        if size < 2:
            out.put_all_missing(names, "subset_too_small")
            continue
        sub = pdist(X[order[:size]])
        sub_mean = float(sub.mean())
        sub_median = float(np.median(sub))
        if full_mean == 0.0:
            out.put(names[0], None, "zero_distances")
        else:
            out.put(names[0], sub_mean / full_mean)
        if full_median == 0.0:
            out.put(names[1], None, "zero_distances")
        else:
            out.put(names[1], sub_median / full_median)
        out.put(names[2], sub_mean - full_mean)
        out.put(names[3], sub_median - full_median)
    return out


# ── information content ──────────────────────────────────────────────────────


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order sorted lexicographically by coordinates, then objective.

    The tour below starts from this canonical order, so the resulting
    features do not depend on how the design rows happened to be arranged.
    """
    keys = (y,) + tuple(X[:, c] for c in reversed(range(X.shape[1])))
    return np.lexsort(keys)


def _greedy_tour(X: np.ndarray, seed: int) -> np.ndarray:
    """Seeded random-start nearest-neighbor tour visiting every point once;
    distance ties go to the lowest row index."""
    n = X.shape[0]
    dm = cdist(X, X)
    rng = np.random.default_rng(seed)
    start = int(rng.integers(n))
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=int)
    order[0] = start
    visited[start] = True
    current = start
    for step in range(1, n):
        row = dm[current].copy()
        row[visited] = np.inf
        current = int(np.argmin(row))
        order[step] = current
        visited[current] = True
    return order


class _RunCounter:
    """Number of maximal equal-value blocks in a sign sequence under element
    deletion, maintained via a doubly linked list in O(1) per deletion."""

    def __init__(self, signs: np.ndarray, alive: np.ndarray):
        self.sign = signs
        idx = [i for i in range(len(signs)) if alive[i]]
        self.left = {}
        self.right = {}
        prev = None
        runs = 0
        last_sign = None
        for i in idx:
            self.left[i] = prev
            if prev is not None:
                self.right[prev] = i
            prev = i
            if last_sign is None or signs[i] != last_sign:
                runs += 1
            last_sign = signs[i]
        if prev is not None:
            self.right[prev] = None
        self.runs = runs

    def remove(self, i: int) -> None:
        l = self.left.pop(i)
        r = self.right.pop(i)
        if l is not None:
            self.right[l] = r
        if r is not None:
            self.left[r] = l
        x = self.sign[i]
        left_same = l is not None and self.sign[l] == x
        right_same = r is not None and self.sign[r] == x
        if not left_same and not right_same:
            self.runs -= 1
            if l is not None and r is not None and self.sign[l] == self.sign[r]:
                self.runs -= 1


_PAIR_LOG_BASE = math.log(6.0)


def _entropy_from_counts(counts: np.ndarray, total: int) -> float:
    """-sum over unequal symbol pairs of p * log6 p."""
    if total == 0:
        return 0.0
    h = 0.0
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            c = counts[a, b]
            if c > 0:
                p = c / total
                h -= p * math.log(p) / _PAIR_LOG_BASE
    return h


def information_content(pd, cfg: ElaConfig | None = None, seed: int = 0) -> _Emitter:
    """Information content of the slope-sign sequence along a seeded tour.

    Rows are first sorted canonically (lexicographically by coordinates, then
    objective) so the tour — and with it every emitted feature — is identical
    no matter how the design rows were ordered.  Consecutive tour steps yield
    slopes phi = (y_next - y_prev) / ||x_next - x_prev|| (zero-length steps
    are skipped); at level epsilon each slope maps to a symbol sign(phi) if
    |phi| > epsilon else 0.  H(eps) is the entropy
    (base 6) of unequal consecutive symbol pairs; M(eps) is the length of the
    symbol string after deleting zeros and collapsing repeats, divided by
    n - 1.  Emitted features:

    * ``ic.h.max``     — max of H over the grid (epsilon zero included),
    * ``ic.eps.s``     — log10 of the smallest positive epsilon with H below
      the settling threshold,
    * ``ic.eps.max``   — log10 of the epsilon attaining the maximum of H
      (smallest such epsilon; missing when that is epsilon zero),
    * ``ic.eps.ratio`` — log10 of the smallest positive epsilon at which M
      has decayed to half its epsilon-zero value,
    * ``ic.m0``        — M at epsilon zero.

    The scan is computed incrementally: slopes are deleted in order of |phi|,
    with pair counts and run counts updated in O(1) per deletion.
    """
    cfg = cfg or ElaConfig()
    out = _Emitter()
    names = ["ic.h.max", "ic.eps.s", "ic.eps.max", "ic.eps.ratio", "ic.m0"]
    canon = _canonical_order(pd.matrix, pd.objective)
    X = pd.matrix[canon]
    y = pd.objective[canon]
    n = X.shape[0]
    if n < 3:
        out.put_all_missing(names, "insufficient_sample")
        return out
    tour = _greedy_tour(X, seed)
    steps = np.diff(X[tour], axis=0)
    lengths = np.sqrt((steps**2).sum(axis=1))
    dy = np.diff(y[tour])
    keep = lengths > 0.0
    if not np.any(keep):
        out.put_all_missing(names, "duplicate_points")
        return out
    phi = dy[keep] / lengths[keep]
    m = phi.size
    signs = np.sign(phi).astype(int)
    mags = np.abs(phi)

    # symbol state at epsilon zero: sign(phi), zeros where phi == 0
    symbols = signs.copy()
    symbols[mags == 0.0] = 0
    pair_total = m - 1
    counts = np.zeros((3, 3), dtype=int)
    for a, b in zip(symbols[:-1], symbols[1:]):
        counts[a + 1, b + 1] += 1
    runs = _RunCounter(signs, mags > 0.0)

    # deletion events sorted by |phi| ascending; ties in index order
    event_order = np.argsort(mags, kind="stable")
    events = [(mags[i], int(i)) for i in event_order if mags[i] > 0.0]

    grid = (0.0,) + cfg.epsilon_grid
    h_values = np.empty(len(grid))
    m_values = np.empty(len(grid))
    ev = 0
    for gi, eps in enumerate(grid):
        while ev < len(events) and events[ev][0] <= eps:
            i = events[ev][1]
            old = symbols[i]
            if old != 0:
                if i > 0:
                    counts[symbols[i - 1] + 1, old + 1] -= 1
                    counts[symbols[i - 1] + 1, 1] += 1
                if i < m - 1:
                    counts[old + 1, symbols[i + 1] + 1] -= 1
                    counts[1, symbols[i + 1] + 1] += 1
                symbols[i] = 0
                runs.remove(i)
            ev += 1
        h_values[gi] = _entropy_from_counts(counts, pair_total)
        m_values[gi] = runs.runs / (n - 1)

    h_max = float(h_values.max())
    out.put("ic.h.max", h_max)
    m0 = float(m_values[0])
    out.put("ic.m0", m0)

    positive = np.asarray(grid[1:])
    h_pos = h_values[1:]
    m_pos = m_values[1:]

    settled = np.nonzero(h_pos < cfg.settling_threshold)[0]
    if settled.size == 0:
        out.put("ic.eps.s", None, "never_settles")
    else:
        out.put("ic.eps.s", math.log10(positive[settled[0]]))

    argmax = int(np.argmax(h_values))  # first maximum over the full grid
    if argmax == 0:
        out.put("ic.eps.max", None, "maximum_at_zero")
    else:
        out.put("ic.eps.max", math.log10(grid[argmax]))

    half = np.nonzero(m_pos <= m0 / 2.0)[0]
    if half.size == 0:
        out.put("ic.eps.ratio", None, "no_half_decay")
    else:
        out.put("ic.eps.ratio", math.log10(positive[half[0]]))
    return out


def ic_scan(pd, cfg: ElaConfig | None = None, seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The (epsilon, H, M) arrays behind the information-content features,
    epsilon zero first.  Exposed for diagnostics and testing."""
    cfg = cfg or ElaConfig()
    canon = _canonical_order(pd.matrix, pd.objective)
    X = pd.matrix[canon]
    y = pd.objective[canon]
    n = X.shape[0]
    tour = _greedy_tour(X, seed)
    steps = np.diff(X[tour], axis=0)
    lengths = np.sqrt((steps**2).sum(axis=1))
    dy = np.diff(y[tour])
    keep = lengths > 0.0
    phi = dy[keep] / lengths[keep]
    grid = np.array((0.0,) + cfg.epsilon_grid)
    h = np.empty(grid.size)
    mvals = np.empty(grid.size)
    for gi, eps in enumerate(grid):
        symbols = np.where(np.abs(phi) > eps, np.sign(phi), 0.0).astype(int)
        counts = np.zeros((3, 3), dtype=int)
        for a, b in zip(symbols[:-1], symbols[1:]):
            counts[a + 1, b + 1] += 1
        h[gi] = _entropy_from_counts(counts, symbols.size - 1)
        nz = symbols[symbols != 0]
        if nz.size == 0:
            runs = 0
        else:
            runs = 1 + int(np.count_nonzero(nz[1:] != nz[:-1]))
        mvals[gi] = runs / (n - 1)
    return grid, h, mvals


# ── nearest-better clustering ────────────────────────────────────────────────


def nearest_better_clustering(pd) -> _Emitter:
    """Nearest-neighbor versus nearest-better distance structure.

    "Better" is strict on the objective with ties broken by row index, so
    every point except the sample best has a non-empty better set.  The sample
    best is excluded from the ratio statistics; the in-degree correlation uses
    all points.
    """
    out = _Emitter()
    names = [
        "nbc.nn_nb.mean_ratio",
        "nbc.nn_nb.sd_ratio",
        "nbc.nn_nb.cor",
        "nbc.dist_ratio.coeff_var",
        "nbc.nb_fitness.cor",
    ]
    X = pd.matrix
    y = pd.objective
    n = X.shape[0]
    if n < 3:
        out.put_all_missing(names, "insufficient_sample")
        return out
    if float(y.min()) == float(y.max()):
        out.put_all_missing(names, "constant_objective")
        return out
    dm = cdist(X, X)
    np.fill_diagonal(dm, np.inf)
    dnn = dm.min(axis=1)

    order = np.argsort(y, kind="stable")
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    better = rank[None, :] < rank[:, None]
    masked = np.where(better, dm, np.inf)
    dnb = masked.min(axis=1)
    nb_target = masked.argmin(axis=1)

    nonbest = rank > 0
    dnn_nb = dnn[nonbest]
    dnb_nb = dnb[nonbest]

    mean_nb = float(dnb_nb.mean())
    if mean_nb == 0.0:
        out.put("nbc.nn_nb.mean_ratio", None, "zero_distances")
    else:
        out.put("nbc.nn_nb.mean_ratio", float(dnn_nb.mean()) / mean_nb)

    sd_nn = float(np.std(dnn_nb, ddof=1)) if dnn_nb.size > 1 else 0.0
    sd_nb = float(np.std(dnb_nb, ddof=1)) if dnb_nb.size > 1 else 0.0
    if sd_nb == 0.0:
        out.put("nbc.nn_nb.sd_ratio", None, "zero_variance")
    else:
        out.put("nbc.nn_nb.sd_ratio", sd_nn / sd_nb)

    cor = _pearson(dnn_nb, dnb_nb)
    out.put("nbc.nn_nb.cor", cor, "zero_variance")

    if np.any(dnn_nb == 0.0):
        out.put("nbc.dist_ratio.coeff_var", None, "duplicate_points")
    else:
        ratio = dnb_nb / dnn_nb
        rmean = float(ratio.mean())
        if rmean == 0.0:
            out.put("nbc.dist_ratio.coeff_var", None, "zero_mean")
        else:
            out.put("nbc.dist_ratio.coeff_var", float(np.std(ratio, ddof=1)) / rmean)

    indegree = np.bincount(nb_target[nonbest], minlength=n).astype(float)
    out.put("nbc.nb_fitness.cor", _pearson(y, indegree), "zero_variance")
    return out


# ── fitness-distance correlation ─────────────────────────────────────────────


def fitness_distance_correlation(pd) -> _Emitter:
    """Correlation between objective value and distance to the sample best."""
    out = _Emitter()
    names = [
        "fdc.coef",
        "fdc.dist.mean",
        "fdc.dist.sd",
        "fdc.dist.max",
        "fdc.fitness.mean",
        "fdc.fitness.sd",
        "fdc.cov",
    ]
    X = pd.matrix
    y = pd.objective
    n = X.shape[0]
    if n < 3:
        out.put_all_missing(names, "insufficient_sample")
        return out
    best = int(np.argmin(y))  # ties: lowest row index
    d = np.sqrt(((X - X[best]) ** 2).sum(axis=1))
    out.put("fdc.coef", _pearson(y, d), "zero_variance")
    out.put("fdc.dist.mean", float(d.mean()))
    out.put("fdc.dist.sd", float(np.std(d, ddof=1)))
    out.put("fdc.dist.max", float(d.max()))
    out.put("fdc.fitness.mean", float(y.mean()))
    out.put("fdc.fitness.sd", float(np.std(y, ddof=1)))
    dy = y - y.mean()
    dd = d - d.mean()
    out.put("fdc.cov", float(np.dot(dy, dd) / (n - 1)))
    return out


# ── the full vector ──────────────────────────────────────────────────────────


def feature_names(cfg: ElaConfig | None = None) -> list[str]:
    """Canonical feature order: ela_meta, ela_distr, disp, ic, nbc, fdc."""
    cfg = cfg or ElaConfig()
    return (
        [
            "ela_meta.lin_simple.adj_r2",
            "ela_meta.lin_simple.intercept",
            "ela_meta.lin_simple.coef.min",
            "ela_meta.lin_simple.coef.max",
            "ela_meta.lin_simple.coef.max_by_min",
            "ela_meta.lin_w_interact.adj_r2",
            "ela_meta.quad_simple.adj_r2",
            "ela_meta.quad_simple.cond",
            "ela_meta.quad_w_interact.adj_r2",
            "ela_distr.skewness",
            "ela_distr.kurtosis",
            "ela_distr.number_of_peaks",
        ]
        + dispersion_feature_names(cfg)
        + [
            "ic.h.max",
            "ic.eps.s",
            "ic.eps.max",
            "ic.eps.ratio",
            "ic.m0",
            "nbc.nn_nb.mean_ratio",
            "nbc.nn_nb.sd_ratio",
            "nbc.nn_nb.cor",
            "nbc.dist_ratio.coeff_var",
            "nbc.nb_fitness.cor",
            "fdc.coef",
            "fdc.dist.mean",
            "fdc.dist.sd",
            "fdc.dist.max",
            "fdc.fitness.mean",
            "fdc.fitness.sd",
            "fdc.cov",
        ]
    )


def compute_all(pd, cfg: ElaConfig | None = None, seed: int = 0) -> FeatureVector:
    """All feature sets on one processed design, in canonical order.

    Deterministic given (pd, cfg, seed); the seed steers only the
    information-content tour.
    """
    cfg = cfg or ElaConfig()
    if not pd.decision_normalized:
        raise ValueError("features require a decision-normalized processed design")
    merged = _Emitter()
    merged.merge(ela_meta(pd))
    merged.merge(ela_distr(pd, cfg))
    merged.merge(dispersion(pd, cfg))
    merged.merge(information_content(pd, cfg, seed))
    merged.merge(nearest_better_clustering(pd))
    merged.merge(fitness_distance_correlation(pd))
    ordered = feature_names(cfg)
    values = {name: merged.values[name] for name in ordered}
    reasons = {name: merged.reasons[name] for name in ordered if name in merged.reasons}
    meta = {
        "n": pd.n,
        "dimension": pd.width,
        "seed": seed,
        "encoding": pd.encoding,
        "set_versions": dict(FEATURE_SET_VERSIONS),
        "estimators": {
            "moments": "population",
            "sd": "sample (ddof=1)",
            "bandwidth": "silverman rule of thumb",
        },
    }
    return FeatureVector(values=values, reasons=reasons, meta=meta)


def features_to_json(fv: FeatureVector) -> str:
    return fv.to_json()


def features_to_csv(fv: FeatureVector) -> str:
    return fv.to_csv()
