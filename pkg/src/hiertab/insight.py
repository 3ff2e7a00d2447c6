"""Single-block insight detectors and multi-block composition.

Twelve single-block detectors (point, shape, compound) plus name-based and
topology-based related-block recommendation and the two multi-block
patterns. Detectors are pure and deterministic: identical inputs yield
identical records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from . import stats
from .table import Block, Path, TableState, block_for

KIND_OUTLIER = "outlier"
KIND_DOMINANCE = "dominance"
KIND_TOP_TWO = "top_two"
KIND_OUTSTANDING_NEGATIVE = "outstanding_negative"
KIND_TREND = "trend"
KIND_CHANGE_POINT = "change_point"
KIND_EVENNESS = "evenness"
KIND_SKEWNESS = "skewness"
KIND_KURTOSIS = "kurtosis"
KIND_DEPENDENCE = "dependence"
KIND_CORRELATION = "correlation"
KIND_CROSS_MEASURE = "cross_measure"

SINGLE_BLOCK_KINDS: list[str] = [
    KIND_OUTLIER,
    KIND_DOMINANCE,
    KIND_TOP_TWO,
    KIND_OUTSTANDING_NEGATIVE,
    KIND_TREND,
    KIND_CHANGE_POINT,
    KIND_EVENNESS,
    KIND_SKEWNESS,
    KIND_KURTOSIS,
    KIND_DEPENDENCE,
    KIND_CORRELATION,
    KIND_CROSS_MEASURE,
]

PATTERN_ALL_SAME = "all_same"
PATTERN_ONE_DIFFERS = "one_differs"

CHART_TAGS: dict[str, list[str]] = {
    KIND_OUTLIER: ["box", "bar"],
    KIND_DOMINANCE: ["pie", "radial"],
    KIND_TOP_TWO: ["pie", "radial"],
    KIND_OUTSTANDING_NEGATIVE: ["bar"],
    KIND_TREND: ["line", "horizon"],
    KIND_CHANGE_POINT: ["line", "horizon"],
    KIND_EVENNESS: ["bar"],
    KIND_SKEWNESS: ["density"],
    KIND_KURTOSIS: ["density"],
    KIND_DEPENDENCE: ["stacked-bar-normalized"],
    KIND_CORRELATION: ["multi-line"],
    KIND_CROSS_MEASURE: ["scatter"],
}


class DetectorError(ValueError):
    """A detector's preconditions are not met for the given data."""


@dataclass(frozen=True)
class DetectorConfig:
    """Detection thresholds. The config file can override any of these."""

    iqr_factor: float = 3.0
    powerlaw_z: float = 3.0
    dominance_share: float = 0.5
    top_two_share: float = 0.34
    negative_gap_sigmas: float = 3.0
    trend_fire: float = 0.7
    p_significant: float = 0.05
    cv_max: float = 0.1
    skewness_abs: float = 2.0
    kurtosis_min: float = 6.0
    rho_abs: float = 0.8
    min_expected_count: float = 5.0


DEFAULT_CONFIG = DetectorConfig()


@dataclass(frozen=True)
class InsightRecord:
    kind: str
    block: Block | tuple[Block, ...]
    score: float
    params: dict[str, Any] = field(default_factory=dict)
    chart: str = ""
    provenance: str = "agent"
    id: Optional[str] = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")

    def with_id(self, record_id: str) -> "InsightRecord":
        return replace(self, id=record_id)


@dataclass(frozen=True)
class BlockRelation:
    mechanism: str  # "name-based" | "topology-based"
    anchor: Block
    related: tuple[Block, ...]
    shared_side: str  # side of the entry shared with the anchor


def _as_array(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.ndim != 1:
        raise DetectorError("expected a 1-D sequence")
    if np.any(np.isnan(arr)):
        raise DetectorError("sequence contains missing values")
    return arr


def _record(kind: str, score: float, params: dict[str, Any]) -> InsightRecord:
    return InsightRecord(
        kind=kind,
        block=_PLACEHOLDER_BLOCK,
        score=float(min(max(score, 0.0), 1.0)),
        params=params,
        chart=CHART_TAGS[kind][0],
    )


_PLACEHOLDER_BLOCK = Block(row_entry=(), col_entry=(), rows=(0, 0), cols=(0, 0))


def detect_outlier(
    values: Sequence[float], method: str = "iqr", config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Points far outside the interquartile fences, or far off a fitted
    power law."""
    arr = _as_array(values)
    if method == "iqr":
        if len(arr) < 5:
            raise DetectorError("iqr outlier needs >=5 values")
        q1 = stats.quantile_r7(arr, 0.25)
        q3 = stats.quantile_r7(arr, 0.75)
        iqr = q3 - q1
        lo = q1 - config.iqr_factor * iqr
        hi = q3 + config.iqr_factor * iqr
        idx = [i for i, v in enumerate(arr) if v < lo or v > hi]
        if not idx:
            return None
        exceed = max(max(v - hi, lo - v) for v in arr[idx])
        score = 1.0 if iqr == 0.0 else min(1.0, exceed / (config.iqr_factor * iqr))
        return _record(
            KIND_OUTLIER,
            score,
            {"method": "iqr", "indices": idx, "q1": q1, "q3": q3,
             "lower": lo, "upper": hi},
        )
    if method == "powerlaw":
        if len(arr) < 6:
            raise DetectorError("powerlaw outlier needs >=6 values")
        if np.any(arr <= 0):
            raise DetectorError("powerlaw outlier needs positive values")
        order = np.argsort(-arr, kind="stable")
        log_rank = np.log(np.arange(1, len(arr) + 1, dtype=np.float64))
        log_val = np.log(arr[order])
        slope, _, _ = _fit_line(log_rank, log_val)
        intercept = float(np.mean(log_val) - slope * np.mean(log_rank))
        residuals = log_val - (intercept + slope * log_rank)
        # leave-one-out z so a single spike cannot hide inside its own sigma
        best_i, best_z = -1, -1.0
        for i in range(len(arr)):
            rest = np.delete(residuals, i)
            sigma = stats.pop_std(rest)
            z = math.inf if sigma == 0.0 else abs(residuals[i]) / sigma
            if z > best_z:
                best_i, best_z = i, z
        if best_z < config.powerlaw_z:
            return None
        p = 1.0 if math.isinf(best_z) else 2.0 * stats.normal_sf(best_z)
        score = 1.0 if math.isinf(best_z) else 1.0 - p
        return _record(
            KIND_OUTLIER,
            score,
            {"method": "powerlaw", "indices": [int(order[best_i])],
             "z": None if math.isinf(best_z) else best_z, "slope": slope},
        )
    raise ValueError(f"unknown outlier method {method!r}")


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    sxx = float(np.sum((x - x.mean()) ** 2))
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    syy = float(np.sum((y - y.mean()) ** 2))
    slope = sxy / sxx
    r2 = 0.0 if syy == 0.0 else (sxy * sxy) / (sxx * syy)
    return slope, r2, syy


def _shares(values: Sequence[float]) -> np.ndarray:
    arr = _as_array(values)
    if len(arr) < 3:
        raise DetectorError("share detectors need >=3 values")
    if np.any(arr < 0):
        raise DetectorError("share detectors need non-negative values")
    total = float(arr.sum())
    if total <= 0:
        raise DetectorError("values sum to zero")
    return arr / total


def detect_dominance(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """One value holds at least half of the total (boundary inclusive)."""
    shares = _shares(values)
    winner = int(np.argmax(shares))
    share = float(shares[winner])
    if share < config.dominance_share:
        return None
    return _record(KIND_DOMINANCE, share, {"index": winner, "share": share})


def detect_top_two(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """The two largest shares both clear the threshold (inclusive)."""
    shares = _shares(values)
    order = np.argsort(-shares, kind="stable")
    first, second = int(order[0]), int(order[1])
    s1, s2 = float(shares[first]), float(shares[second])
    if s2 < config.top_two_share:
        return None
    return _record(
        KIND_TOP_TWO,
        min(1.0, s1 + s2),
        {"indices": [first, second], "shares": [s1, s2]},
    )


def detect_outstanding_negative(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """The most negative value sits far below everything else."""
    arr = _as_array(values)
    if len(arr) < 4:
        raise DetectorError("outstanding negative needs >=4 values")
    min_i = int(np.argmin(arr))
    minimum = float(arr[min_i])
    if minimum >= 0:
        return None
    rest = np.delete(arr, min_i)
    gap = float(rest.min() - minimum)
    sigma = stats.pop_std(rest)
    if gap <= config.negative_gap_sigmas * sigma:
        return None
    score = 1.0 if sigma == 0.0 else min(1.0, gap / (2 * config.negative_gap_sigmas * sigma))
    return _record(
        KIND_OUTSTANDING_NEGATIVE,
        score,
        {"index": min_i, "gap": gap, "sigma_rest": sigma},
    )


def detect_trend(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Consistent upward or downward movement: score = r^2 * (1 - p)."""
    arr = _as_array(values)
    if len(arr) < 4:
        raise DetectorError("trend needs >=4 values")
    slope, r2, p = stats.ols_trend(arr)
    score = r2 * (1.0 - p)
    if score < config.trend_fire:
        return None
    return _record(
        KIND_TREND,
        score,
        {"direction": "up" if slope >= 0 else "down", "r2": r2, "p": p},
    )


def detect_change_point(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Single split maximizing the Welch t statistic between prefix and
    suffix."""
    arr = _as_array(values)
    n = len(arr)
    if n < 6:
        raise DetectorError("change point needs >=6 values")
    best_k, best_t, best_p = -1, -1.0, 1.0
    for k in range(2, n - 1):
        t, p = stats.welch_t(arr[:k], arr[k:])
        abs_t = abs(t)
        if abs_t > best_t:
            best_k, best_t, best_p = k, abs_t, p
    if best_p >= config.p_significant:
        return None
    return _record(
        KIND_CHANGE_POINT, 1.0 - best_p, {"index": best_k, "p": best_p}
    )


def detect_evenness(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Low coefficient of variation sigma/mu."""
    arr = _as_array(values)
    if len(arr) < 3:
        raise DetectorError("evenness needs >=3 values")
    mu = float(np.mean(arr))
    if mu == 0.0:
        raise DetectorError("undefined coefficient of variation (zero mean)")
    cv = stats.pop_std(arr) / abs(mu)
    if cv > config.cv_max:
        return None
    return _record(KIND_EVENNESS, 1.0 - cv / config.cv_max, {"cv": cv})


def detect_skewness(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Population third-moment asymmetry."""
    arr = _as_array(values)
    if len(arr) < 5:
        raise DetectorError("skewness needs >=5 values")
    if stats.pop_std(arr) == 0.0:
        raise DetectorError("skewness undefined for zero variance")
    k1 = stats.skewness(arr)
    if abs(k1) < config.skewness_abs:
        return None
    return _record(
        KIND_SKEWNESS, min(1.0, abs(k1) / (2 * config.skewness_abs)), {"kappa1": k1}
    )


def detect_kurtosis(
    values: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Population fourth-moment peakedness (non-excess form)."""
    arr = _as_array(values)
    if len(arr) < 5:
        raise DetectorError("kurtosis needs >=5 values")
    if stats.pop_std(arr) == 0.0:
        raise DetectorError("kurtosis undefined for zero variance")
    k2 = stats.kurtosis(arr)
    if k2 < config.kurtosis_min:
        return None
    return _record(
        KIND_KURTOSIS, min(1.0, k2 / (2 * config.kurtosis_min)), {"kappa2": k2}
    )


def detect_dependence(
    block: np.ndarray, config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Chi-square independence test treating rows and columns as
    categoricals."""
    mat = np.asarray(block, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 2 or mat.shape[1] < 2:
        raise DetectorError("dependence needs a matrix of at least 2x2")
    if np.any(np.isnan(mat)):
        raise DetectorError("dependence needs a complete matrix")
    if np.any(mat < 0):
        raise DetectorError("dependence needs non-negative entries")
    statistic, p, expected = stats.chi2_independence(mat)
    if np.any(expected < config.min_expected_count):
        raise DetectorError(
            f"expected counts below {config.min_expected_count}"
        )
    if p >= config.p_significant:
        return None
    return _record(KIND_DEPENDENCE, 1.0 - p, {"statistic": statistic, "p": p})


def detect_correlation(
    block: np.ndarray, config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Most row pairs significantly correlated."""
    mat = np.asarray(block, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 2 or mat.shape[1] < 4:
        raise DetectorError("correlation needs >=2 rows and >=4 columns")
    if np.any(np.isnan(mat)):
        raise DetectorError("correlation needs a complete matrix")
    pairs: list[dict[str, Any]] = []
    n_cols = mat.shape[1]
    for i in range(mat.shape[0]):
        for j in range(i + 1, mat.shape[0]):
            if stats.pop_std(mat[i]) == 0.0 or stats.pop_std(mat[j]) == 0.0:
                continue
            rho = stats.pearson_r(mat[i], mat[j])
            p = stats.pearson_p(rho, n_cols)
            pairs.append({"rows": [i, j], "rho": rho, "p": p})
    if not pairs:
        return None
    frac = sum(1 for pr in pairs if pr["p"] < config.p_significant) / len(pairs)
    if frac <= 0.5:
        return None
    return _record(KIND_CORRELATION, frac, {"pairs": pairs, "fraction": frac})


def detect_cross_measure(
    x: Sequence[float], y: Sequence[float], config: DetectorConfig = DEFAULT_CONFIG
) -> Optional[InsightRecord]:
    """Two measures with high-magnitude Pearson correlation."""
    ax, ay = _as_array(x), _as_array(y)
    if len(ax) != len(ay):
        raise DetectorError("cross-measure needs equal lengths")
    if len(ax) < 4:
        raise DetectorError("cross-measure needs >=4 values")
    if stats.pop_std(ax) == 0.0 or stats.pop_std(ay) == 0.0:
        raise DetectorError("cross-measure needs non-constant measures")
    rho = stats.pearson_r(ax, ay)
    if abs(rho) < config.rho_abs:
        return None
    return _record(KIND_CROSS_MEASURE, abs(rho), {"rho": rho})


_KIND_ORDER = {kind: i for i, kind in enumerate(SINGLE_BLOCK_KINDS)}


def detect_all(
    state: TableState,
    block: Block,
    config: DetectorConfig = DEFAULT_CONFIG,
) -> list[InsightRecord]:
    """Run every applicable detector on a block, best score first.

    Sequence detectors apply to single-row/single-column blocks; the
    compound matrix detectors apply to 2-D blocks. If a trend fires at or
    above the trend threshold, the change-point detector is suppressed on
    the same block to avoid double-counting one pattern.
    """
    sub = state.grid.values[
        block.rows[0]:block.rows[1], block.cols[0]:block.cols[1]
    ]
    if sub.size == 0 or np.all(np.isnan(sub)):
        raise DetectorError("empty block")
    h, w = sub.shape
    records: list[InsightRecord] = []

    def run(fn, *args) -> Optional[InsightRecord]:
        try:
            return fn(*args)
        except DetectorError:
            return None

    if h == 1 or w == 1:
        seq = sub.reshape(-1)
        seq = seq[~np.isnan(seq)]
        outlier_candidates = [
            run(detect_outlier, seq, "iqr", config),
            run(detect_outlier, seq, "powerlaw", config),
        ]
        outliers = [r for r in outlier_candidates if r is not None]
        if outliers:
            records.append(max(outliers, key=lambda r: r.score))
        for fn in (
            detect_dominance,
            detect_top_two,
            detect_outstanding_negative,
            detect_trend,
        ):
            rec = run(fn, seq, config)
            if rec is not None:
                records.append(rec)
        trend_fired = any(r.kind == KIND_TREND for r in records)
        if not trend_fired:
            rec = run(detect_change_point, seq, config)
            if rec is not None:
                records.append(rec)
        for fn in (detect_evenness, detect_skewness, detect_kurtosis):
            rec = run(fn, seq, config)
            if rec is not None:
                records.append(rec)
    else:
        for rec in (
            run(detect_dependence, sub, config),
            run(detect_correlation, sub, config),
        ):
            if rec is not None:
                records.append(rec)
        if h == 2 and not np.any(np.isnan(sub)):
            rec = run(detect_cross_measure, sub[0], sub[1], config)
            if rec is not None:
                records.append(rec)
        elif w == 2 and not np.any(np.isnan(sub)):
            rec = run(detect_cross_measure, sub[:, 0], sub[:, 1], config)
            if rec is not None:
                records.append(rec)

    records = [replace(r, block=block) for r in records]
    records.sort(key=lambda r: (-r.score, _KIND_ORDER[r.kind]))
    return records


def _same_shape(a: Block, b: Block) -> bool:
    return a.shape == b.shape


def recommend_blocks(state: TableState, anchor: Block) -> list[BlockRelation]:
    """Related blocks sharing one entry with the anchor.

    Name-based: the varying entry's label appears elsewhere at the same
    depth. Topology-based: siblings of the varying entry, and the varying
    entry's child set. Only identically-shaped block lists are emitted.
    """
    relations: list[BlockRelation] = []
    sides = (
        ("col", state.col_tree, anchor.col_entry, anchor.row_entry),
        ("row", state.row_tree, anchor.row_entry, anchor.col_entry),
    )
    for varying_side, tree, varying_path, fixed_path in sides:
        shared_side = "row" if varying_side == "col" else "col"
        node = tree.find(varying_path)
        if node is None:
            continue

        def make_block(path: Path) -> Block:
            if varying_side == "col":
                return block_for(state, fixed_path, path)
            return block_for(state, path, fixed_path)

        name_matches = [
            n for n in tree.iter_nodes()
            if n.depth == node.depth
            and n.label == node.label
            and n.path != node.path
        ]
        named = [
            make_block(n.path) for n in name_matches
        ]
        named = [b for b in named if _same_shape(b, anchor)]
        if named:
            relations.append(
                BlockRelation("name-based", anchor, tuple(named), shared_side)
            )

        if node.depth > 0:
            parent = tree.find(varying_path[:-1])
        else:
            parent = tree.root
        if parent is not None:
            siblings = [
                make_block(c.path) for c in parent.children if c.path != node.path
            ]
            siblings = [b for b in siblings if _same_shape(b, anchor)]
            if siblings:
                relations.append(
                    BlockRelation(
                        "topology-based", anchor, tuple(siblings), shared_side
                    )
                )
        if node.children:
            children = [make_block(c.path) for c in node.children]
            shapes = {b.shape for b in children}
            if len(children) >= 2 and len(shapes) == 1:
                relations.append(
                    BlockRelation(
                        "topology-based",
                        anchor,
                        tuple(children),
                        shared_side,
                    )
                )
    return relations


def compose_multiblock(
    relation: BlockRelation,
    per_block_insights: Sequence[Sequence[InsightRecord]],
) -> Optional[InsightRecord]:
    """Compose a multi-block pattern from single-block detections.

    ``per_block_insights`` pairs with [anchor] + related. Pattern
    "all_same": every block fires one shared kind. Pattern "one_differs":
    exactly one block lacks a kind all other blocks fire.
    """
    blocks = (relation.anchor,) + relation.related
    if len(blocks) < 2:
        raise ValueError("need at least 2 related blocks")
    if len(per_block_insights) != len(blocks):
        raise ValueError("insight list count must match block count")
    if len({b.shape for b in blocks}) != 1:
        raise ValueError("related blocks must share one shape")

    kind_sets = [
        {r.kind for r in insights} for insights in per_block_insights
    ]
    scores_by_kind: list[dict[str, float]] = [
        {r.kind: r.score for r in insights} for insights in per_block_insights
    ]

    common = set.intersection(*kind_sets) if kind_sets else set()
    common = {k for k in common if k in _KIND_ORDER}
    if common:
        kind = max(
            common,
            key=lambda k: (
                sum(s.get(k, 0.0) for s in scores_by_kind),
                -_KIND_ORDER[k],
            ),
        )
        score = sum(s[kind] for s in scores_by_kind) / len(blocks)
        return InsightRecord(
            kind=PATTERN_ALL_SAME,
            block=blocks,
            score=min(1.0, score),
            params={"sharedKind": kind},
            chart=CHART_TAGS[kind][0],
        )

    candidates: list[tuple[str, int]] = []
    for kind in SINGLE_BLOCK_KINDS:
        missing = [i for i, ks in enumerate(kind_sets) if kind not in ks]
        if len(missing) == 1 and len(blocks) >= 3:
            candidates.append((kind, missing[0]))
    if not candidates:
        return None
    kind, differing = min(candidates, key=lambda c: _KIND_ORDER[c[0]])
    firing = [s[kind] for s in scores_by_kind if kind in s]
    return InsightRecord(
        kind=PATTERN_ONE_DIFFERS,
        block=blocks,
        score=min(1.0, sum(firing) / len(firing)),
        params={"sharedKind": kind, "differingBlock": differing},
        chart=CHART_TAGS[kind][0],
    )
