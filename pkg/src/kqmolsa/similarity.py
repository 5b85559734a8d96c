"""Similarity score combining shape distance with the ratio of surface areas."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass

import numpy as np

from .distance import AlignmentResult, MinimizerOptions, NonPDError, descriptor_distance
from .quantize import ShapeDescriptor

logger = logging.getLogger(__name__)

DEFAULT_WEIGHTS = (0.3, 0.7)
CSV_COLUMNS = ("name", "score", "distance", "area_ratio", "scale_p", "converged")


@dataclass
class SimilarityScore:
    score: float
    distance: float
    area_ratio: float
    weights: tuple[float, float]
    scale_p: float = 0.0
    converged: bool = True
    name: str = ""

    def row(self) -> dict:
        return {
            "name": self.name,
            "score": self.score,
            "distance": self.distance,
            "area_ratio": self.area_ratio,
            "scale_p": self.scale_p,
            "converged": self.converged,
        }


@dataclass
class SkippedPair:
    name: str
    reason: str


def check_weights(weights) -> tuple[float, float]:
    x, y = (float(v) for v in weights)
    if not (0.0 <= x < 0.5):
        raise ValueError(f"area weight x={x} must satisfy 0 <= x < 0.5 so that shape dominates")
    if abs(x + y - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {x} + {y}")
    return x, y


def area_ratio(a1: float, a2: float) -> float:
    if not (a1 > 0 and a2 > 0):
        raise ValueError(f"areas must be positive, got {a1} and {a2}")
    return min(a1, a2) / max(a1, a2)


def combine(distance: float, ratio: float, weights=DEFAULT_WEIGHTS) -> float:
    x, y = check_weights(weights)
    return x * ratio + y / (1.0 + distance)


def score(
    d1: ShapeDescriptor,
    d2: ShapeDescriptor,
    weights=DEFAULT_WEIGHTS,
    opts: MinimizerOptions | None = None,
) -> SimilarityScore:
    weights = check_weights(weights)
    if d1.k != d2.k:
        raise ValueError(f"quantization level mismatch: k={d1.k} vs k={d2.k}")
    ratio = area_ratio(d1.area_original, d2.area_original)
    res: AlignmentResult = descriptor_distance(d1, d2, opts)
    return SimilarityScore(
        score=combine(res.distance, ratio, weights),
        distance=res.distance,
        area_ratio=ratio,
        weights=weights,
        scale_p=res.scale,
        converged=res.converged,
        name=d2.name,
    )


def _score_job(args):
    query, member, weights, opts = args
    try:
        return score(query, member, weights, opts)
    except (NonPDError, ValueError) as exc:
        return SkippedPair(member.name, str(exc))


def screen(
    query: ShapeDescriptor,
    library: list[ShapeDescriptor],
    weights=DEFAULT_WEIGHTS,
    top_n: int | None = None,
    opts: MinimizerOptions | None = None,
    jobs: int = 1,
):
    """Score the query against each library member and rank.

    Returns (ranked scores, skipped pairs). Ties in score are broken by name;
    the order never depends on completion order when jobs > 1.
    """
    weights = check_weights(weights)
    for member in library:
        if member.k != query.k:
            raise ValueError(f"quantization level mismatch: query k={query.k}, {member.name!r} k={member.k}")
    tasks = [(query, member, weights, opts) for member in library]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_score_job, tasks))
    else:
        results = [_score_job(t) for t in tasks]
    scored = [r for r in results if isinstance(r, SimilarityScore)]
    skipped = [r for r in results if isinstance(r, SkippedPair)]
    for s in skipped:
        logger.warning("skipped %s: %s", s.name, s.reason)
    scored.sort(key=lambda s: (-s.score, s.name))
    if top_n is not None:
        scored = scored[:top_n]
    return scored, skipped


def to_csv(scores: list[SimilarityScore]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for s in scores:
        row = s.row()
        for key in ("score", "distance", "area_ratio", "scale_p"):
            row[key] = f"{row[key]:.6f}"
        writer.writerow(row)
    return buf.getvalue()


def score_to_dict(s: SimilarityScore) -> dict:
    out = asdict(s)
    out["weights"] = list(s.weights)
    return out


def weight_table(s0: float, ratio: float, xs=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5)) -> list[float]:
    """Scores along the weight sweep x -> x * ratio + (1 - x) * s0, where s0 = 1/(1+d)."""
    return [x * ratio + (1 - x) * s0 for x in xs]


def fit_area_ratio(xs, scores) -> float:
    """Least-squares area ratio from a weight sweep whose x = 0 entry is the shape-only score.

    Each row satisfies score(x) - s0 = x (ratio - s0), so the ratio is
    s0 + sum x (score - s0) / sum x^2 over the rows with x > 0.
    """
    xs = np.asarray(xs, dtype=float)
    scores = np.asarray(scores, dtype=float)
    zero = np.flatnonzero(xs == 0)
    if zero.size != 1:
        raise ValueError("the sweep needs exactly one x = 0 row")
    s0 = scores[zero[0]]
    m = xs > 0
    return float(s0 + np.sum(xs[m] * (scores[m] - s0)) / np.sum(xs[m] ** 2))
