"""Thresholded refinement of the partition tree and the resulting quantizer.

Given per-cell statistics to a truncation depth j_n, a threshold eta > 0
selects the cells whose refinement gain satisfies eps_I >= eta (inclusive,
so ties expand).  The kept subtree is the smallest parent-closed set
containing every selected cell, {root} when nothing is selected, and the
quantizer is the outer-leaf partition of that subtree with one code vector
per leaf: the leaf's center of mass when it saw training data, the cube
center otherwise (so decoding is total).

The data-driven run couples the threshold and the truncation depth to the
sample size n:

    j_n   = floor(gamma * ln n / ln a)
    eta_n = sqrt((gamma + beta) * ln n / (c * n))

with a = 2**D.  The constant c prescribed by the concentration analysis is
c_a = 1/(128 (a+1)); it is provably loose, and at bench scale it pushes
eta_n above every achievable gain, freezing the tree at the root for any
n below about 10^6.  The schedule therefore treats c as a calibration
constant: the default 1.5 was fixed once so that the bench-scale threshold
range overlaps the gain ladders of the reference distributions, and the
analysis value stays available as :attr:`RateSchedule.c_a` and via
:meth:`RateSchedule.with_theoretical_constant`.  The decay exponent being
measured does not depend on c.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DepthCapError, DomainError
from .stats import Dataset, StatsTable, build_stats
from .tree import (
    CellId,
    OuterLeafPartition,
    Subtree,
    cell_to_code,
    code_to_cell,
    cube_center,
    default_max_depth,
    outer_leaves,
    smallest_subtree,
)

CODEBOOK_FORMAT = "rectree-codebook"
CODEBOOK_VERSION = 1


@dataclass(frozen=True)
class RateSchedule:
    """Parameters (gamma, beta, a) and the derived j_n, eta_n, c_a."""

    branching: int
    gamma: float = 1.5
    beta: float = 1.0
    threshold_constant: float = 1.5

    def __post_init__(self):
        if self.branching < 2:
            raise ValueError("branching must be at least 2")
        if self.gamma <= 0 or self.beta <= 0:
            raise ValueError("gamma and beta must be positive")
        if self.threshold_constant <= 0:
            raise ValueError("threshold_constant must be positive")

    @classmethod
    def with_theoretical_constant(cls, branching: int, gamma: float = 1.5, beta: float = 1.0):
        """Schedule using the analysis constant c_a = 1/(128(a+1)) verbatim."""
        return cls(branching, gamma, beta, threshold_constant=1.0 / (128.0 * (branching + 1)))

    @property
    def c_a(self) -> float:
        """The concentration constant 1/(128(a+1)) from the analysis."""
        return 1.0 / (128.0 * (self.branching + 1))

    def depth_cap(self, n: int) -> int:
        """j_n = floor(gamma ln n / ln a); deeper trees as data size grows."""
        if n < 1:
            raise ValueError("n must be positive")
        return int(math.floor(self.gamma * math.log(n) / math.log(self.branching)))

    def eta_n(self, n: int) -> float:
        """Data-driven threshold sqrt((gamma+beta) ln n / (c n))."""
        if n < 2:
            raise ValueError("eta_n requires n >= 2 (ln 1 = 0 gives no threshold)")
        return math.sqrt((self.gamma + self.beta) * math.log(n) / (self.threshold_constant * n))


def threshold_subtree(stats: StatsTable, eta: float, depth_cap: int | None = None) -> Subtree:
    """Smallest subtree containing every cell with gain >= eta.

    Only cells of depth < depth_cap are inspected: a gain needs children
    statistics one level down, so the deepest measurable candidates sit
    one level above the cap.  Returns {root} when no cell qualifies.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    cap = stats.depth_cap if depth_cap is None else min(depth_cap, stats.depth_cap)
    marked: list[CellId] = []
    for depth in range(cap):
        lv = stats.level(depth)
        if lv.gains is None:
            continue
        for code in lv.codes[lv.gains >= eta]:
            marked.append(code_to_cell(depth, int(code), stats.dim))
    return smallest_subtree(marked, dim=stats.dim)


@dataclass
class Quantizer:
    """A finite outer-leaf partition plus one code vector per leaf."""

    leaves: OuterLeafPartition
    codebook: dict[CellId, np.ndarray]
    threshold: float
    depth_cap: int
    gamma: float | None = None
    beta: float | None = None
    _tables: dict[int, tuple[np.ndarray, np.ndarray]] | None = field(default=None, repr=False)

    def __post_init__(self):
        missing = set(self.leaves) ^ set(self.codebook)
        if missing:
            raise ValueError(f"leaves and codebook disagree on {sorted(missing)[:3]}")

    @property
    def dim(self) -> int:
        return self.leaves.dim

    def tables(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """Per-depth (sorted Morton codes, aligned code-vector matrix)."""
        if self._tables is None:
            by_depth: dict[int, list[CellId]] = {}
            for cell in self.leaves:
                by_depth.setdefault(cell.depth, []).append(cell)
            tables = {}
            for depth, cells in by_depth.items():
                codes = np.array([cell_to_code(c) for c in cells], dtype=np.int64)
                order = np.argsort(codes)
                vectors = np.array([self.codebook[cells[i]] for i in order])
                tables[depth] = (codes[order], vectors)
            self._tables = dict(sorted(tables.items()))
        return self._tables

    def assign(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Leaf (depth, Morton code) per point, descending depth by depth."""
        points = np.ascontiguousarray(points, dtype=np.float64)
        n = points.shape[0]
        depths = np.full(n, -1, dtype=np.int64)
        codes = np.zeros(n, dtype=np.int64)
        for depth, (leaf_codes, _) in self.tables().items():
            open_rows = np.flatnonzero(depths < 0)
            if open_rows.size == 0:
                break
            cand = kernels.morton_encode(points[open_rows], depth)
            pos = np.searchsorted(leaf_codes, cand)
            pos[pos == leaf_codes.shape[0]] = 0
            hit = leaf_codes[pos] == cand
            rows = open_rows[hit]
            depths[rows] = depth
            codes[rows] = cand[hit]
        if np.any(depths < 0):
            raise DomainError("some points were not covered by any leaf")
        return depths, codes

    def reconstruct(self, points: np.ndarray) -> np.ndarray:
        """Code vector of the leaf containing each point."""
        depths, codes = self.assign(points)
        out = np.empty_like(np.ascontiguousarray(points, dtype=np.float64))
        for depth, (leaf_codes, vectors) in self.tables().items():
            rows = np.flatnonzero(depths == depth)
            if rows.size:
                out[rows] = vectors[np.searchsorted(leaf_codes, codes[rows])]
        return out


def quantizer_from_stats(
    stats: StatsTable,
    eta: float,
    gamma: float | None = None,
    beta: float | None = None,
    depth_cap: int | None = None,
) -> Quantizer:
    """Threshold, take outer leaves, and attach code vectors."""
    cap = stats.depth_cap if depth_cap is None else depth_cap
    subtree = threshold_subtree(stats, eta, cap)
    leaves = outer_leaves(subtree)
    codebook = {}
    for cell in leaves:
        entry = stats.lookup(cell)
        codebook[cell] = entry.center if entry.count > 0 else cube_center(cell)
    return Quantizer(leaves, codebook, eta, cap, gamma, beta)


def fit(data: Dataset, eta: float, schedule: RateSchedule) -> Quantizer:
    """Build statistics to depth j_n, threshold at eta, extract the quantizer."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if schedule.branching != 1 << data.dim:
        raise ValueError(
            f"schedule branching {schedule.branching} does not match dim {data.dim}"
        )
    cap = schedule.depth_cap(data.n)
    if cap > default_max_depth(data.dim):
        raise DepthCapError(
            f"j_n = {cap} exceeds max_depth {default_max_depth(data.dim)}; "
            "lower gamma or reduce n"
        )
    # Leaves of the thresholded subtree reach depth max(1, j_n), so the
    # table always includes at least one level below the root.
    stats = build_stats(data, max(1, cap))
    return quantizer_from_stats(stats, eta, schedule.gamma, schedule.beta, depth_cap=cap)


def sweep(
    data: Dataset, etas, schedule: RateSchedule
) -> list[tuple[float, Quantizer, int, float]]:
    """Quantizers for several thresholds, reusing one statistics build.

    Returns (eta, quantizer, leaf_count, train_distortion) per eta, in the
    given order.  Subtrees nest as eta decreases, so leaf counts are
    nondecreasing along a descending eta list.
    """
    etas = [float(e) for e in etas]
    if any(e <= 0 for e in etas):
        raise ValueError("all etas must be positive")
    cap = schedule.depth_cap(data.n)
    if cap > default_max_depth(data.dim):
        raise DepthCapError(f"j_n = {cap} exceeds max_depth {default_max_depth(data.dim)}")
    stats = build_stats(data, max(1, cap))
    out = []
    for eta in etas:
        q = quantizer_from_stats(stats, eta, schedule.gamma, schedule.beta, depth_cap=cap)
        out.append((eta, q, len(q.leaves), empirical_distortion(q, data)))
    return out


def encode(q: Quantizer, point) -> CellId:
    """The unique leaf containing the point."""
    pt = np.asarray(point, dtype=np.float64)
    if pt.ndim != 1:
        raise ValueError("point must be a single vector")
    if not np.all(np.isfinite(pt)) or np.any(pt < 0.0) or np.any(pt >= 1.0):
        raise DomainError(f"point {pt.tolist()} outside [0, 1)^{pt.shape[0]}")
    depths, codes = q.assign(pt[None, :])
    return code_to_cell(int(depths[0]), int(codes[0]), q.dim)


def decode(q: Quantizer, cell: CellId) -> np.ndarray:
    """The code vector of a leaf."""
    try:
        return q.codebook[cell].copy()
    except KeyError:
        raise ValueError(f"{cell} is not a leaf of this quantizer") from None


def empirical_distortion(q: Quantizer, data: Dataset) -> float:
    """Mean squared reconstruction error over the dataset."""
    recon = q.reconstruct(data.points)
    return float(np.mean(((data.points - recon) ** 2).sum(axis=1)))


def save_codebook(q: Quantizer, path) -> None:
    """Write the versioned JSON codebook.

    Integer fields round-trip bit-exactly; code vectors use the shortest
    decimal representation that parses back to the same binary double.
    """
    leaves = sorted(q.leaves, key=lambda c: (c.depth, c.index))
    doc = {
        "format": CODEBOOK_FORMAT,
        "version": CODEBOOK_VERSION,
        "dim": q.dim,
        "eta": q.threshold,
        "gamma": q.gamma,
        "beta": q.beta,
        "depth_cap": q.depth_cap,
        "leaves": [
            {
                "depth": cell.depth,
                "index": list(cell.index),
                "code": [float(v) for v in q.codebook[cell]],
            }
            for cell in leaves
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_codebook(path) -> Quantizer:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CODEBOOK_FORMAT:
        raise ValueError(f"not a codebook file: {path}")
    if doc.get("version") != CODEBOOK_VERSION:
        raise ValueError(f"unsupported codebook version {doc.get('version')}")
    dim = int(doc["dim"])
    codebook = {}
    for row in doc["leaves"]:
        cell = CellId(int(row["depth"]), tuple(int(k) for k in row["index"]))
        vec = np.asarray(row["code"], dtype=np.float64)
        if cell.dim != dim or vec.shape != (dim,):
            raise ValueError(f"malformed codebook row for {cell}")
        codebook[cell] = vec
    leaves = OuterLeafPartition(frozenset(codebook), dim)
    gamma = doc.get("gamma")
    beta = doc.get("beta")
    return Quantizer(
        leaves,
        codebook,
        float(doc["eta"]),
        int(doc["depth_cap"]),
        None if gamma is None else float(gamma),
        None if beta is None else float(beta),
    )
