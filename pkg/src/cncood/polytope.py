"""Exact polyhedral decomposition of 2-input ReLU networks.

Layer-by-layer refinement: inside any current region the pre-activations
are affine in the input, so each neuron's zero set is a line; splitting
by it and zeroing that neuron's row on the inactive side yields convex
regions with exact affine logit maps that tile the domain.

Tolerances: vertices closer than 1e-9 are merged, polygons with area
below 1e-12 are dropped (their area goes to the neighbor by keeping the
parent whole on the dominant side).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import MlpModel, forward

_VERTEX_TOL = 1e-9
_MIN_AREA = 1e-12
_ON_LINE = 1e-12


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise order."""
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = cross.sum() / 2.0
    if abs(area) < _MIN_AREA:
        return v.mean(axis=0)
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6.0 * area)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6.0 * area)
    return np.array([cx, cy])


def _dedup(vertices: list) -> np.ndarray:
    """Drop consecutive (and wrap-around) vertices closer than the merge tol."""
    out = []
    for p in vertices:
        if not out or max(abs(p[0] - out[-1][0]), abs(p[1] - out[-1][1])) > _VERTEX_TOL:
            out.append(p)
    if len(out) > 1 and (
        max(abs(out[0][0] - out[-1][0]), abs(out[0][1] - out[-1][1])) <= _VERTEX_TOL
    ):
        out.pop()
    return np.asarray(out, dtype=np.float64)


def split_polygon(poly: np.ndarray, line):
    """Split a convex CCW polygon by the line normal.x + offset = 0.

    Returns (negative side, positive side); either may be None.  Crossing
    points are computed once per edge and shared, so child areas sum to
    the parent's exactly up to float rounding.
    """
    normal, offset = line
    poly = np.asarray(poly, dtype=np.float64)
    if len(poly) < 3 or polygon_area(poly) <= 0:
        raise ValueError("polygon must be counterclockwise and non-degenerate")
    values = poly @ np.asarray(normal, dtype=np.float64) + offset
    scale = max(1.0, float(np.max(np.abs(values))))
    on = np.abs(values) <= _ON_LINE * scale
    neg_side = values < 0
    if not np.any(neg_side & ~on):
        return None, poly
    if not np.any(~neg_side & ~on):
        return poly, None

    neg, pos = [], []
    m = len(poly)
    for i in range(m):
        j = (i + 1) % m
        vi, vj = values[i], values[j]
        p_i = poly[i]
        if on[i]:
            neg.append(p_i)
            pos.append(p_i)
        elif vi < 0:
            neg.append(p_i)
        else:
            pos.append(p_i)
        if not on[i] and not on[j] and (vi < 0) != (vj < 0):
            t = vi / (vi - vj)
            cut = p_i + t * (poly[j] - p_i)
            neg.append(cut)
            pos.append(cut)

    neg = _dedup(neg)
    pos = _dedup(pos)
    neg_ok = len(neg) >= 3 and polygon_area(neg) >= _MIN_AREA
    pos_ok = len(pos) >= 3 and polygon_area(pos) >= _MIN_AREA
    if neg_ok and pos_ok:
        return neg, pos
    if neg_ok:
        return poly, None
    return None, poly


@dataclass(frozen=True)
class RegionPolygon:
    """One activation region: convex polygon + pattern + affine logit map."""

    vertices: np.ndarray  # (m, 2) counterclockwise
    activation_pattern: tuple  # one bit per hidden neuron, layer order
    logit_a: np.ndarray  # (K, 2)
    logit_c: np.ndarray  # (K,)

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def logits_at(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.logit_a.T + self.logit_c

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Boolean mask of points inside (boundary counts, within tol)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        edge = nxt - v
        rel = pts[:, None, :] - v[None, :, :]
        cross = edge[None, :, 0] * rel[:, :, 1] - edge[None, :, 1] * rel[:, :, 0]
        return np.all(cross >= -tol, axis=1)


@dataclass(frozen=True)
class DecisionCell:
    """Sub-polygon of a region on which the argmax class is constant."""

    parent_region: int
    vertices: np.ndarray
    argmax_class: int  # 1-based

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)


def _canonical_key(vertices: np.ndarray):
    start = int(np.lexsort((vertices[:, 1], vertices[:, 0]))[0])
    rolled = np.roll(vertices, -start, axis=0)
    return tuple(map(tuple, rolled))


def domain_from_points(points, factor: float = 1.5):
    """Axis-aligned box: the data bounding box scaled by factor per side."""
    pts = np.asarray(points, dtype=np.float64)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = (lo + hi) / 2.0
    half = np.maximum((hi - lo) / 2.0, 1e-6) * factor
    lo, hi = center - half, center + half
    return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def _box_polygon(domain) -> np.ndarray:
    x0, y0, x1, y1 = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate domain {domain}")
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64)


def enumerate_regions(model: MlpModel, domain) -> list:
    """All activation regions of a 2-input model on the domain box.

    Regions are returned sorted by canonical vertex order and tile the
    domain; each carries the exact affine map from input to logits.
    """
    if model.input_dim != 2:
        raise ValueError("region enumeration needs a 2-input model")
    base = _box_polygon(domain)
    eye = np.eye(2)
    regions = [(base, eye, np.zeros(2), ())]

    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        refined = []
        for poly, a_map, c_map, bits in regions:
            pre_a = w @ a_map
            pre_c = w @ c_map + b
            pieces = [(poly, ())]
            for j in range(w.shape[0]):
                line = (pre_a[j], pre_c[j])
                nxt = []
                for piece, signs in pieces:
                    neg, pos = split_polygon(piece, line)
                    if neg is not None:
                        nxt.append((neg, signs + (0,)))
                    if pos is not None:
                        nxt.append((pos, signs + (1,)))
                pieces = nxt
            for piece, signs in pieces:
                mask = np.asarray(signs, dtype=np.float64)
                refined.append(
                    (piece, pre_a * mask[:, None], pre_c * mask, bits + signs)
                )
        regions = refined

    w_out, b_out = model.weights[-1], model.biases[-1]
    out = [
        RegionPolygon(poly, bits, w_out @ a_map, w_out @ c_map + b_out)
        for poly, a_map, c_map, bits in regions
    ]
    out.sort(key=lambda r: _canonical_key(r.vertices))
    return out


def decision_cells(regions) -> list:
    """Split every region by its pairwise logit-equality lines.

    Each resulting cell has a constant argmax class in its interior.
    """
    cells = []
    for r_i, region in enumerate(regions):
        k = region.logit_a.shape[0]
        pieces = [region.vertices]
        for i in range(k):
            for j in range(i + 1, k):
                a = region.logit_a[i] - region.logit_a[j]
                c = region.logit_c[i] - region.logit_c[j]
                nxt = []
                for piece in pieces:
                    neg, pos = split_polygon(piece, (a, c))
                    nxt.extend(p for p in (neg, pos) if p is not None)
                pieces = nxt
        for piece in pieces:
            logits = region.logits_at(polygon_centroid(piece)[None, :])[0]
            cells.append(DecisionCell(r_i, piece, int(np.argmax(logits)) + 1))
    return cells


def id_empty_polytope_area(
    regions, cells, id_points, k: int, variant: str = "region", tol: float = 1e-9
) -> float:
    """Total area predicted (fully or partially) ID with no ID sample inside.

    variant 'region' sums whole region areas; 'cell' sums only the areas
    of the ID-argmax cells within such regions.
    """
    if variant not in ("region", "cell"):
        raise ValueError(f"unknown variant {variant!r}")
    id_points = np.asarray(id_points, dtype=np.float64)
    id_cell_areas = {}
    for cell in cells:
        if cell.argmax_class <= k:
            id_cell_areas.setdefault(cell.parent_region, 0.0)
            id_cell_areas[cell.parent_region] += cell.area
    total = 0.0
    for r_i, region in enumerate(regions):
        if r_i not in id_cell_areas:
            continue
        if len(id_points) and bool(region.contains(id_points, tol=tol).any()):
            continue
        total += region.area if variant == "region" else id_cell_areas[r_i]
    return total


def activation_patterns(model: MlpModel, points) -> np.ndarray:
    """Hidden-neuron on/off bits from a direct forward pass, layer order."""
    _, _, acts = forward(model, points)
    return np.hstack([(h > 0).astype(np.int8) for h in acts[1:]])


def pattern_hash(region: RegionPolygon) -> str:
    bits = "".join(str(b) for b in region.activation_pattern)
    return f"{int(bits, 2):x}" if bits else "0"


def export_complex_svg(regions, cells, points, labels, k, path, size=640):
    """Polyhedral-complex panel: decision cells colored by class, ID-empty
    regions filled white, training points on top.  Deterministic output."""
    from .svg import SvgCanvas, ViewMap, class_color

    xs = np.vstack([r.vertices for r in regions])
    domain = (xs[:, 0].min(), xs[:, 1].min(), xs[:, 0].max(), xs[:, 1].max())
    view = ViewMap(domain, size)
    canvas = SvgCanvas(size, size)
    empty = {
        r_i
        for r_i, region in enumerate(regions)
        if any(c.parent_region == r_i and c.argmax_class <= k for c in cells)
        and not (len(points) and region.contains(points).any())
    }
    for cell in cells:
        if cell.parent_region in empty:
            fill = "white"
        elif cell.argmax_class > k:
            fill = class_color(0)
        else:
            fill = class_color(cell.argmax_class)
        canvas.polygon(
            view(cell.vertices), fill=fill, stroke="black", stroke_width=0.4
        )
    for p, lab in zip(np.atleast_2d(points), labels):
        (px, py), = view(np.asarray(p, dtype=np.float64)[None, :])
        canvas.circle(px, py, 1.6, fill=class_color(int(lab)))
    canvas.write(path)


def export_regions_csv(regions, cells, id_points, k, path):
    """One row per region: id, area, pattern hash, has-ID-cell,
    contains-ID-point."""
    import csv

    id_points = np.asarray(id_points, dtype=np.float64)
    id_cell_regions = {c.parent_region for c in cells if c.argmax_class <= k}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("region_id", "area", "pattern_hash", "has_id_cell",
             "contains_id_point")
        )
        for r_i, region in enumerate(regions):
            contains = bool(len(id_points) and region.contains(id_points).any())
            writer.writerow(
                (
                    r_i,
                    f"{region.area:.12g}",
                    pattern_hash(region),
                    int(r_i in id_cell_regions),
                    int(contains),
                )
            )
