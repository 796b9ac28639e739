"""Boundary tessellation of compiled models and Wavefront OBJ export.

Each prism contributes wall quads (two triangles per ring edge, holes
included) and ear-clipped caps. Because booleans are implicit, a triangle may
lie inside another prism or inside cut volume; after optional midpoint
subdivision, triangles are kept only if the model surface actually passes
through them, tested by probing membership a small step along the triangle
normal on both sides of the centroid. Finer subdivision therefore tightens
the mesh around boolean seams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .profile import shoelace_area
from .solid import BOUNDARY_EPSILON, CompiledModel, Prism

#: Adaptive subdivision targets edges no longer than this.
DEFAULT_MAX_EDGE = 0.05

_MAX_ADAPTIVE_DEPTH = 6
_DEGENERATE_DOUBLE_AREA = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Triangle soup: ``vertices`` ``(V, 3)`` float, ``triangles`` ``(T, 3)`` int."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))

    def triangle_coords(self) -> np.ndarray:
        """``(T, 3, 3)`` corner positions."""
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        tris = self.triangle_coords()
        cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())


def triangulate_ring(ring: np.ndarray) -> np.ndarray:
    """Ear-clip a simple polygon; returns ``(K, 3)`` indices into ``ring``."""
    ring = np.asarray(ring, dtype=float)
    n = len(ring)
    if n < 3:
        return np.zeros((0, 3), dtype=np.int64)
    order = list(range(n))
    if shoelace_area(ring) < 0.0:
        order.reverse()
    scale_sq = float(np.ptp(ring, axis=0).max()) ** 2 or 1.0
    eps = 1e-12 * scale_sq
    triangles: list[tuple[int, int, int]] = []
    while len(order) > 3:
        clipped = False
        m = len(order)
        for k in range(m):
            ia, ib, ic = order[k - 1], order[k], order[(k + 1) % m]
            a, b, c = ring[ia], ring[ib], ring[ic]
            if _cross2(b - a, c - b) <= eps:
                continue  # reflex or collinear corner, not an ear
            if _any_point_inside(ring, (ia, ib, ic), order, a, b, c, eps):
                continue
            triangles.append((ia, ib, ic))
            del order[k]
            clipped = True
            break
        if not clipped:
            # Numerically stuck (e.g. all remaining corners collinear): clip
            # the widest corner anyway so the loop terminates.
            best = max(
                range(len(order)),
                key=lambda k: _cross2(
                    ring[order[k]] - ring[order[k - 1]],
                    ring[order[(k + 1) % len(order)]] - ring[order[k]],
                ),
            )
            m = len(order)
            triangles.append((order[best - 1], order[best], order[(best + 1) % m]))
            del order[best]
    triangles.append((order[0], order[1], order[2]))
    return np.asarray(triangles, dtype=np.int64)


def _cross2(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _any_point_inside(ring, tri_indices, order, a, b, c, eps) -> bool:
    # Non-strict test: a vertex exactly on the candidate diagonal blocks the
    # ear too, otherwise the diagonal may graze a reflex corner and the
    # triangle poke outside the polygon. Coincident corner positions never
    # block (rings may revisit a coordinate).
    for idx in order:
        if idx in tri_indices:
            continue
        p = ring[idx]
        if any(abs(p[0] - q[0]) <= 1e-12 and abs(p[1] - q[1]) <= 1e-12 for q in (a, b, c)):
            continue
        if (
            _cross2(b - a, p - a) >= -eps
            and _cross2(c - b, p - b) >= -eps
            and _cross2(a - c, p - c) >= -eps
        ):
            return True
    return False


def _prism_triangles(prism: Prism) -> np.ndarray:
    """All candidate boundary triangles of one prism, world coords, ``(T, 3, 3)``."""
    chunks: list[np.ndarray] = []
    z_lo, z_hi = -prism.extent_neg, prism.extent_pos
    for ring in prism.region.rings:
        nxt = np.roll(np.arange(len(ring)), -1)
        a = np.column_stack([ring, np.full(len(ring), z_lo)])
        b = np.column_stack([ring[nxt], np.full(len(ring), z_lo)])
        a_top = a.copy()
        a_top[:, 2] = z_hi
        b_top = b.copy()
        b_top[:, 2] = z_hi
        chunks.append(np.stack([a, b, b_top], axis=1))
        chunks.append(np.stack([a, b_top, a_top], axis=1))
    cap = triangulate_ring(prism.region.outer)
    for z in (z_lo, z_hi):
        corners = prism.region.outer[cap]
        lifted = np.concatenate([corners, np.full((*cap.shape, 1), z)], axis=2)
        chunks.append(lifted)
    tris = np.concatenate(chunks, axis=0)
    flat = prism.frame.to_world(tris.reshape(-1, 3))
    return flat.reshape(-1, 3, 3)


def _subdivide_once(tris: np.ndarray) -> np.ndarray:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ],
        axis=0,
    )


def _subdivide_fixed(tris: np.ndarray, depth: int) -> np.ndarray:
    for _ in range(depth):
        tris = _subdivide_once(tris)
    return tris


def _subdivide_adaptive(tris: np.ndarray, max_edge: float) -> np.ndarray:
    edges = np.stack(
        [
            np.linalg.norm(tris[:, 1] - tris[:, 0], axis=1),
            np.linalg.norm(tris[:, 2] - tris[:, 1], axis=1),
            np.linalg.norm(tris[:, 0] - tris[:, 2], axis=1),
        ],
        axis=1,
    ).max(axis=1)
    with np.errstate(divide="ignore"):
        depth = np.ceil(np.log2(np.maximum(edges / max_edge, 1e-300))).astype(int)
    depth = np.clip(depth, 0, _MAX_ADAPTIVE_DEPTH)
    groups = [
        _subdivide_fixed(tris[depth == d], d) for d in np.unique(depth) if (depth == d).any()
    ]
    return np.concatenate(groups, axis=0)


def _surface_filter(model: CompiledModel, tris: np.ndarray, epsilon: float) -> np.ndarray:
    """Keep triangles whose centroid has the model surface between its offset probes."""
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    norms = np.linalg.norm(cross, axis=1)
    ok = norms > _DEGENERATE_DOUBLE_AREA
    keep = np.zeros(len(tris), dtype=bool)
    if not ok.any():
        return keep
    centroid = tris[ok].mean(axis=1)
    normal = cross[ok] / norms[ok, None]
    above = model.contains(centroid + epsilon * normal)
    below = model.contains(centroid - epsilon * normal)
    keep[ok] = above != below
    return keep


def tessellate(
    model: CompiledModel,
    subdivision: int | None = None,
    *,
    max_edge: float = DEFAULT_MAX_EDGE,
    boundary_epsilon: float = BOUNDARY_EPSILON,
) -> Mesh:
    """Triangulate the boundary of a compiled model.

    ``subdivision`` applies that many uniform midpoint subdivisions to every
    candidate triangle; ``None`` (the default) subdivides adaptively until no
    edge exceeds ``max_edge``. Triangles that do not straddle the surface
    (buried in, or cut away from, the model) are dropped, as are degenerate
    zero-area ones.
    """
    if subdivision is not None and subdivision < 0:
        raise ValueError("subdivision must be non-negative")
    parts = []
    for prism in model.prisms:
        tris = _prism_triangles(prism)
        if subdivision is None:
            tris = _subdivide_adaptive(tris, max_edge)
        else:
            tris = _subdivide_fixed(tris, subdivision)
        parts.append(tris)
    tris = np.concatenate(parts, axis=0)
    tris = tris[_surface_filter(model, tris, boundary_epsilon)]
    vertices = tris.reshape(-1, 3)
    triangles = np.arange(len(vertices), dtype=np.int64).reshape(-1, 3)
    return Mesh(vertices, triangles)


def write_obj(mesh: Mesh, path) -> None:
    """Write a mesh as Wavefront OBJ (vertices and triangular faces only)."""
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for i, j, k in mesh.triangles + 1:
        lines.append(f"f {i} {j} {k}")
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")
