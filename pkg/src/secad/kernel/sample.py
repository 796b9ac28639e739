"""Area-weighted uniform sampling of model boundaries, plus PLY export."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import DEFAULT_MAX_EDGE, Mesh, tessellate
from .solid import CompiledModel


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float).reshape(-1, 3))

    def __len__(self) -> int:
        return len(self.points)


def sample_mesh(mesh: Mesh, n_points: int, seed: int) -> PointCloud:
    """Draw ``n_points`` uniformly by area from a mesh's triangles.

    Triangles are chosen with probability proportional to area (inverse CDF
    over the area prefix sum); positions within a triangle use the square-root
    barycentric trick, which is exactly area-uniform. Deterministic for a
    given (mesh, n_points, seed).
    """
    if n_points < 1:
        raise ValueError(f"n_points must be positive, got {n_points}")
    areas = mesh.triangle_areas()
    total = float(areas.sum())
    if len(areas) == 0 or total <= 0.0:
        raise ValueError("mesh has no area to sample")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(areas)
    picks = np.searchsorted(cdf, rng.random(n_points) * total, side="right")
    picks = np.minimum(picks, len(areas) - 1)
    tris = mesh.triangle_coords()[picks]
    r1 = np.sqrt(rng.random(n_points))[:, None]
    r2 = rng.random(n_points)[:, None]
    points = (1.0 - r1) * tris[:, 0] + r1 * (1.0 - r2) * tris[:, 1] + r1 * r2 * tris[:, 2]
    return PointCloud(points, seed)


def sample_point_cloud(
    model: CompiledModel,
    n_points: int,
    seed: int,
    *,
    subdivision: int | None = None,
    max_edge: float = DEFAULT_MAX_EDGE,
) -> PointCloud:
    """Tessellate ``model`` and sample its surface uniformly by area."""
    mesh = tessellate(model, subdivision, max_edge=max_edge)
    return sample_mesh(mesh, n_points, seed)


def write_ply(cloud: PointCloud, path) -> None:
    """Write points as ASCII PLY."""
    points = cloud.points
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    body = [f"{float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in points]
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(header + body) + "\n")
