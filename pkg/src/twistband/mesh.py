"""Cross-section geometries and deterministic triangulation.

Four geometry kinds: rectangle and disk (canonical shapes centered at the
origin, then translated by `offset`), triangle and polygon (explicit vertex
lists).  Meshes are built by structured subdivision -- regular grid for the
rectangle, concentric hexagonal rings for the disk, barycentric lattice for
triangles, ear-clipping plus lattice refinement for polygons -- so the same
inputs always produce the same mesh.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeshError

# Known preset geometries used throughout the test and acceptance suites.
_PRESET_TRIANGLE = ((0.0, 0.0), (1.3, 0.0), (0.4, 0.9))
_PRESET_LSHAPE = ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0))


def _shoelace(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _check_simple(vertices):
    n = len(vertices)
    for i in range(n):
        a1, a2 = vertices[i], vertices[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = vertices[j], vertices[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                raise MeshError(f"polygon boundary self-intersects (edges {i} and {j})")


@dataclass(frozen=True)
class SectionGeometry:
    """A cross-section shape plus its placement relative to the rotation origin."""

    kind: str
    params: tuple
    offset: tuple = (0.0, 0.0)

    @classmethod
    def rectangle(cls, a, b, offset=(0.0, 0.0)):
        if not (a > 0 and b > 0):
            raise MeshError(f"rectangle sides must be positive, got {a} x {b}")
        return cls("rectangle", (float(a), float(b)), tuple(map(float, offset)))

    @classmethod
    def disk(cls, r, offset=(0.0, 0.0)):
        if not r > 0:
            raise MeshError(f"disk radius must be positive, got {r}")
        return cls("disk", (float(r),), tuple(map(float, offset)))

    @classmethod
    def triangle(cls, v0, v1, v2, offset=(0.0, 0.0)):
        verts = tuple((float(v[0]), float(v[1])) for v in (v0, v1, v2))
        if abs(_shoelace(verts)) < 1e-14:
            raise MeshError("triangle vertices are collinear")
        if len({verts[0], verts[1], verts[2]}) != 3:
            raise MeshError("triangle has repeated vertices")
        if _shoelace(verts) < 0:
            verts = (verts[0], verts[2], verts[1])
        return cls("triangle", verts, tuple(map(float, offset)))

    @classmethod
    def polygon(cls, vertices, offset=(0.0, 0.0)):
        verts = tuple((float(v[0]), float(v[1])) for v in vertices)
        if len(verts) < 3:
            raise MeshError("polygon needs at least 3 vertices")
        if len(set(verts)) != len(verts):
            raise MeshError("polygon has repeated vertices")
        area = _shoelace(verts)
        if abs(area) < 1e-14:
            raise MeshError("polygon has zero area")
        if area < 0:
            verts = verts[::-1]
        _check_simple(verts)
        return cls("polygon", verts, tuple(map(float, offset)))

    @classmethod
    def from_dict(cls, doc):
        """Parse the structured geometry document used by the CLI."""
        kind = doc.get("kind")
        offset = tuple(doc.get("offset", (0.0, 0.0)))
        if kind == "rectangle":
            return cls.rectangle(doc["a"], doc["b"], offset)
        if kind == "disk":
            return cls.disk(doc["r"], offset)
        if kind == "triangle":
            v = doc["vertices"]
            return cls.triangle(v[0], v[1], v[2], offset)
        if kind == "polygon":
            return cls.polygon(doc["vertices"], offset)
        raise MeshError(f"unknown geometry kind {kind!r}")

    @property
    def area(self):
        if self.kind == "rectangle":
            a, b = self.params
            return a * b
        if self.kind == "disk":
            return math.pi * self.params[0] ** 2
        return abs(_shoelace(self.params))

    def _bbox_extents(self):
        if self.kind == "rectangle":
            return self.params[0], self.params[1]
        if self.kind == "disk":
            d = 2.0 * self.params[0]
            return d, d
        v = np.asarray(self.params)
        ext = v.max(axis=0) - v.min(axis=0)
        return float(ext[0]), float(ext[1])

    @property
    def diameter(self):
        ex, ey = self._bbox_extents()
        return math.hypot(ex, ey)


def preset(name):
    """Named preset geometries: rectangle, disk, triangle, lshape."""
    factories = {
        "rectangle": lambda: SectionGeometry.rectangle(1.0, 0.7),
        "disk": lambda: SectionGeometry.disk(1.0),
        "triangle": lambda: SectionGeometry.triangle(*_PRESET_TRIANGLE),
        "lshape": lambda: SectionGeometry.polygon(_PRESET_LSHAPE),
    }
    if name not in factories:
        raise MeshError(f"unknown preset {name!r}; choose from {sorted(factories)}")
    return factories[name]()


@dataclass(frozen=True)
class TriangleMesh:
    """Conforming triangulation with boundary edges and outward normals."""

    vertices: np.ndarray      # (N, 2)
    triangles: np.ndarray     # (M, 3) vertex indices, CCW
    boundary_edges: np.ndarray    # (K, 2) vertex indices, CCW along the boundary
    boundary_normals: np.ndarray  # (K, 2) outward unit normals
    h: float
    areas: np.ndarray

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def area_total(self):
        return float(self.areas.sum())


def _finish_mesh(vertices, triangles):
    """Orient CCW, extract boundary, compute h and areas, freeze arrays."""
    verts = np.asarray(vertices, dtype=float)
    tris = np.asarray(triangles, dtype=np.int64)

    p0 = verts[tris[:, 0]]
    p1 = verts[tris[:, 1]]
    p2 = verts[tris[:, 2]]
    cross = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    flip = cross < 0
    if np.any(flip):
        tris[flip, 1], tris[flip, 2] = tris[flip, 2].copy(), tris[flip, 1].copy()
        cross = np.abs(cross)
    areas = 0.5 * cross
    if np.any(areas <= 0):
        raise MeshError("mesh contains a degenerate (zero-area) triangle")

    edge_count = {}
    edge_oriented = {}
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            edge_count[key] = edge_count.get(key, 0) + 1
            edge_oriented[key] = (a, b)
    if any(c > 2 for c in edge_count.values()):
        raise MeshError("non-conforming mesh: an edge is shared by more than two triangles")

    bedges = []
    bnormals = []
    for key, c in edge_count.items():
        if c == 1:
            a, b = edge_oriented[key]
            d = verts[b] - verts[a]
            ln = math.hypot(d[0], d[1])
            bedges.append((a, b))
            bnormals.append((d[1] / ln, -d[0] / ln))
    bedges = np.asarray(bedges, dtype=np.int64)
    bnormals = np.asarray(bnormals, dtype=float)

    p0 = verts[tris[:, 0]]
    p1 = verts[tris[:, 1]]
    p2 = verts[tris[:, 2]]
    elens = np.stack([
        np.hypot(*(p1 - p0).T), np.hypot(*(p2 - p1).T), np.hypot(*(p0 - p2).T)
    ])
    h = float(elens.max())

    for arr in (verts, tris, bedges, bnormals, areas):
        arr.setflags(write=False)
    return TriangleMesh(verts, tris, bedges, bnormals, h, areas)


def _mesh_rectangle(a, b, target_h):
    nx = max(2, math.ceil(a * math.sqrt(2.0) / target_h))
    ny = max(2, math.ceil(b * math.sqrt(2.0) / target_h))
    xs = np.linspace(-a / 2.0, a / 2.0, nx + 1)
    ys = np.linspace(-b / 2.0, b / 2.0, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])

    def idx(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = idx(i, j), idx(i + 1, j)
            v01, v11 = idx(i, j + 1), idx(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return verts, tris


def _mesh_disk(r, target_h):
    m = max(3, math.ceil(1.25 * r / target_h))
    while True:
        verts = [(0.0, 0.0)]
        ring_start = [0]
        for i in range(1, m + 1):
            n_i = 6 * i
            ring_start.append(len(verts))
            rad = r * i / m
            ang = 2.0 * np.pi * np.arange(n_i) / n_i
            verts.extend(zip(rad * np.cos(ang), rad * np.sin(ang)))
        tris = []
        for t in range(6):
            tris.append((0, 1 + t, 1 + (t + 1) % 6))
        for i in range(1, m):
            p, q = 6 * i, 6 * (i + 1)
            inner = ring_start[i]
            outer = ring_start[i + 1]
            ii = jj = 0
            while ii < p or jj < q:
                if jj < q and (ii == p or (jj + 1) * p <= (ii + 1) * q):
                    tris.append((inner + ii % p, outer + jj % q, outer + (jj + 1) % q))
                    jj += 1
                else:
                    tris.append((inner + ii % p, outer + jj % q, inner + (ii + 1) % p))
                    ii += 1
        mesh = _finish_mesh(np.asarray(verts), tris)
        if mesh.h <= target_h:
            return mesh
        m += 1


def _edge_point(a, b, t, k):
    """Point a + (t/k)(b - a) computed from the lexicographically smaller
    endpoint, so adjacent coarse triangles produce bitwise-identical floats
    on a shared edge and exact-key deduplication works."""
    if b < a:
        a, b, t = b, a, k - t
    if t == 0:
        return a
    if t == k:
        return b
    return (a[0] + (t / k) * (b[0] - a[0]), a[1] + (t / k) * (b[1] - a[1]))


def _subdivide_triangle(v0, v1, v2, k, node_index, verts_out, tris_out):
    """Barycentric k-refinement; shared-edge nodes deduplicated exactly."""
    def node(i, j):
        if j == 0:
            p = _edge_point(v0, v1, i, k)
        elif i == 0:
            p = _edge_point(v0, v2, j, k)
        elif i + j == k:
            p = _edge_point(v1, v2, j, k)
        else:
            p = (v0[0] + (i / k) * (v1[0] - v0[0]) + (j / k) * (v2[0] - v0[0]),
                 v0[1] + (i / k) * (v1[1] - v0[1]) + (j / k) * (v2[1] - v0[1]))
        if p not in node_index:
            node_index[p] = len(verts_out)
            verts_out.append(p)
        return node_index[p]

    grid = {}
    for i in range(k + 1):
        for j in range(k + 1 - i):
            grid[(i, j)] = node(i, j)
    for i in range(k):
        for j in range(k - i):
            tris_out.append((grid[(i, j)], grid[(i + 1, j)], grid[(i, j + 1)]))
            if i + j < k - 1:
                tris_out.append((grid[(i + 1, j)], grid[(i + 1, j + 1)], grid[(i, j + 1)]))


def _ear_clip(vertices):
    """Triangulate a simple CCW polygon by ear clipping (lowest-index ear first)."""
    idx = list(range(len(vertices)))
    tris = []

    def cross(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    span = max(max(v[0] for v in vertices) - min(v[0] for v in vertices),
               max(v[1] for v in vertices) - min(v[1] for v in vertices))
    tol = 1e-12 * span * span

    def inside(p, a, b, c):
        # On-boundary points count as inside: a vertex sitting exactly on a
        # candidate diagonal would otherwise create a T-junction.
        d1 = cross(a, b, p)
        d2 = cross(b, c, p)
        d3 = cross(c, a, p)
        return d1 >= -tol and d2 >= -tol and d3 >= -tol

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10000:
            raise MeshError("ear clipping failed; polygon may not be simple")
        clipped = False
        for pos in range(len(idx)):
            i_prev = idx[pos - 1]
            i_cur = idx[pos]
            i_next = idx[(pos + 1) % len(idx)]
            a, b, c = vertices[i_prev], vertices[i_cur], vertices[i_next]
            if cross(a, b, c) <= 0:
                continue
            if any(inside(vertices[j], a, b, c) for j in idx if j not in (i_prev, i_cur, i_next)):
                continue
            tris.append((i_prev, i_cur, i_next))
            idx.pop(pos)
            clipped = True
            break
        if not clipped:
            raise MeshError("ear clipping found no ear; polygon may not be simple")
    tris.append(tuple(idx))
    return tris


def _mesh_polygonal(vertices, target_h):
    vertices = [tuple(v) for v in vertices]
    if len(vertices) == 3:
        coarse = [(0, 1, 2)]
    else:
        coarse = _ear_clip(vertices)
    longest = 0.0
    for t in coarse:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            longest = max(longest, math.dist(vertices[a], vertices[b]))
    k = max(1, math.ceil(longest / target_h))

    node_index = {}
    verts_out = []
    tris_out = []
    for t in coarse:
        _subdivide_triangle(vertices[t[0]], vertices[t[1]], vertices[t[2]], k, node_index, verts_out, tris_out)
    return np.asarray(verts_out), tris_out


def build_mesh(geometry, target_h):
    """Conforming triangulation of the geometry with max edge length <= target_h."""
    if not isinstance(geometry, SectionGeometry):
        raise TypeError("geometry must be a SectionGeometry")
    if not target_h > 0:
        raise MeshError(f"target_h must be positive, got {target_h}")
    min_extent = min(geometry._bbox_extents())
    if target_h >= min_extent / 4.0:
        raise MeshError(
            f"target_h {target_h} too coarse for shape with min extent {min_extent}"
        )

    if geometry.kind == "rectangle":
        verts, tris = _mesh_rectangle(geometry.params[0], geometry.params[1], target_h)
        mesh = _finish_mesh(verts, tris)
    elif geometry.kind == "disk":
        mesh = _mesh_disk(geometry.params[0], target_h)
    else:
        verts, tris = _mesh_polygonal(geometry.params, target_h)
        mesh = _finish_mesh(verts, tris)

    if mesh.h > target_h * (1 + 1e-12):
        raise MeshError(f"mesher produced h {mesh.h} above target {target_h}")

    if geometry.kind == "disk":
        # The mesh fills the inscribed regular n-gon of the outer ring.
        n = mesh.boundary_edges.shape[0]
        r = geometry.params[0]
        expected = 0.5 * n * r * r * math.sin(2.0 * math.pi / n)
    else:
        expected = geometry.area
    if abs(mesh.area_total - expected) > 1e-6 * expected:
        raise MeshError(
            f"mesh area {mesh.area_total} deviates from expected {expected}"
        )

    ox, oy = geometry.offset
    if ox != 0.0 or oy != 0.0:
        verts = mesh.vertices + np.array([ox, oy])
        mesh = _finish_mesh(verts, mesh.triangles.copy())
    return mesh
