"""Tagged 2D triangulations for the two-phase geometries used everywhere.

Builders cover the three geometry families:

* concentric disks (annulus ``plus`` region around a ``minus`` disk), with an
  optional boundary-layer-graded variant,
* the square checkerboard whose interface crosses itself at the origin,
* a square with an embedded simple polygon as interface.

All interface edges are oriented so that the ``minus`` subdomain lies on the
left of ``i -> j``; the unit normal obtained by rotating the edge direction by
-90 degrees therefore points from the minus region into the plus region.
Boundary edges are oriented counterclockwise around the domain (outward
normal on the right).
"""

from __future__ import annotations

import hashlib
import io
import math

import numpy as np
from scipy.spatial import Delaunay

from .errors import GeometryError, MeshFormatError

_TAG_MINUS = -1
_TAG_PLUS = 1

FORMAT_HEADER = "contrastlab-mesh v1"


class Mesh:
    """Immutable triangulation with subdomain tags and oriented edge lists.

    Attributes
    ----------
    nodes : (N, 2) float array
    triangles : (M, 3) int array, counterclockwise vertex order
    tags : (M,) int array with -1 for minus and +1 for plus triangles
    interface_edges : (K, 2) int array, minus triangle on the left
    boundary_edges : (L, 2) int array, domain on the left
    h_max : longest edge length
    """

    def __init__(self, nodes, triangles, tags, interface_edges=None,
                 boundary_edges=None):
        nodes = np.ascontiguousarray(nodes, dtype=float)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        tags = np.ascontiguousarray(tags, dtype=np.int64)
        triangles = _orient_ccw(nodes, triangles)
        self.nodes = nodes
        self.triangles = triangles
        self.tags = tags
        if interface_edges is None:
            interface_edges = _extract_interface_edges(nodes, triangles, tags)
        if boundary_edges is None:
            boundary_edges = _extract_boundary_edges(nodes, triangles)
        self.interface_edges = np.ascontiguousarray(interface_edges, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        self.h_max = float(_edge_lengths(nodes, triangles).max())
        for arr in (self.nodes, self.triangles, self.tags,
                    self.interface_edges, self.boundary_edges):
            arr.flags.writeable = False
        self._index_cache = {}

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def _cached(self, key, build):
        if key not in self._index_cache:
            self._index_cache[key] = build()
        return self._index_cache[key]

    def subdomain_triangles(self, tag):
        """Triangle indices of one subdomain; tag is 'minus' or 'plus'."""
        t = _TAG_MINUS if tag == "minus" else _TAG_PLUS
        return self._cached(("tris", t),
                            lambda: np.flatnonzero(self.tags == t))

    def subdomain_nodes(self, tag):
        """Sorted node indices touched by triangles of one subdomain."""
        def build():
            tris = self.triangles[self.subdomain_triangles(tag)]
            return np.unique(tris)
        return self._cached(("nodes", tag), build)

    def interface_nodes(self):
        """Sorted node indices lying on the interface."""
        return self._cached("iface", lambda: np.unique(self.interface_edges))

    def boundary_nodes(self):
        """Sorted node indices lying on the outer boundary."""
        return self._cached("bdry", lambda: np.unique(self.boundary_edges))

    def triangle_areas(self):
        return self._cached("areas", lambda: _signed_areas(self.nodes, self.triangles))

    def subdomain_area(self, tag):
        areas = self.triangle_areas()
        return float(areas[self.subdomain_triangles(tag)].sum())

    def interface_perimeter(self):
        e = self.interface_edges
        d = self.nodes[e[:, 1]] - self.nodes[e[:, 0]]
        return float(np.hypot(d[:, 0], d[:, 1]).sum())


def _signed_areas(nodes, triangles):
    p = nodes[triangles]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def _orient_ccw(nodes, triangles):
    areas = _signed_areas(nodes, triangles)
    if np.any(np.abs(areas) <= 0.0):
        raise GeometryError("degenerate (zero-area) triangle in mesh")
    flipped = triangles.copy()
    neg = areas < 0
    flipped[neg, 1], flipped[neg, 2] = triangles[neg, 2], triangles[neg, 1]
    return flipped


def _edge_lengths(nodes, triangles):
    p = nodes[triangles]
    out = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        d = p[:, a] - p[:, b]
        out.append(np.hypot(d[:, 0], d[:, 1]))
    return np.concatenate(out)


def _edge_table(triangles):
    """Map undirected edge -> list of (triangle index, local edge index)."""
    table = {}
    for t, (i, j, k) in enumerate(triangles):
        for a, b in ((i, j), (j, k), (k, i)):
            key = (a, b) if a < b else (b, a)
            table.setdefault(key, []).append(t)
    return table


def _extract_interface_edges(nodes, triangles, tags):
    table = _edge_table(triangles)
    centroids = nodes[triangles].mean(axis=1)
    edges = []
    for (a, b), owners in sorted(table.items()):
        if len(owners) != 2:
            continue
        t0, t1 = owners
        if tags[t0] == tags[t1]:
            continue
        cm = centroids[t0] if tags[t0] == _TAG_MINUS else centroids[t1]
        # orient so the minus centroid is on the left of a->b
        d = nodes[b] - nodes[a]
        if d[0] * (cm[1] - nodes[a][1]) - d[1] * (cm[0] - nodes[a][0]) > 0:
            edges.append((a, b))
        else:
            edges.append((b, a))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def _extract_boundary_edges(nodes, triangles):
    table = _edge_table(triangles)
    edges = []
    for (a, b), owners in sorted(table.items()):
        if len(owners) != 1:
            continue
        t = owners[0]
        tri = list(triangles[t])
        # orient along the triangle's ccw order so the domain is on the left
        for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            if {u, v} == {a, b}:
                edges.append((u, v))
                break
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def validate_mesh(mesh):
    """Assert every structural invariant; raises GeometryError on failure."""
    areas = _signed_areas(mesh.nodes, mesh.triangles)
    if not np.all(areas > 0):
        raise GeometryError("non-positive triangle area")
    table = _edge_table(mesh.triangles)
    for key, owners in table.items():
        if len(owners) not in (1, 2):
            raise GeometryError(f"edge {key} shared by {len(owners)} triangles")
    bnodes = set(mesh.boundary_nodes().tolist())
    for a, b in mesh.interface_edges:
        key = (min(a, b), max(a, b))
        owners = table.get(key)
        if owners is None or len(owners) != 2:
            raise GeometryError("interface edge not shared by two triangles")
        t0, t1 = owners
        if mesh.tags[t0] == mesh.tags[t1]:
            raise GeometryError("interface edge between same-tag triangles")
    for a, b in mesh.boundary_edges:
        key = (min(a, b), max(a, b))
        if len(table.get(key, [])) != 1:
            raise GeometryError("boundary edge not owned by exactly one triangle")
    # interface chains close up, or terminate on the outer boundary
    degree = {}
    for a, b in mesh.interface_edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    for node, deg in degree.items():
        if deg % 2 == 1 and node not in bnodes:
            raise GeometryError(f"interface polyline ends at interior node {node}")
    # Euler relation for a triangulated disk-topology domain
    v = mesh.n_nodes
    e = len(table)
    f = mesh.n_triangles
    if v - e + f != 1:
        raise GeometryError(f"Euler check failed: V-E+F = {v - e + f}")
    return True


# ---------------------------------------------------------------------------
# structured polar meshes (disk with rings; interface ring at r_sigma)

_BASE_COUNT = 8


def _ring_count(r, h_arc, prev=None):
    want = max(1.0, (2.0 * math.pi * r / _BASE_COUNT) / h_arc)
    count = _BASE_COUNT * (1 << int(math.floor(math.log2(want))))
    if prev is not None:
        count = max(prev, min(count, 2 * prev))
    return count


def _polar_mesh(radii, r_sigma, h_arc):
    """Disk mesh from concentric rings; ring counts double as radius grows."""
    radii = np.asarray(radii, dtype=float)
    if not np.all(np.diff(radii) > 0):
        raise GeometryError("ring radii must be strictly increasing")
    counts = []
    for r in radii:
        counts.append(_ring_count(r, h_arc, counts[-1] if counts else None))

    nodes = [(0.0, 0.0)]
    ring_start = []
    for r, c in zip(radii, counts):
        ring_start.append(len(nodes))
        ang = 2.0 * math.pi * np.arange(c) / c
        nodes.extend(zip(r * np.cos(ang), r * np.sin(ang)))
    nodes = np.array(nodes)

    # tag by ring, not by centroid radius: chord sagitta can exceed thin
    # ring gaps in graded meshes
    def strip_tag(r_out):
        return _TAG_MINUS if r_out <= r_sigma * (1 + 1e-12) else _TAG_PLUS

    tris = []
    tags = []
    c0 = counts[0]
    s0 = ring_start[0]
    for i in range(c0):
        tris.append((0, s0 + i, s0 + (i + 1) % c0))
        tags.append(strip_tag(radii[0]))
    for j in range(len(radii) - 1):
        ca, cb = counts[j], counts[j + 1]
        sa, sb = ring_start[j], ring_start[j + 1]
        tag = strip_tag(radii[j + 1])
        if cb == ca:
            for i in range(ca):
                i1 = (i + 1) % ca
                tris.append((sa + i, sb + i, sb + i1))
                tris.append((sa + i, sb + i1, sa + i1))
                tags.extend((tag, tag))
        elif cb == 2 * ca:
            for i in range(ca):
                i1 = (i + 1) % ca
                b0, b1, b2 = sb + 2 * i, sb + 2 * i + 1, sb + (2 * i + 2) % cb
                tris.append((sa + i, b0, b1))
                tris.append((sa + i, b1, sa + i1))
                tris.append((sa + i1, b1, b2))
                tags.extend((tag, tag, tag))
        else:
            raise GeometryError("ring counts may only stay equal or double")
    return Mesh(nodes, np.array(tris, dtype=np.int64),
                np.array(tags, dtype=np.int64))


def build_annulus(r_sigma, r_outer, n_levels=0):
    """Quasi-uniform disk mesh with the interface ring exactly at r_sigma.

    Interface nodes lie exactly on the circle of radius r_sigma, so the
    discrete minus region is the inscribed polygon. h_max halves per level.
    """
    if not (0 < r_sigma < r_outer):
        raise GeometryError(f"need 0 < r_sigma < r_outer, got {r_sigma}, {r_outer}")
    if n_levels < 0:
        raise GeometryError("n_levels must be >= 0")
    n_in = 4 * (1 << n_levels)
    h = r_sigma / n_in
    n_out = max(1, round((r_outer - r_sigma) / h))
    radii = np.concatenate([
        np.linspace(0.0, r_sigma, n_in + 1)[1:],
        np.linspace(r_sigma, r_outer, n_out + 1)[1:],
    ])
    return _polar_mesh(radii, r_sigma, h)


def build_annulus_graded(r_sigma, r_outer, h_sigma, h_coarse, growth=1.3,
                         h_arc=None):
    """Disk mesh geometrically graded toward the interface from both sides.

    Radial spacing is h_sigma at r_sigma and grows by `growth` per ring until
    it reaches h_coarse; used to resolve skin layers inside the minus disk.
    Cells near the interface are anisotropic on purpose (thin radially).
    """
    if not (0 < r_sigma < r_outer):
        raise GeometryError(f"need 0 < r_sigma < r_outer, got {r_sigma}, {r_outer}")
    if not (0 < h_sigma <= h_coarse):
        raise GeometryError("need 0 < h_sigma <= h_coarse")
    if h_coarse > r_sigma:
        raise GeometryError("h_coarse larger than the inner radius")

    def graded_steps(total):
        steps = []
        h = h_sigma
        remaining = total
        while remaining > 1e-12 * total:
            h_try = min(h, h_coarse, remaining)
            steps.append(h_try)
            remaining -= h_try
            h *= growth
        return steps

    inner = [r_sigma]
    for s in graded_steps(r_sigma):
        inner.append(inner[-1] - s)
    inner = inner[:-1]  # drop the ~0 radius; the center fan fills the rest
    outer = [r_sigma]
    for s in graded_steps(r_outer - r_sigma):
        outer.append(outer[-1] + s)
    outer[-1] = r_outer
    radii = np.array(sorted(inner[1:] + outer))
    if h_arc is None:
        h_arc = h_coarse
    return _polar_mesh(radii, r_sigma, h_arc)


# ---------------------------------------------------------------------------
# checkerboard

def build_square_checkerboard(half_width, n_levels=0):
    """Square (-w, w)^2 with minus = {xy > 0}; interface crosses at origin."""
    if half_width <= 0:
        raise GeometryError("half_width must be positive")
    if n_levels < 0:
        raise GeometryError("n_levels must be >= 0")
    w = float(half_width)
    n = 2 * (1 << n_levels)  # even, so the axes are grid lines
    xs = np.linspace(-w, w, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def node_id(i, j):
        return i * (n + 1) + j

    tris = []
    tags = []
    for i in range(n):
        for j in range(n):
            v00 = node_id(i, j)
            v10 = node_id(i + 1, j)
            v01 = node_id(i, j + 1)
            v11 = node_id(i + 1, j + 1)
            xc = 0.5 * (xs[i] + xs[i + 1])
            yc = 0.5 * (xs[j] + xs[j + 1])
            tag = _TAG_MINUS if xc * yc > 0 else _TAG_PLUS
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
            tags.extend([tag, tag])
    return Mesh(nodes, np.array(tris, dtype=np.int64),
                np.array(tags, dtype=np.int64))


# ---------------------------------------------------------------------------
# square with embedded polygonal interface

def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-14 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4


def _point_in_polygon(points, poly):
    """Ray-casting test, vectorized over points."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xin = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (x < xin)
    return inside


def _dist_to_segments(points, seg_a, seg_b):
    """Min distance from each point to any of the segments."""
    best = np.full(len(points), np.inf)
    for a, b in zip(seg_a, seg_b):
        d = b - a
        ll = d @ d
        t = np.clip(((points - a) @ d) / ll, 0.0, 1.0)
        proj = a + t[:, None] * d
        dist = np.hypot(points[:, 0] - proj[:, 0], points[:, 1] - proj[:, 1])
        best = np.minimum(best, dist)
    return best


def build_square_polygon(half_width, interface_polygon, h_target):
    """Conforming triangulation of (-w, w)^2 with the polygon as mesh edges.

    The polygon boundary is sampled at spacing <= h_target and other points
    are kept out of the diametral disks of those samples, which guarantees
    (Gabriel property) that every polygon segment appears in the Delaunay
    triangulation.
    """
    w = float(half_width)
    if w <= 0:
        raise GeometryError("half_width must be positive")
    poly = np.asarray(interface_polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise GeometryError("polygon needs at least 3 points")
    if np.allclose(poly[0], poly[-1]):
        poly = poly[:-1]
    if len(poly) < 3:
        raise GeometryError("polygon needs at least 3 distinct points")
    n_poly = len(poly)
    for i in range(n_poly):
        a1, a2 = poly[i], poly[(i + 1) % n_poly]
        for j in range(i + 1, n_poly):
            if j == i or (j + 1) % n_poly == i or j == (i + 1) % n_poly:
                continue
            b1, b2 = poly[j], poly[(j + 1) % n_poly]
            if _segments_intersect(a1, a2, b1, b2):
                raise GeometryError("polygon is self-intersecting")
    if np.any(np.abs(poly) >= w):
        raise GeometryError("polygon touches or leaves the square")

    h = float(h_target)
    if h <= 0:
        raise GeometryError("h_target must be positive")
    edge_len = np.hypot(*(np.roll(poly, -1, axis=0) - poly).T)
    if np.min(np.abs(w - np.abs(poly))) < 1.5 * h:
        raise GeometryError("polygon closer than 1.5*h_target to the square; "
                            "reduce h_target")

    # sample the polygon at spacing <= min(h, shortest edge)
    ell = min(h, edge_len.min())
    samples = []
    segments = []
    for k in range(n_poly):
        a, b = poly[k], poly[(k + 1) % n_poly]
        m = max(1, int(math.ceil(edge_len[k] / ell)))
        for t in range(m):
            samples.append(a + (b - a) * (t / m))
    n_s = len(samples)
    samples = np.array(samples)
    segments = [(k, (k + 1) % n_s) for k in range(n_s)]

    # square boundary lattice-aligned with the interior grid
    n_side = max(2, int(math.ceil(2 * w / h)))
    g = 2 * w / n_side
    side = np.linspace(-w, w, n_side + 1)
    boundary_pts = []
    for v in side:
        boundary_pts.extend([(v, -w), (v, w)])
    for v in side[1:-1]:
        boundary_pts.extend([(-w, v), (w, v)])
    boundary_pts = np.array(sorted(set(map(tuple, boundary_pts))))

    gx, gy = np.meshgrid(side[1:-1], side[1:-1], indexing="ij")
    grid_pts = np.column_stack([gx.ravel(), gy.ravel()])
    seg_a = samples[[s[0] for s in segments]]
    seg_b = samples[[s[1] for s in segments]]
    keep = _dist_to_segments(grid_pts, seg_a, seg_b) > 0.75 * ell
    grid_pts = grid_pts[keep]

    points = np.vstack([samples, boundary_pts, grid_pts])
    tri = Delaunay(points)
    simplices = tri.simplices.astype(np.int64)

    edge_set = set()
    for t in simplices:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edge_set.add((min(a, b), max(a, b)))
    for a, b in segments:
        if (min(a, b), max(a, b)) not in edge_set:
            raise GeometryError("failed to recover a polygon edge; "
                                "reduce h_target")

    centroids = points[simplices].mean(axis=1)
    inside = _point_in_polygon(centroids, poly)
    tags = np.where(inside, _TAG_MINUS, _TAG_PLUS)
    return Mesh(points, simplices, tags)


# ---------------------------------------------------------------------------
# text serialization (contrastlab-mesh v1)

def mesh_text(mesh):
    """Serialize to the canonical text format."""
    out = io.StringIO()
    out.write(FORMAT_HEADER + "\n")
    out.write(f"vertices {mesh.n_nodes}\n")
    for x, y in mesh.nodes:
        out.write(f"{x:.17g} {y:.17g}\n")
    out.write(f"triangles {mesh.n_triangles}\n")
    for (i, j, k), tag in zip(mesh.triangles, mesh.tags):
        c = "-" if tag == _TAG_MINUS else "+"
        out.write(f"{i} {j} {k} {c}\n")
    out.write(f"interface_edges {len(mesh.interface_edges)}\n")
    for i, j in mesh.interface_edges:
        out.write(f"{i} {j}\n")
    out.write(f"boundary_edges {len(mesh.boundary_edges)}\n")
    for i, j in mesh.boundary_edges:
        out.write(f"{i} {j}\n")
    return out.getvalue()


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(mesh_text(mesh))


def mesh_sha256(mesh):
    return hashlib.sha256(mesh_text(mesh).encode()).hexdigest()


def _expect(line, what):
    if line is None:
        raise MeshFormatError(f"unexpected end of file, wanted {what}")
    return line


def read_mesh_text(text):
    lines = iter(text.splitlines())

    def next_line():
        return next(lines, None)

    header = _expect(next_line(), "header")
    if header.strip() != FORMAT_HEADER:
        raise MeshFormatError(f"bad header {header!r}")

    def section(name):
        line = _expect(next_line(), f"'{name} N'")
        parts = line.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"expected '{name} N', got {line!r}")
        try:
            return int(parts[1])
        except ValueError:
            raise MeshFormatError(f"bad count in {line!r}") from None

    nv = section("vertices")
    nodes = np.empty((nv, 2))
    for i in range(nv):
        parts = _expect(next_line(), "vertex").split()
        if len(parts) != 2:
            raise MeshFormatError(f"bad vertex line {i}")
        nodes[i] = [float(parts[0]), float(parts[1])]

    nt = section("triangles")
    tris = np.empty((nt, 3), dtype=np.int64)
    tags = np.empty(nt, dtype=np.int64)
    for i in range(nt):
        parts = _expect(next_line(), "triangle").split()
        if len(parts) != 4 or parts[3] not in "+-":
            raise MeshFormatError(f"bad triangle line {i}")
        tris[i] = [int(parts[0]), int(parts[1]), int(parts[2])]
        tags[i] = _TAG_MINUS if parts[3] == "-" else _TAG_PLUS
    if nt and (tris.min() < 0 or tris.max() >= nv):
        raise MeshFormatError("triangle vertex index out of range")

    def edge_block(name):
        ne = section(name)
        edges = np.empty((ne, 2), dtype=np.int64)
        for i in range(ne):
            parts = _expect(next_line(), "edge").split()
            if len(parts) != 2:
                raise MeshFormatError(f"bad {name} line {i}")
            edges[i] = [int(parts[0]), int(parts[1])]
        if ne and (edges.min() < 0 or edges.max() >= nv):
            raise MeshFormatError(f"{name} index out of range")
        return edges

    iface = edge_block("interface_edges")
    bdry = edge_block("boundary_edges")
    trailing = next_line()
    if trailing is not None and trailing.strip():
        raise MeshFormatError(f"trailing content: {trailing!r}")
    return Mesh(nodes, tris, tags, interface_edges=iface, boundary_edges=bdry)


def read_mesh(path):
    with open(path) as fh:
        return read_mesh_text(fh.read())


def swap_tags(mesh):
    """Mesh with plus/minus exchanged; interface edges re-oriented to match."""
    return Mesh(mesh.nodes.copy(), mesh.triangles.copy(), -mesh.tags,
                interface_edges=mesh.interface_edges[:, ::-1].copy(),
                boundary_edges=mesh.boundary_edges.copy())
