"""Geometry and triangulation tests against exact area formulas."""

import math

import numpy as np
import pytest

from twistband import MeshError, SectionGeometry, build_mesh, preset


class TestGeometry:
    def test_rectangle_area_and_diameter(self):
        g = SectionGeometry.rectangle(1.0, 0.7)
        assert g.area == pytest.approx(0.7)
        assert g.diameter == pytest.approx(math.hypot(1.0, 0.7))

    def test_rejects_degenerate(self):
        with pytest.raises(MeshError):
            SectionGeometry.rectangle(0.0, 1.0)
        with pytest.raises(MeshError):
            SectionGeometry.disk(-1.0)
        with pytest.raises(MeshError):
            SectionGeometry.triangle((0, 0), (1, 0), (2, 0))
        with pytest.raises(MeshError):
            SectionGeometry.polygon([(0, 0), (1, 0), (1, 0), (0, 1)])

    def test_rejects_self_intersecting_polygon(self):
        # symmetric bowtie has zero signed area
        with pytest.raises(MeshError):
            SectionGeometry.polygon([(0, 0), (1, 1), (1, 0), (0, 1)])
        # skewed bowtie has nonzero area but crossing edges
        with pytest.raises(MeshError, match="self-intersect"):
            SectionGeometry.polygon([(0, 0), (2, 2), (2, 0), (0, 1)])

    def test_from_dict(self):
        g = SectionGeometry.from_dict(
            {"kind": "rectangle", "a": 1.0, "b": 0.7, "offset": [0.1, -0.2]}
        )
        assert g.kind == "rectangle"
        assert g.offset == (0.1, -0.2)
        with pytest.raises(MeshError):
            SectionGeometry.from_dict({"kind": "pentagon"})

    def test_presets(self):
        for name in ("rectangle", "disk", "triangle", "lshape"):
            assert preset(name).area > 0
        with pytest.raises(MeshError):
            preset("hexagon")


class TestBuildMesh:
    def test_rectangle_exact_area(self):
        mesh = build_mesh(SectionGeometry.rectangle(1.0, 0.7), 0.05)
        assert abs(mesh.area_total - 0.7) < 1e-9
        assert mesh.h <= 0.05 * (1 + 1e-12)

    def test_disk_area_inscribed_polygon_tolerance(self):
        mesh = build_mesh(SectionGeometry.disk(1.0), 0.05)
        n = mesh.boundary_edges.shape[0]
        inscribed = 0.5 * n * math.sin(2.0 * math.pi / n)
        # the mesh triangulates exactly the inscribed n-gon ...
        assert abs(mesh.area_total - inscribed) < 1e-9
        # ... whose deficit from the disk sets the tolerance, below 1e-3 here
        assert abs(mesh.area_total - math.pi) <= math.pi - inscribed + 1e-12
        assert abs(mesh.area_total - math.pi) < 1e-3

    def test_triangle_shoelace_area(self):
        mesh = build_mesh(preset("triangle"), 0.05)
        assert abs(mesh.area_total - 0.585) < 1e-9

    def test_lshape_area(self):
        mesh = build_mesh(preset("lshape"), 0.05)
        assert abs(mesh.area_total - 0.75) < 1e-9

    def test_positive_areas_and_boundary_uniqueness(self):
        for name in ("rectangle", "disk", "triangle", "lshape"):
            mesh = build_mesh(preset(name), 0.08)
            assert np.all(mesh.areas > 0)
            counts = {}
            for t in mesh.triangles:
                for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                    counts[(min(a, b), max(a, b))] = counts.get((min(a, b), max(a, b)), 0) + 1
            boundary = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
            assert boundary == {e for e, c in counts.items() if c == 1}

    def test_boundary_normals_outward_unit(self):
        mesh = build_mesh(preset("triangle"), 0.08)
        centroid = mesh.vertices.mean(axis=0)
        for (a, b), nu in zip(mesh.boundary_edges, mesh.boundary_normals):
            assert np.hypot(*nu) == pytest.approx(1.0, abs=1e-12)
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            assert np.dot(nu, mid - centroid) > 0

    def test_offset_translates_vertices(self):
        base = build_mesh(SectionGeometry.rectangle(1.0, 0.7), 0.1)
        moved = build_mesh(SectionGeometry.rectangle(1.0, 0.7, offset=(0.3, -0.1)), 0.1)
        assert np.allclose(moved.vertices, base.vertices + np.array([0.3, -0.1]))
        assert np.array_equal(moved.triangles, base.triangles)

    def test_too_coarse_rejected(self):
        with pytest.raises(MeshError, match="coarse"):
            build_mesh(SectionGeometry.rectangle(1.0, 0.7), 0.2)

    def test_deterministic(self):
        m1 = build_mesh(preset("lshape"), 0.06)
        m2 = build_mesh(preset("lshape"), 0.06)
        assert np.array_equal(m1.vertices, m2.vertices)
        assert np.array_equal(m1.triangles, m2.triangles)
