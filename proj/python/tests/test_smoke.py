import math

import numpy as np
import pytest

import cpfmesh


def test_shapes_and_topology():
    s = cpfmesh.shapes.icosphere(2)
    assert s.euler_characteristic() == 2
    assert s.vertices.shape == (s.vertex_count, 3)
    assert s.faces.shape == (s.face_count, 3)
    assert np.allclose(np.linalg.norm(s.vertices, axis=1), 1.0)


def test_surface_from_arrays_roundtrip(tmp_path):
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.2]], dtype=float)
    f = np.array([[0, 1, 2], [1, 3, 2]])
    s = cpfmesh.TriangleSurface(v, f)
    path = str(tmp_path / "two.obj")
    cpfmesh.write_obj(path, s)
    back = cpfmesh.load_mesh(path)
    assert np.allclose(back.vertices, v)
    assert (back.faces == f).all()


def test_bad_arrays_raise():
    with pytest.raises(ValueError):
        cpfmesh.TriangleSurface(np.zeros((3, 2)), np.array([[0, 1, 2]]))


def test_curvature_on_cylinder():
    c = cpfmesh.compute_curvature(cpfmesh.shapes.cylinder(1.0, 4.0, 48, 24))
    assert c["k_max"].shape == c["k_min"].shape
    interior = [i for i, r in enumerate(c["region"]) if r == "parabolic"]
    assert len(interior) > 0
    assert np.allclose(np.abs(c["k_max"][interior]), 1.0, atol=0.1)
    # Direction of vanishing curvature follows the axis.
    assert np.all(np.abs(c["d_min"][interior][:, 2]) > 0.99)


def test_guiding_field_unit_and_tangent():
    s = cpfmesh.shapes.hyperbolic_paraboloid(8)
    d = cpfmesh.guiding_field(s)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.allclose(np.einsum("ij,ij->i", d, s.face_normals()), 0.0, atol=1e-12)


def test_planarity_and_hausdorff():
    hexagon = np.array([[math.cos(a), math.sin(a), 0] for a in np.arange(6) * math.pi / 3])
    assert cpfmesh.planarity_error(hexagon) < 1e-12
    quad = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0.1]])
    assert cpfmesh.planarity_error(quad) > 1.0

    ref = cpfmesh.shapes.grid(6, 2.0)
    shifted = cpfmesh.PolyMesh(ref.vertices + [0, 0, 0.03], ref.faces.tolist())
    assert cpfmesh.hausdorff(shifted, ref) == pytest.approx(0.03 / ref.bbox_diagonal, abs=1e-15)
    q = cpfmesh.evaluate_quality(shifted, ref)
    assert q["faces"] == ref.face_count
    assert q["max_planarity"] == 0.0


def test_config_validation():
    c = cpfmesh.PipelineConfig()
    assert c.mode == "PH" and c.N == 6
    c.mode = "PQ"
    assert c.N == 4
    with pytest.raises(ValueError):
        c.mode = "tri"
    c.delta = -1
    with pytest.raises(cpfmesh.ConfigError):
        c.validate()


def test_pipeline_quad_mode(tmp_path):
    path = str(tmp_path / "saddle.obj")
    cpfmesh.write_obj(path, cpfmesh.shapes.hyperbolic_paraboloid(8))
    c = cpfmesh.PipelineConfig()
    c.input_path = path
    c.output_dir = str(tmp_path / "out")
    c.mode = "PQ"
    r = cpfmesh.run_pipeline(c)
    assert "dual" not in r["executed"]
    assert r["report"]["maxPlanarity"] <= 1.0
    assert set(r["final"].face_degrees()) == {4}
    assert (tmp_path / "out" / "report.json").exists()


def test_stage_failure_is_reported(tmp_path):
    path = str(tmp_path / "sphere.obj")
    cpfmesh.write_obj(path, cpfmesh.shapes.icosphere(1))
    c = cpfmesh.PipelineConfig()
    c.input_path = path
    c.output_dir = str(tmp_path / "out")
    c.mode = "sanity"
    c.beta_rounds = 2
    with pytest.raises(cpfmesh.StageError, match="fields"):
        cpfmesh.run_pipeline(c)
