import numpy as np
import pytest

from kslg.grid import (
    CoefficientField,
    Field,
    GridSpec,
    constant_field,
    fields_csv_text,
    grad_sq_faces,
    integrate,
    read_snapshot,
    sample_prototype_mu,
    write_snapshot,
)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(3, (1.0, 1.0, 1.0), (4, 4, 4))
    with pytest.raises(ValueError):
        GridSpec(1, (1.0,), (3,))
    with pytest.raises(ValueError):
        GridSpec(2, (1.0, -1.0), (4, 4))
    g = GridSpec(2, (2.0, 1.0), (8, 4))
    assert g.spacing == (0.25, 0.25)
    assert g.cell_volume == 0.0625
    assert g.volume == 2.0


def test_centers_are_origin_centered():
    g = GridSpec(1, (1.0,), (4,))
    assert np.allclose(g.axis_centers(0), [-0.375, -0.125, 0.125, 0.375])
    # even cell counts never place a center at the origin
    assert np.all(np.abs(g.axis_centers(0)) > 0)


def test_integrate_examples():
    g = GridSpec(1, (1.0,), (4,))
    assert integrate(Field(g, np.array([1.0, 2.0, 3.0, 4.0]))) == pytest.approx(2.5)
    g2 = GridSpec(2, (2.0, 3.0), (8, 6))
    assert integrate(constant_field(g2, 5.0)) == pytest.approx(30.0)
    assert integrate(constant_field(g2, 0.0)) == 0.0


def test_integrate_linear_monotone():
    g = GridSpec(2, (1.0, 1.0), (8, 8))
    rng = np.random.default_rng(0)
    a = Field(g, rng.uniform(0, 1, g.shape))
    b = Field(g, rng.uniform(0, 1, g.shape))
    assert integrate(Field(g, 2 * a.values + b.values)) == pytest.approx(
        2 * integrate(a) + integrate(b)
    )
    assert integrate(Field(g, np.minimum(a.values, b.values))) <= integrate(a)


def test_grad_sq_faces():
    g = GridSpec(1, (1.0,), (4,))
    assert grad_sq_faces(constant_field(g, 3.0)) == 0.0
    # linear-in-index field: slope g over three interior faces
    f = Field(g, np.array([0.0, 1.0, 2.0, 3.0]))
    slope = 1.0 / 0.25
    assert grad_sq_faces(f) == pytest.approx(slope**2 * 0.75)
    mirrored = Field(g, f.values[::-1].copy())
    assert grad_sq_faces(mirrored) == grad_sq_faces(f)


def test_grad_sq_zero_iff_constant():
    g = GridSpec(2, (1.0, 1.0), (4, 4))
    f = constant_field(g, 2.0)
    assert grad_sq_faces(f) == 0.0
    f.values[2, 2] += 1e-8
    assert grad_sq_faces(Field(g, f.values)) > 0.0


def test_sample_prototype_mu():
    g = GridSpec(1, (1.0,), (4,))
    assert np.allclose(sample_prototype_mu(g, 2.0, 0.0).values, 2.0)
    mu = sample_prototype_mu(g, 3.0, 2.0)
    assert mu.values[2] == pytest.approx(3.0 * 0.125**2)
    g2 = GridSpec(2, (4.0, 4.0), (8, 8))
    mu2 = sample_prototype_mu(g2, 1.5, 1.0)
    x = g2.axis_centers(0)
    assert mu2.values[5, 4] == pytest.approx(1.5 * np.hypot(x[5], x[4]))


def test_prototype_mu_refinement_consistency():
    # value at a coarse center equals the value at the coincident fine center
    g = GridSpec(1, (2.0,), (4,))
    fine = g.with_cells_scaled(3)
    mu_c = sample_prototype_mu(g, 1.0, 1.3)
    mu_f = sample_prototype_mu(fine, 1.0, 1.3)
    assert mu_f.values[1::3] == pytest.approx(mu_c.values)


def test_coefficient_field():
    g = GridSpec(1, (1.0,), (4,))
    lam = Field(g, np.array([1.0, -2.0, 0.5, 0.0]))
    mu = constant_field(g, 1.0)
    cf = CoefficientField(lam, mu)
    assert cf.lambda_sup == 2.0
    with pytest.raises(ValueError):
        CoefficientField(lam, Field(g, np.array([1.0, -1.0, 1.0, 1.0])))


def test_snapshot_roundtrip(tmp_path):
    g = GridSpec(2, (2.0, 1.0), (8, 4))
    rng = np.random.default_rng(1)
    u = rng.uniform(0, 2, g.shape)
    v = rng.uniform(0, 1, g.shape)
    path = tmp_path / "snap.kslg"
    write_snapshot(path, g, u, v, 0.625)
    g2, u2, v2, t = read_snapshot(path)
    assert g2 == g
    assert t == 0.625
    assert np.array_equal(u, u2) and np.array_equal(v, v2)


def test_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "bad.kslg"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError):
        read_snapshot(path)


def test_fields_csv():
    g = GridSpec(1, (1.0,), (4,))
    text = fields_csv_text(g, np.arange(4.0), np.ones(4))
    lines = text.strip().split("\n")
    assert lines[0] == "x,u,v"
    assert len(lines) == 5
    assert lines[1].startswith("-0.375,0,1")
