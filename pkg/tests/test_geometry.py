import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinlayer.errors import AsymmetricSlabs, EtaTooLarge, NonTilingGrid
from spinlayer.geometry import (GeometryConfig, build_geometry,
                                extract_traces, mirror, normal_z, outward_normal)

from conftest import random_unit_field


class TestBuildGeometry:
    def test_basic_tiling(self):
        g = build_geometry(GeometryConfig(1.0, 1.0, 0.5, 0.5, 8, 8, 4, 4))
        assert g.dz == pytest.approx(0.125)
        assert g.spacer_index == 4
        assert g.nz_total == 8
        # exact cell tiling of both slabs
        assert g.nz_minus * g.dz == pytest.approx(g.l_minus)
        assert g.nz_plus * g.dz == pytest.approx(g.l_plus)

    def test_eta_cells(self):
        g = build_geometry(GeometryConfig(1.0, 1.0, 0.5, 0.5, 8, 8, 4, 4, eta=0.25))
        assert g.eta_cells == 2
        assert g.eta_cells * g.dz == pytest.approx(g.eta)

    def test_eta_not_multiple_rejected(self):
        with pytest.raises((NonTilingGrid, EtaTooLarge)):
            build_geometry(GeometryConfig(1.0, 1.0, 0.5, 0.5, 8, 8, 4, 4, eta=0.3))

    def test_eta_too_large(self):
        with pytest.raises(EtaTooLarge):
            build_geometry(GeometryConfig(1.0, 1.0, 0.5, 0.5, 8, 8, 4, 4, eta=0.75))

    def test_mismatched_slab_spacing_rejected(self):
        with pytest.raises(NonTilingGrid):
            build_geometry(GeometryConfig(1.0, 1.0, 0.5, 0.4, 8, 8, 4, 4))

    def test_nonpositive_extent_rejected(self):
        with pytest.raises(NonTilingGrid):
            build_geometry(GeometryConfig(0.0, 1.0, 0.5, 0.5, 8, 8, 4, 4))

    def test_spacer_is_a_face(self):
        g = build_geometry(GeometryConfig(1.0, 1.0, 0.6, 0.4, 4, 4, 3, 2))
        z = g.z_centers()
        assert np.all(z[: g.nz_minus] < 0)
        assert np.all(z[g.nz_minus:] > 0)
        # no cell center sits on the spacer plane
        assert np.abs(z).min() == pytest.approx(g.dz / 2)


class TestTraces:
    def test_uniform(self, small_geom):
        m = np.zeros(small_geom.field_shape())
        m[..., 2] = 1.0
        tr = extract_traces(m, small_geom)
        assert np.allclose(tr.gamma_plus, [0, 0, 1])
        assert np.allclose(tr.gamma_minus, [0, 0, 1])

    def test_sign_split(self, small_geom):
        m = np.zeros(small_geom.field_shape())
        s = small_geom.spacer_index
        m[:, :, s:, 0] = 1.0
        m[:, :, :s, 0] = -1.0
        tr = extract_traces(m, small_geom)
        assert np.allclose(tr.gamma_plus[..., 0], 1.0)
        assert np.allclose(tr.gamma_minus[..., 0], -1.0)

    def test_against_direct_indexing(self, small_geom):
        m = random_unit_field(small_geom, seed=11)
        tr = extract_traces(m, small_geom)
        s = small_geom.spacer_index
        for i in range(small_geom.nx):
            for j in range(small_geom.ny):
                assert np.array_equal(tr.gamma_plus[i, j], m[i, j, s])
                assert np.array_equal(tr.gamma_minus[i, j], m[i, j, s - 1])

    def test_second_order_is_linear_extrapolation(self, small_geom):
        # a field linear in z is reproduced exactly at the face
        m = np.zeros(small_geom.field_shape())
        z = small_geom.z_centers()
        m[..., 0] = 2.0 + 3.0 * z
        tr = extract_traces(m, small_geom, order=2)
        assert np.allclose(tr.gamma_plus[..., 0], 2.0)
        assert np.allclose(tr.gamma_minus[..., 0], 2.0)


class TestMirror:
    def test_involution(self, small_geom):
        m = random_unit_field(small_geom, seed=3)
        assert np.array_equal(mirror(mirror(m, small_geom), small_geom), m)

    def test_uniform_fixed(self, small_geom):
        m = np.zeros(small_geom.field_shape())
        m[..., 1] = 1.0
        assert np.array_equal(mirror(m, small_geom), m)

    def test_sign_flip_profile(self, small_geom):
        m = np.zeros(small_geom.field_shape())
        sz = np.sign(small_geom.z_centers())
        m[..., 0] = sz
        assert np.allclose(mirror(m, small_geom)[..., 0], -sz)

    def test_swaps_traces(self, small_geom):
        m = random_unit_field(small_geom, seed=5)
        tr = extract_traces(m, small_geom)
        trm = extract_traces(mirror(m, small_geom), small_geom)
        assert np.allclose(trm.gamma_plus, tr.gamma_minus)
        assert np.allclose(trm.gamma_minus, tr.gamma_plus)

    def test_asymmetric_slabs_rejected(self):
        g = build_geometry(GeometryConfig(1.0, 1.0, 0.75, 0.5, 4, 4, 3, 2))
        m = np.zeros(g.field_shape())
        with pytest.raises(AsymmetricSlabs):
            mirror(m, g)


class TestNormal:
    def test_orientation(self, small_geom):
        nu = outward_normal(small_geom)
        z = small_geom.z_centers()
        for k, zk in enumerate(z):
            expected = -1.0 if zk > 0 else 1.0
            assert nu[k, 2] == expected

    def test_unit_and_z_only(self, small_geom):
        nu = outward_normal(small_geom)
        assert np.allclose(np.linalg.norm(nu, axis=-1), 1.0)
        assert np.all(nu[:, :2] == 0.0)

    def test_normal_z_matches(self, small_geom):
        assert np.array_equal(normal_z(small_geom), outward_normal(small_geom)[:, 2])


@settings(max_examples=25, deadline=None)
@given(nzm=st.integers(1, 6), nzp=st.integers(1, 6), ec=st.integers(0, 6))
def test_eta_layer_fits_or_raises(nzm, nzp, ec):
    dz = 0.1
    eta = ec * dz if ec else None
    cfg = GeometryConfig(1.0, 1.0, nzm * dz, nzp * dz, 2, 2, nzm, nzp, eta=eta)
    if eta is not None and ec > min(nzm, nzp):
        with pytest.raises(EtaTooLarge):
            build_geometry(cfg)
    else:
        g = build_geometry(cfg)
        assert g.eta_cells == (ec if eta is not None else 0)
        if g.thin_layer_active:
            sl = g.layer_slice()
            assert sl.stop - sl.start == 2 * ec
