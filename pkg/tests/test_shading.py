"""Shading/structure factorization and shading transfer onto a banner."""

import numpy as np
import pytest

from adrelight.errors import GeometryError
from adrelight.imgcore import (
    EPS_DIV,
    IlluminanceMap,
    RgbImage,
    gaussian_filter,
    to_illuminance,
)
from adrelight.shading import (
    STRUCTURE_MAX,
    apply_texture,
    decompose,
    transfer_shading,
    transfer_shading_parts,
)


def rand_rgb(rng, width, height, lo=0.0, hi=1.0):
    return RgbImage(rng.uniform(lo, hi, size=(height, width, 3)))


def rand_map(rng, width, height, lo=0.0, hi=1.0):
    return IlluminanceMap(rng.uniform(lo, hi, size=(height, width)))


class TestDecompose:
    def test_shading_is_the_gaussian_lowpass(self):
        rng = np.random.default_rng(0)
        ill = rand_map(rng, 32, 24)
        parts = decompose(ill, 9)
        assert np.array_equal(parts.shading.data, gaussian_filter(ill, 9).data)

    def test_structure_is_the_guarded_quotient(self):
        rng = np.random.default_rng(1)
        ill = rand_map(rng, 16, 16, lo=0.1, hi=1.0)
        parts = decompose(ill, 5)
        expected = np.clip(ill.data / (parts.shading.data + EPS_DIV), 0.0, STRUCTURE_MAX)
        assert np.array_equal(parts.structure.data, expected)

    def test_reconstruction_identity_where_shading_is_significant(self):
        rng = np.random.default_rng(2)
        for k in (5, 21, 63):
            ill = rand_map(rng, 32, 32)
            parts = decompose(ill, k)
            recon = parts.shading.data * parts.structure.data
            significant = parts.shading.data >= 0.01
            assert significant.any()
            assert np.abs(recon - ill.data)[significant].max() <= 1e-3

    def test_structure_caps_shadow_edge_fireflies(self):
        ill = np.full((16, 16), 1e-3)
        ill[8, 8] = 1.0  # isolated bright pixel over a nearly black field
        parts = decompose(IlluminanceMap(ill), 15)
        assert parts.structure.data[8, 8] == STRUCTURE_MAX

    def test_flat_map_gives_unit_structure_up_to_guard(self):
        ill = IlluminanceMap(np.full((16, 16), 0.5))
        parts = decompose(ill, 9)
        assert np.array_equal(parts.shading.data, ill.data)
        assert np.allclose(parts.structure.data, 0.5 / (0.5 + EPS_DIV), atol=1e-15)

    def test_checkerboard_splits_into_mean_and_contrast(self):
        # Fine 0.2/0.8 tiles under a wide kernel: shading ~ 0.5, so the
        # structure quotient lands near 0.4 / 1.6 away from the borders.
        ys, xs = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
        values = np.where((xs + ys) % 2 == 0, 0.2, 0.8)
        parts = decompose(IlluminanceMap(values), 21)
        inner_shading = parts.shading.data[10:22, 10:22]
        assert np.abs(inner_shading - 0.5).max() < 0.02
        inner_structure = parts.structure.data[10:22, 10:22]
        lows = inner_structure[(xs[10:22, 10:22] + ys[10:22, 10:22]) % 2 == 0]
        highs = inner_structure[(xs[10:22, 10:22] + ys[10:22, 10:22]) % 2 == 1]
        assert np.abs(lows - 0.4).max() < 0.03
        assert np.abs(highs - 1.6).max() < 0.03


class TestTransferShading:
    def test_new_illuminance_is_region_shading_times_banner_structure(self):
        rng = np.random.default_rng(3)
        banner = rand_rgb(rng, 24, 18, lo=0.2, hi=1.0)
        region = rand_rgb(rng, 24, 18, lo=0.1, hi=0.9)
        out, region_parts, banner_parts = transfer_shading_parts(banner, region, 9)
        expected = np.clip(
            region_parts.shading.data * banner_parts.structure.data, 0.0, 1.0
        )
        assert np.allclose(to_illuminance(out).data, expected, atol=1e-12)

    def test_self_transfer_preserves_illuminance(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            img = rand_rgb(rng, 32, 32)
            out = transfer_shading(img, img, 21)
            err = np.abs(to_illuminance(out).data - to_illuminance(img).data)
            assert err.max() <= 1e-3

    def test_output_scales_with_region_brightness(self):
        rng = np.random.default_rng(5)
        banner = rand_rgb(rng, 20, 20, lo=0.3, hi=1.0)
        region = rand_rgb(rng, 20, 20, lo=0.2, hi=0.5)
        dimmed = RgbImage(region.data * 0.5)
        bright_ill = to_illuminance(transfer_shading(banner, region, 9)).data
        dim_ill = to_illuminance(transfer_shading(banner, dimmed, 9)).data
        # Halving the region exactly halves its shading, hence the output.
        assert np.allclose(dim_ill, 0.5 * bright_ill, atol=1e-9)

    def test_flat_banner_takes_region_shading(self):
        rng = np.random.default_rng(6)
        banner = RgbImage(np.full((24, 24, 3), 0.8))
        region = rand_rgb(rng, 24, 24, lo=0.2, hi=0.9)
        out, region_parts, _ = transfer_shading_parts(banner, region, 15)
        # A flat banner has structure 0.8/(0.8+eps) ~ 1, so the result tracks
        # the region's shading almost exactly.
        err = np.abs(to_illuminance(out).data - region_parts.shading.data)
        assert err.max() <= 1e-3

    def test_banner_keeps_its_own_detail_pattern(self):
        rng = np.random.default_rng(7)
        data = np.full((24, 24, 3), 0.9)
        data[8:16, 8:16] = 0.45  # dark glyph block
        banner = RgbImage(data)
        region = rand_rgb(rng, 24, 24, lo=0.4, hi=0.6)
        out = transfer_shading(banner, region, 21)
        ill = to_illuminance(out).data
        assert ill[12, 12] < ill[2, 2]  # glyph stays darker than the field

    def test_rejects_dimension_mismatch(self):
        rng = np.random.default_rng(8)
        with pytest.raises(GeometryError):
            transfer_shading(rand_rgb(rng, 16, 16), rand_rgb(rng, 16, 12), 9)


class TestApplyTexture:
    def test_alpha_endpoints(self):
        rng = np.random.default_rng(9)
        banner = rand_rgb(rng, 16, 12)
        texture = rand_rgb(rng, 16, 12)
        assert np.array_equal(apply_texture(banner, texture, 0.0).data, banner.data)
        assert np.array_equal(apply_texture(banner, texture, 1.0).data, texture.data)

    def test_texture_is_resized_to_banner(self):
        rng = np.random.default_rng(10)
        banner = rand_rgb(rng, 16, 12)
        texture = rand_rgb(rng, 5, 7)
        out = apply_texture(banner, texture, 0.5)
        assert (out.width, out.height) == (16, 12)

    def test_rejects_bad_alpha(self):
        rng = np.random.default_rng(11)
        with pytest.raises(ValueError):
            apply_texture(rand_rgb(rng, 8, 8), rand_rgb(rng, 8, 8), -0.1)
