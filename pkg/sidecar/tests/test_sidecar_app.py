"""Endpoint behavior: payload validation, error mapping, and echo semantics."""

import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from adrelight_sidecar import ServiceConfig, ServiceRuntimes, create_app
from adrelight_sidecar.runtimes import BoxFillSegmenter, EchoRelight, HashedNoiseTexture


def png_b64(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def read_png_b64(blob: str) -> Image.Image:
    img = Image.open(io.BytesIO(base64.b64decode(blob)))
    img.load()
    return img


def rand_png(rng, width, height) -> str:
    return png_b64(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(ServiceConfig(echo=True)))


class TestHealth:
    def test_reports_ok_and_capabilities(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {
            "status": "ok",
            "capabilities": ["relight", "segment", "texture"],
        }


class TestRelight:
    def test_echo_returns_the_foreground_pixels(self, client):
        rng = np.random.default_rng(0)
        fg = rng.integers(0, 256, size=(16, 24, 3), dtype=np.uint8)
        resp = client.post(
            "/relight",
            json={
                "background": rand_png(rng, 24, 16),
                "foreground": png_b64(fg),
                "seed": 1,
                "steps": 4,
            },
        )
        assert resp.status_code == 200
        out = read_png_b64(resp.json()["output"])
        assert out.size == (24, 16)
        assert np.array_equal(np.asarray(out), fg)

    def test_seed_and_steps_are_optional(self, client):
        rng = np.random.default_rng(1)
        blob = rand_png(rng, 8, 8)
        resp = client.post("/relight", json={"background": blob, "foreground": blob})
        assert resp.status_code == 200

    def test_identical_requests_yield_identical_bytes(self, client):
        rng = np.random.default_rng(2)
        payload = {
            "background": rand_png(rng, 10, 10),
            "foreground": rand_png(rng, 10, 10),
            "seed": 5,
            "steps": 2,
        }
        first = client.post("/relight", json=payload).json()["output"]
        second = client.post("/relight", json=payload).json()["output"]
        assert first == second

    def test_corrupt_base64_is_rejected_with_422(self, client):
        resp = client.post(
            "/relight",
            json={"background": "!!!", "foreground": "!!!", "seed": 0, "steps": 1},
        )
        assert resp.status_code == 422

    def test_non_image_bytes_are_rejected_with_422(self, client):
        rng = np.random.default_rng(3)
        junk = base64.b64encode(b"definitely not a png").decode("ascii")
        resp = client.post(
            "/relight", json={"background": rand_png(rng, 4, 4), "foreground": junk}
        )
        assert resp.status_code == 422
        assert "foreground" in resp.json()["detail"]

    def test_missing_field_is_rejected_with_422(self, client):
        rng = np.random.default_rng(4)
        resp = client.post("/relight", json={"foreground": rand_png(rng, 4, 4)})
        assert resp.status_code == 422

    def test_oversize_foreground_is_rejected_with_413(self, client):
        rng = np.random.default_rng(5)
        wide = png_b64(np.zeros((1, 4097, 3), dtype=np.uint8))
        resp = client.post(
            "/relight", json={"background": rand_png(rng, 2, 2), "foreground": wide}
        )
        assert resp.status_code == 413
        assert "4096" in resp.json()["detail"]

    def test_oversize_background_is_rejected_with_413(self, client):
        rng = np.random.default_rng(6)
        tall = png_b64(np.zeros((4097, 1, 3), dtype=np.uint8))
        resp = client.post(
            "/relight", json={"background": tall, "foreground": rand_png(rng, 2, 2)}
        )
        assert resp.status_code == 413

    def test_absent_runtime_answers_501_with_capabilities(self):
        partial = ServiceRuntimes(relight=None, segment=BoxFillSegmenter(), texture=None)
        client = TestClient(create_app(ServiceConfig(echo=True), runtimes=partial))
        rng = np.random.default_rng(7)
        blob = rand_png(rng, 4, 4)
        resp = client.post("/relight", json={"background": blob, "foreground": blob})
        assert resp.status_code == 501
        assert resp.json()["detail"]["capabilities"] == ["segment"]

    def test_inference_failure_maps_to_500(self):
        class ExplodingRelight:
            def relight(self, background, foreground, seed, steps):
                raise RuntimeError("inference exploded")

        runtimes = ServiceRuntimes(
            relight=ExplodingRelight(), segment=None, texture=None
        )
        client = TestClient(
            create_app(ServiceConfig(echo=True), runtimes=runtimes),
            raise_server_exceptions=False,
        )
        rng = np.random.default_rng(8)
        blob = rand_png(rng, 4, 4)
        resp = client.post("/relight", json={"background": blob, "foreground": blob})
        assert resp.status_code == 500
        assert "inference" in resp.json()["detail"]


class TestSegment:
    def test_point_prompt_returns_a_frame_sized_mask(self, client):
        rng = np.random.default_rng(10)
        resp = client.post(
            "/segment", json={"image": rand_png(rng, 40, 30), "points": [[20, 15]]}
        )
        assert resp.status_code == 200
        mask = read_png_b64(resp.json()["mask"])
        assert mask.size == (40, 30)
        assert mask.mode == "L"
        arr = np.asarray(mask)
        assert set(np.unique(arr)) <= {0, 255}
        assert arr[15, 20] == 255

    def test_box_prompt_fills_exactly_the_box(self, client):
        rng = np.random.default_rng(11)
        resp = client.post(
            "/segment", json={"image": rand_png(rng, 32, 20), "box": [4, 3, 10, 8]}
        )
        assert resp.status_code == 200
        arr = np.asarray(read_png_b64(resp.json()["mask"]))
        expected = np.zeros((20, 32), dtype=np.uint8)
        expected[3:9, 4:11] = 255
        assert np.array_equal(arr, expected)

    def test_no_prompt_is_rejected_with_422(self, client):
        rng = np.random.default_rng(12)
        resp = client.post("/segment", json={"image": rand_png(rng, 8, 8)})
        assert resp.status_code == 422
        resp = client.post("/segment", json={"image": rand_png(rng, 8, 8), "points": []})
        assert resp.status_code == 422

    def test_out_of_bounds_point_is_rejected_with_422(self, client):
        rng = np.random.default_rng(13)
        resp = client.post(
            "/segment", json={"image": rand_png(rng, 8, 8), "points": [[99, 2]]}
        )
        assert resp.status_code == 422

    def test_invalid_box_is_rejected_with_422(self, client):
        rng = np.random.default_rng(14)
        resp = client.post(
            "/segment", json={"image": rand_png(rng, 8, 8), "box": [5, 5, 2, 2]}
        )
        assert resp.status_code == 422

    def test_absent_runtime_answers_501(self):
        runtimes = ServiceRuntimes(relight=EchoRelight(), segment=None, texture=None)
        client = TestClient(create_app(ServiceConfig(echo=True), runtimes=runtimes))
        rng = np.random.default_rng(15)
        resp = client.post(
            "/segment", json={"image": rand_png(rng, 8, 8), "points": [[1, 1]]}
        )
        assert resp.status_code == 501
        assert resp.json()["detail"]["capabilities"] == ["relight"]


class TestTexture:
    def test_returns_requested_dimensions(self, client):
        resp = client.post(
            "/texture", json={"prompt": "brushed steel", "width": 64, "height": 64}
        )
        assert resp.status_code == 200
        tex = read_png_b64(resp.json()["texture"])
        assert tex.size == (64, 64)
        assert tex.mode == "RGB"

    def test_same_prompt_is_deterministic_and_prompts_differ(self, client):
        body = {"prompt": "mossy stone", "width": 16, "height": 12}
        first = client.post("/texture", json=body).json()["texture"]
        second = client.post("/texture", json=body).json()["texture"]
        assert first == second
        other = client.post(
            "/texture", json={"prompt": "red velvet", "width": 16, "height": 12}
        ).json()["texture"]
        assert other != first

    def test_zero_width_is_rejected_with_422(self, client):
        resp = client.post("/texture", json={"prompt": "x", "width": 0, "height": 8})
        assert resp.status_code == 422

    def test_dimensions_beyond_the_limit_are_rejected_with_422(self, client):
        resp = client.post("/texture", json={"prompt": "x", "width": 4097, "height": 8})
        assert resp.status_code == 422

    def test_absent_runtime_answers_501(self):
        runtimes = ServiceRuntimes(relight=EchoRelight(), segment=None, texture=None)
        client = TestClient(create_app(ServiceConfig(echo=True), runtimes=runtimes))
        resp = client.post("/texture", json={"prompt": "x", "width": 8, "height": 8})
        assert resp.status_code == 501


class TestRouting:
    def test_unknown_endpoint_is_a_404(self, client):
        resp = client.post("/paint", json={})
        assert resp.status_code == 404
