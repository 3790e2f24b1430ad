"""HTTP gateway tests: the three-step flow, validation, and persistence."""

import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from culturecolor.colors import rgb_to_lab
from culturecolor.dataset.records import DEFAULT_CATEGORIES
from culturecolor.service import ModelRegistry, ServiceConfig, create_app


@pytest.fixture()
def client(tmp_path, toy_palette_model, toy_colorizer_model):
    registry = ModelRegistry()
    registry.palette_model = toy_palette_model
    registry.colorizer_model = toy_colorizer_model
    config = ServiceConfig(data_dir=str(tmp_path / "data"))
    app = create_app(config, registry=registry)
    return TestClient(app)


@pytest.fixture()
def bare_client(tmp_path):
    config = ServiceConfig(data_dir=str(tmp_path / "data"))
    return TestClient(create_app(config, registry=ModelRegistry()))


def upload(png_bytes, **form):
    return {"files": {"image": ("input.png", png_bytes, "image/png")}, "data": form}


def make_session(client, sample_png, seed=7):
    response = client.post(
        "/v1/palette",
        files={"image": ("input.png", sample_png, "image/png")},
        data={"text": "dark neon", "category": "punk", "seed": str(seed)},
    )
    assert response.status_code == 200, response.text
    return response.json()


class TestCategories:
    def test_default_config_has_14(self, client):
        response = client.get("/v1/categories")
        assert response.status_code == 200
        assert response.json() == DEFAULT_CATEGORIES
        assert len(response.json()) == 14

    def test_custom_config(self, tmp_path):
        config = ServiceConfig(categories=["a", "b", "c"], data_dir=str(tmp_path / "d"))
        client = TestClient(create_app(config, registry=ModelRegistry()))
        assert client.get("/v1/categories").json() == ["a", "b", "c"]

    def test_stable_across_calls(self, client):
        assert client.get("/v1/categories").json() == client.get("/v1/categories").json()

    def test_mismatched_model_categories_rejected(self, tmp_path, toy_palette_model):
        registry = ModelRegistry()
        registry.palette_model = toy_palette_model
        config = ServiceConfig(categories=["only", "three", "cats"], data_dir=str(tmp_path / "d"))
        with pytest.raises(ValueError, match="categories"):
            create_app(config, registry=registry)


class TestPaletteEndpoint:
    def test_returns_five_hex_colors(self, client, sample_png):
        body = make_session(client, sample_png)
        assert len(body["palette"]) == 5
        for value in body["palette"]:
            assert value.startswith("#") and len(value) == 7
        assert body["session_id"]
        assert body["model_version"]

    def test_unknown_category_400_names_field(self, client, sample_png):
        response = client.post(
            "/v1/palette",
            files={"image": ("x.png", sample_png, "image/png")},
            data={"text": "t", "category": "polka"},
        )
        assert response.status_code == 400
        assert response.json()["detail"]["field"] == "category"

    def test_bad_image_400(self, client):
        response = client.post(
            "/v1/palette",
            files={"image": ("x.png", b"not a png", "image/png")},
            data={"text": "t", "category": "punk"},
        )
        assert response.status_code == 400
        assert response.json()["detail"]["field"] == "image"

    def test_503_without_model(self, bare_client, sample_png):
        response = bare_client.post(
            "/v1/palette",
            files={"image": ("x.png", sample_png, "image/png")},
            data={"text": "t", "category": "punk"},
        )
        assert response.status_code == 503

    def test_same_seed_same_palette(self, client, sample_png):
        a = make_session(client, sample_png, seed=42)
        b = make_session(client, sample_png, seed=42)
        assert a["palette"] == b["palette"]


ADJUSTED = ["#102030", "#405060", "#708090", "#A0B0C0", "#D0E0F0"]


class TestAdjustEndpoint:
    def test_adjust_records_feedback_line(self, client, sample_png, tmp_path):
        body = make_session(client, sample_png)
        feedback_path = client.app.state.feedback.path
        before = feedback_path.read_text().count("\n") if feedback_path.exists() else 0

        response = client.post(
            "/v1/palette/adjust",
            json={"session_id": body["session_id"], "palette": ADJUSTED},
        )
        assert response.status_code == 204
        lines = feedback_path.read_text().splitlines()
        assert len(lines) == before + 1
        record = json.loads(lines[-1])
        assert record["adjusted_palette"] == ADJUSTED
        assert record["original_palette"] == body["palette"]
        assert record["session_id"] == body["session_id"]
        assert record["model_version"] == body["model_version"]
        assert set(record["context"]) == {"text", "category", "image_sha256"}

    def test_one_line_per_call_and_last_wins(self, client, sample_png):
        body = make_session(client, sample_png)
        feedback_path = client.app.state.feedback.path
        second = ["#111111", "#222222", "#333333", "#444444", "#555555"]
        for palette in (ADJUSTED, second):
            assert client.post(
                "/v1/palette/adjust",
                json={"session_id": body["session_id"], "palette": palette},
            ).status_code == 204
        lines = feedback_path.read_text().splitlines()
        assert len(lines) == 2
        session = client.app.state.sessions.get(body["session_id"])
        assert session.active_palette.to_hex() == second

    def test_unknown_session_404(self, client):
        response = client.post(
            "/v1/palette/adjust", json={"session_id": "nope", "palette": ADJUSTED}
        )
        assert response.status_code == 404

    def test_invalid_palette_400(self, client, sample_png):
        body = make_session(client, sample_png)
        response = client.post(
            "/v1/palette/adjust",
            json={"session_id": body["session_id"], "palette": ["#xyz"] * 5},
        )
        assert response.status_code == 400

    def test_image_stored_by_content_hash(self, client, sample_png):
        body = make_session(client, sample_png)
        session = client.app.state.sessions.get(body["session_id"])
        stored = client.app.state.feedback.images_dir / f"{session.image_sha256}.png"
        assert stored.exists()
        assert stored.read_bytes() == sample_png


class TestColorizeEndpoint:
    def test_session_round_trip_dimensions_and_luminance(self, client, sample_png):
        body = make_session(client, sample_png)
        client.post("/v1/palette/adjust", json={"session_id": body["session_id"], "palette": ADJUSTED})
        response = client.post(
            "/v1/colorize", data={"session_id": body["session_id"], "seed": "3"}
        )
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        assert "x-latency-ms" in response.headers

        uploaded = np.asarray(Image.open(io.BytesIO(sample_png)).convert("RGB"), dtype=np.float64)
        out = np.asarray(Image.open(io.BytesIO(response.content)).convert("RGB"), dtype=np.float64)
        assert out.shape == uploaded.shape

        # The Lab luminance of the returned image matches the upload's.
        uploaded_l = rgb_to_lab(uploaded / 255.0)[..., 0] / 100.0
        decoded_l = rgb_to_lab(out / 255.0)[..., 0] / 100.0
        assert np.abs(decoded_l - uploaded_l).max() <= 1e-3

    def test_explicit_palette_bypasses_session(self, client, sample_png):
        response = client.post(
            "/v1/colorize",
            files={"image": ("x.png", sample_png, "image/png")},
            data={"palette": json.dumps(ADJUSTED), "seed": "1", "category": "punk"},
        )
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"

    def test_unknown_session_404(self, client):
        assert client.post("/v1/colorize", data={"session_id": "nope"}).status_code == 404

    def test_missing_inputs_400(self, client):
        assert client.post("/v1/colorize", data={}).status_code == 400

    def test_malformed_palette_400(self, client, sample_png):
        response = client.post(
            "/v1/colorize",
            files={"image": ("x.png", sample_png, "image/png")},
            data={"palette": "#111111,#222222"},
        )
        assert response.status_code == 400

    def test_503_without_colorizer(self, tmp_path, toy_palette_model, sample_png):
        registry = ModelRegistry()
        registry.palette_model = toy_palette_model
        client = TestClient(create_app(ServiceConfig(data_dir=str(tmp_path / "d")), registry=registry))
        body = make_session(client, sample_png)
        assert client.post("/v1/colorize", data={"session_id": body["session_id"]}).status_code == 503

    def test_latency_metric_recorded(self, client, sample_png):
        body = make_session(client, sample_png)
        before = client.app.state.metrics["colorize_requests"]
        client.post("/v1/colorize", data={"session_id": body["session_id"]})
        assert client.app.state.metrics["colorize_requests"] == before + 1
        assert client.app.state.metrics["colorize_latency_ms_total"] > 0.0


class TestConfig:
    def test_load_with_env_overrides(self, tmp_path, monkeypatch):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"port": 9000, "categories": ["x", "y"]}))
        monkeypatch.setenv("CULTURECOLOR_PORT", "9100")
        monkeypatch.setenv("CULTURECOLOR_DATA_DIR", str(tmp_path / "override"))
        config = ServiceConfig.load(config_path)
        assert config.port == 9100
        assert config.data_dir == str(tmp_path / "override")
        assert config.categories == ["x", "y"]

    def test_unknown_keys_rejected(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"prot": 1}))
        with pytest.raises(ValueError, match="unknown config keys"):
            ServiceConfig.load(config_path)

    def test_categories_path_indirection(self, tmp_path):
        cats = tmp_path / "cats.json"
        cats.write_text(json.dumps(["m", "n"]))
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"categories_path": str(cats)}))
        assert ServiceConfig.load(config_path).categories == ["m", "n"]
