"""
Tests for the decode API.
"""

from fastapi.testclient import TestClient

from conftest import HAMMING
from eqml import __version__
from eqml.api import app
from eqml.config import settings

client = TestClient(app)

# min-sum alone fails on this frame, ML is the all-zero word
HARD_FRAME = [1.0, 2.4, -0.7, 2.0, 3.0, -1.2, 2.1]


def test_root_lists_endpoints():
    response = client.get("/")
    assert response.status_code == 200
    assert "/decode" in response.json()["endpoints"]


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy", "version": __version__}


def test_clean_frame_converges_first_pass():
    response = client.post("/decode", json={"llrs": [3.0] * 7, "code_file": str(HAMMING)})
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "converged-first-pass"
    assert data["codeword"] == [0] * 7
    assert data["tests_used"] == 0


def test_reprocessing_recovers_the_ml_word():
    response = client.post(
        "/decode",
        json={"llrs": HARD_FRAME, "code_file": str(HAMMING), "decoder": "eqml-ews", "stop_rule": "lds", "j_max": 3},
    )
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "recovered"
    assert data["codeword"] == [0] * 7
    assert data["tests_used"] == 14
    assert data["metadata"]["stop_rule"] == "lds"
    assert data["metadata"]["selections"][0]["vn"] == 6


def test_baseline_reports_failure():
    response = client.post("/decode", json={"llrs": HARD_FRAME, "code_file": str(HAMMING), "decoder": "ms"})
    assert response.status_code == 200
    assert response.json()["status"] == "failure"
    assert response.json()["codeword"] is None


def test_wrong_length_is_a_bad_request():
    response = client.post("/decode", json={"llrs": [1.0] * 6, "code_file": str(HAMMING)})
    assert response.status_code == 400
    assert "7 variables" in response.json()["detail"]


def test_unknown_decoder_is_rejected():
    response = client.post("/decode", json={"llrs": [1.0] * 7, "code_file": str(HAMMING), "decoder": "magic"})
    assert response.status_code == 422


def test_bare_code_name_is_found_in_the_codes_directory():
    response = client.post("/decode", json={"llrs": [3.0] * 7, "code_file": "hamming_7_4.alist"})
    assert response.status_code == 200
    assert response.json()["status"] == "converged-first-pass"


def test_files_outside_the_codes_directory_are_refused(tmp_path):
    secret = tmp_path / "settings.alist"
    secret.write_text("db_password=hunter2\n")
    for name in (str(secret), "../../../../etc/passwd", "/etc/passwd"):
        response = client.post("/decode", json={"llrs": [1.0] * 7, "code_file": name})
        assert response.status_code == 400
        assert "hunter2" not in response.text
        assert "codes directory" in response.json()["detail"]


def test_parse_errors_name_the_line_only(monkeypatch, tmp_path):
    monkeypatch.setattr(settings, "codes_dir", tmp_path)
    (tmp_path / "broken.alist").write_text("db_password=hunter2\n")
    response = client.post("/decode", json={"llrs": [1.0] * 7, "code_file": "broken.alist"})
    assert response.status_code == 400
    assert "line 1" in response.json()["detail"]
    assert "hunter2" not in response.text


def test_j_max_is_capped():
    response = client.post(
        "/decode",
        json={"llrs": HARD_FRAME, "code_file": str(HAMMING), "stop_rule": "lds", "j_max": settings.j_max_limit + 1},
    )
    assert response.status_code == 422
