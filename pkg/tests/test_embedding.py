import json

import numpy as np
import pytest
import requests

from app.config import Settings
from app.services.embedding_service import (
    LOCAL_MODEL_NAME,
    LocalEmbedder,
    RemoteEmbeddingClient,
    build_embedder,
    cosine_distance,
    embed_local,
    normalize,
    tokenize,
)
from app.utils.exceptions import (
    ConfigurationError,
    EmbeddingDimensionError,
    EmbeddingError,
    EmbeddingResponseError,
    EmbeddingTimeoutError,
)


class StubSession:
    """Stands in for requests.Session; replays canned responses or raises"""

    def __init__(self, *outcomes):
        self.outcomes = list(outcomes)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def make_response(status_code, body):
    response = requests.Response()
    response.status_code = status_code
    response._content = (body if isinstance(body, str) else json.dumps(body)).encode("utf-8")
    return response


def make_client(*outcomes, dimension=3, **kwargs):
    session = StubSession(*outcomes)
    client = RemoteEmbeddingClient(
        endpoint="http://embed.local/v1/embeddings",
        model_name="test-model",
        dimension=dimension,
        timeout_ms=250,
        session=session,
        **kwargs
    )
    return client, session


def test_tokenize_lowercases_and_splits():
    assert tokenize("Tomato at position (0.98, 1.72), state: used_up") == [
        "tomato", "at", "position", "0", "98", "1", "72", "state", "used", "up"
    ]


def test_local_embedding_is_deterministic_and_unit_norm(embedder):
    first = embedder.embed("Apple at position (1.10, 0.96, -2.41), state: none")
    second = LocalEmbedder().embed("Apple at position (1.10, 0.96, -2.41), state: none")
    np.testing.assert_array_equal(first, second)
    assert first.shape == (256,)
    assert np.linalg.norm(first) == pytest.approx(1.0)
    assert embedder.model_name == LOCAL_MODEL_NAME


def test_local_embedding_is_read_only(embedder):
    vector = embedder.embed("mug")
    with pytest.raises(ValueError):
        vector[0] = 2.0


def test_empty_text_maps_to_first_basis_vector(embedder):
    for text in ["", "   ", "--!!"]:
        vector = embedder.embed(text)
        assert vector[0] == 1.0
        assert np.count_nonzero(vector) == 1


def test_local_embedding_matches_golden_buckets(embedder, fixtures_dir):
    golden = json.loads((fixtures_dir / "local_embedding_golden.json").read_text(encoding="utf-8"))
    assert (embedder.dimension, embedder.seed) == (golden["dimension"], golden["seed"])
    for text, buckets in golden["buckets"].items():
        expected = np.zeros(golden["dimension"])
        for index, count in buckets.items():
            expected[int(index)] = count
        np.testing.assert_allclose(embedder.embed(text), expected / np.linalg.norm(expected), atol=1e-12)
    np.testing.assert_array_equal(embed_local("wash an apple"), embedder.embed("wash an apple"))


def test_repeated_tokens_keep_the_direction(embedder):
    np.testing.assert_allclose(embedder.embed("apple apple"), embedder.embed("apple"), atol=1e-12)
    assert cosine_distance(embedder.embed("apple apple"), embedder.embed("apple")) == pytest.approx(0.0, abs=1e-12)


def test_shared_tokens_bring_texts_closer(embedder):
    wash = embedder.embed("wash an apple")
    bring = embedder.embed("bring an apple")
    lamp = embedder.embed("turn on the lamp")
    assert cosine_distance(wash, bring) == pytest.approx(1 / 3)
    assert cosine_distance(wash, lamp) == pytest.approx(1.0)
    assert cosine_distance(wash, bring) < cosine_distance(wash, lamp)
    assert cosine_distance(wash, bring) == cosine_distance(bring, wash)


def test_cosine_distance_bounds(embedder):
    a = embedder.embed("apple")
    assert cosine_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    assert cosine_distance(a, -a) == pytest.approx(2.0)
    assert 0.0 <= cosine_distance(a, embedder.embed("knife")) <= 2.0
    with pytest.raises(ValueError):
        cosine_distance(a, np.ones(3) / np.sqrt(3))


def test_normalize_rejects_zero_vector():
    with pytest.raises(ValueError):
        normalize(np.zeros(4))
    np.testing.assert_allclose(normalize(np.array([3.0, 4.0])), [0.6, 0.8])


def test_remote_success_is_normalized():
    client, session = make_client(make_response(200, {"embedding": [3.0, 0.0, 4.0]}), api_key="secret")
    vector = client.embed("apple")

    np.testing.assert_allclose(vector, [0.6, 0.0, 0.8])
    call = session.calls[0]
    assert call["json"] == {"model": "test-model", "input": "apple"}
    assert call["headers"]["Authorization"] == "Bearer secret"
    assert call["timeout"] == 0.25


def test_remote_accepts_data_envelope():
    client, _ = make_client(make_response(200, {"data": [{"embedding": [0.0, 2.0, 0.0]}]}))
    np.testing.assert_allclose(client.embed("apple"), [0.0, 1.0, 0.0])


def test_remote_timeout():
    client, _ = make_client(requests.exceptions.Timeout("slow"))
    with pytest.raises(EmbeddingTimeoutError):
        client.embed("apple")


def test_remote_retries_before_giving_up():
    client, session = make_client(
        requests.exceptions.ConnectionError("refused"),
        make_response(200, {"embedding": [1.0, 0.0, 0.0]}),
        max_retries=1,
    )
    np.testing.assert_allclose(client.embed("apple"), [1.0, 0.0, 0.0])
    assert len(session.calls) == 2


def test_remote_connection_error():
    client, _ = make_client(requests.exceptions.ConnectionError("refused"))
    with pytest.raises(EmbeddingError):
        client.embed("apple")


def test_remote_error_status():
    client, _ = make_client(make_response(503, "unavailable"))
    with pytest.raises(EmbeddingResponseError) as info:
        client.embed("apple")
    assert info.value.status_code == 503


@pytest.mark.parametrize("body", [
    "not json",
    {"result": [1.0, 0.0, 0.0]},
    {"embedding": [1.0, "x", 0.0]},
    {"embedding": [0.0, 0.0, 0.0]},
    [1.0, 0.0, 0.0],
])
def test_remote_malformed_body(body):
    client, _ = make_client(make_response(200, body))
    with pytest.raises(EmbeddingResponseError):
        client.embed("apple")


def test_remote_dimension_drift():
    client, _ = make_client(make_response(200, {"embedding": [1.0, 0.0]}))
    with pytest.raises(EmbeddingDimensionError) as info:
        client.embed("apple")
    assert (info.value.expected, info.value.received) == (3, 2)


def test_build_embedder():
    assert isinstance(build_embedder(Settings(LOCAL_EMBED_DIMENSION=64)), LocalEmbedder)
    assert build_embedder(Settings(LOCAL_EMBED_DIMENSION=64)).dimension == 64
    with pytest.raises(ConfigurationError):
        build_embedder(Settings(EMBED_ENDPOINT=""), backend="remote")
    with pytest.raises(ConfigurationError):
        build_embedder(Settings(), backend="sparse")

    remote = build_embedder(Settings(EMBED_ENDPOINT="http://embed.local", EMBED_DIMENSION=8), backend="remote")
    assert isinstance(remote, RemoteEmbeddingClient)
    assert remote.dimension == 8
