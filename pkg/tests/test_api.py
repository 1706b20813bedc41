import pytest


def test_list_bounds(client):
    """Every evaluator is listed"""
    response = client.get("/api/v1/bounds/")
    assert response.status_code == 200

    data = response.json()
    assert "or_asymptotic" in data
    assert "and_bound" in data
    assert data == sorted(data)


def test_evaluate_bound(client):
    """Query parameters are coerced to numbers"""
    response = client.get("/api/v1/bounds/or_asymptotic", params={"n": 1, "p": 0.5})
    assert response.status_code == 200

    data = response.json()
    assert data["name"] == "or_asymptotic"
    assert data["params"] == {"n": 1, "p": 0.5}
    assert data["value"] == pytest.approx(3 / 128)


def test_evaluate_bound_string_parameter(client):
    response = client.get("/api/v1/bounds/random_matching", params={"n": 100, "p": 0.5, "fn": "and"})
    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(12.5)


def test_unknown_bound(client):
    response = client.get("/api/v1/bounds/nonexistent", params={"n": 1})
    assert response.status_code == 404


def test_bound_bad_parameters(client):
    """Missing or invalid parameters are client errors"""
    response = client.get("/api/v1/bounds/or_asymptotic", params={"n": 1})
    assert response.status_code == 400

    response = client.get("/api/v1/bounds/or_asymptotic", params={"n": 1, "p": 2})
    assert response.status_code == 400


def test_bound_numeric_error(client):
    """sigma2 = 1 never mixes"""
    response = client.get("/api/v1/bounds/fedexp3_bound", params={"n_arms": 5, "horizon": 100, "sigma2": 1, "n_agents": 4})
    assert response.status_code == 422


def test_graph_spectrum(client):
    """K_4 has Laplacian spectrum {4, 4, 4, 0} and independence number 1"""
    response = client.post("/api/v1/graphs/spectrum", json={"kind": "complete", "n_agents": 4})
    assert response.status_code == 200

    data = response.json()
    assert data["n_agents"] == 4
    assert data["n_edges"] == 6
    assert data["laplacian_eigenvalues"] == pytest.approx([4.0, 4.0, 4.0, 0.0], abs=1e-9)
    assert data["algebraic_connectivity"] == pytest.approx(4.0)
    assert data["independence_number"] == 1
    assert data["independence_exact"] is True


def test_graph_spectrum_invalid(client):
    """Infeasible topologies are rejected; unknown kinds fail validation"""
    response = client.post("/api/v1/graphs/spectrum", json={"kind": "r_regular", "n_agents": 5, "degree": 3})
    assert response.status_code == 400

    response = client.post("/api/v1/graphs/spectrum", json={"kind": "torus", "n_agents": 5})
    assert response.status_code == 422


def test_run_small_experiment(client):
    """A matching run comes back with per-algorithm finals"""
    config = {
        "kind": "matching",
        "algorithms": ["greedy", "random"],
        "seeds": [0, 1],
        "algorithm": {"value_fn": "or", "n_nodes": 12, "prior": 0.4},
    }
    response = client.post("/api/v1/experiments/", json=config)
    assert response.status_code == 200

    data = response.json()
    assert data["variants"] == ["base"]
    assert data["trace_count"] == 4
    algorithms = {row["algorithm"] for row in data["finals"]}
    assert algorithms == {"greedy", "random"}
    assert all(row["count"] == 2 for row in data["finals"])
    assert "variants" in data["metadata"]


def test_run_experiment_invalid(client):
    """Schema errors are 422; configs that fail while building are 400"""
    response = client.post("/api/v1/experiments/", json={"kind": "coop"})
    assert response.status_code == 422

    config = {"kind": "coop", "horizon": 10, "topology": {"kind": "complete", "n_agents": 3}}
    response = client.post("/api/v1/experiments/", json=config)
    assert response.status_code == 400
