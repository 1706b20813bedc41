from pathlib import Path

import pytest

from app.core.exceptions import ConfigError
from app.schemas.experiment import ExperimentConfig
from app.services.config_loader import expand_variants, load_config, load_plot_spec, parse_config_text


def test_parse_matching_config(matching_config_text):
    """Lists, seed ranges and nested sections are parsed"""
    config = parse_config_text(matching_config_text)
    assert config.kind == "matching"
    assert config.algorithms == ["greedy", "random"]
    assert config.seeds == [0, 1, 2]
    assert config.stride == 4
    assert config.algorithm.n_nodes == 16
    assert config.algorithm.prior == pytest.approx(0.4)


def test_parse_coop_config(coop_config_text):
    config = parse_config_text(coop_config_text)
    assert config.topology.kind == "r_regular"
    assert config.topology.delay == 1
    assert config.environment.n_arms == 4
    assert config.horizon == 40


def test_default_algorithms_per_kind():
    """An empty algorithm list selects every algorithm of the kind"""
    config = ExperimentConfig(kind="coop", horizon=10)
    assert config.algorithms == ["cftrl", "dftrl", "exp3_coop", "center_exp3"]


def test_seed_list_forms():
    """Ranges and single seeds mix"""
    config = ExperimentConfig(kind="chain", seeds="0..2, 7", algorithm={"n_nodes": 8, "prior": 0.5})
    assert config.seeds == [0, 1, 2, 7]


@pytest.mark.parametrize(
    "body, field",
    [
        ("[experiment]\nkind = coop\nhorizon = 10\n[topology]\nkind = torus\n", "topology.kind"),
        ("[experiment]\nkind = coop\nhorizon = 0\n", "horizon"),
        ("[experiment]\nkind = matching\n[algorithm]\nn_nodes = 7\nprior = 0.5\n", "algorithm.n_nodes"),
        ("[experiment]\nkind = coop\nalgorithms = ucb\nhorizon = 10\n", "experiment"),
        ("[experiment]\nkind = coop\nhorizon = 10\n[extras]\nx = 1\n", "extras"),
        ("[topology]\nkind = star\n", "experiment"),
    ],
)
def test_config_errors_carry_field_path(body, field):
    """Invalid configs raise ConfigError naming the offending field"""
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text(body)
    assert excinfo.value.field == field
    assert str(excinfo.value).startswith(f"{field}: ")


def test_horizon_cap():
    """Horizons beyond the desk-scale cap need an explicit override"""
    with pytest.raises(ConfigError):
        parse_config_text("[experiment]\nkind = coop\nhorizon = 20000\n")
    config = parse_config_text("[experiment]\nkind = coop\nhorizon = 20000\nallow_long_horizon = true\n")
    assert config.horizon == 20000


def test_environment_must_fit_kind():
    """OCO environments belong to fedoco only"""
    with pytest.raises(ConfigError):
        parse_config_text("[experiment]\nkind = fedexp3\nhorizon = 10\n[environment]\nkind = oco_linear\n")


def test_malformed_file():
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text("kind = coop\n")
    assert excinfo.value.field == "file"


def test_load_config_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_sweep_expansion(coop_config_text):
    """The sweep is a Cartesian product with readable variant names"""
    text = coop_config_text + "\n[sweep]\nenvironment.n_arms = 3, 5\ntopology.delay = 0, 2\n"
    variants = expand_variants(parse_config_text(text))
    names = [name for name, _ in variants]
    assert names == [
        "n_arms-3__delay-0",
        "n_arms-3__delay-2",
        "n_arms-5__delay-0",
        "n_arms-5__delay-2",
    ]
    config = dict(variants)["n_arms-5__delay-2"]
    assert config.environment.n_arms == 5
    assert config.topology.delay == 2
    assert config.sweep == {}


def test_sweep_without_keys_is_base(matching_config_text):
    assert [name for name, _ in expand_variants(parse_config_text(matching_config_text))] == ["base"]


def test_sweep_invalid_value_names_variant(coop_config_text):
    text = coop_config_text + "\n[sweep]\ntopology.delay = 1, -1\n"
    with pytest.raises(ConfigError) as excinfo:
        expand_variants(parse_config_text(text))
    assert excinfo.value.field.startswith("sweep[delay--1]")


def test_sweep_key_shape():
    with pytest.raises(ConfigError):
        parse_config_text("[experiment]\nkind = coop\nhorizon = 10\n[sweep]\nn_arms = 3, 4\n")


def test_plot_spec(tmp_path):
    """A standalone [plot] file with overlays and log axes"""
    path = tmp_path / "plot.ini"
    path.write_text("[plot]\nx = n\ny = value_mean\nlog_x = true\noverlays = a.csv, b.csv\n")
    spec = load_plot_spec(path)
    assert spec.log_x and not spec.log_y
    assert spec.overlays == ["a.csv", "b.csv"]

    path.write_text("[plot]\nfilter_column = metric\n")
    with pytest.raises(ConfigError):
        load_plot_spec(path)


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    """Every example config validates and expands"""
    config = load_config(path)
    assert expand_variants(config)
