import configparser
import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.schemas.experiment import ExperimentConfig, PlotSpec

logger = logging.getLogger(__name__)

NESTED_SECTIONS = ("topology", "environment", "algorithm", "plot")


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case
    return parser


def _field_path(error: ValidationError, prefix: str = "") -> str:
    first = error.errors()[0]
    parts = [str(p) for p in first.get("loc", ()) if p != "__root__"]
    path = ".".join(parts) or "experiment"
    return f"{prefix}.{path}" if prefix else path


def _validate(model, data: Dict[str, Any], prefix: str = ""):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        path = _field_path(e, prefix)
        raise ConfigError(first["msg"], field=path) from e


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse an INI experiment description into a validated ExperimentConfig"""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config file: {e}", field="file") from e
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section", field="experiment")

    known = {"experiment", "sweep", *NESTED_SECTIONS}
    extra = [s for s in parser.sections() if s not in known]
    if extra:
        raise ConfigError(f"unknown sections {extra}", field=extra[0])

    data: Dict[str, Any] = dict(parser.items("experiment"))
    for section in NESTED_SECTIONS:
        if parser.has_section(section):
            data[section] = dict(parser.items(section))
    if parser.has_section("sweep"):
        data["sweep"] = dict(parser.items("sweep"))
    return _validate(ExperimentConfig, data)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", field="file")
    return parse_config_text(path.read_text(encoding="utf-8"))


def load_plot_spec(path: Union[str, Path]) -> PlotSpec:
    """Read a standalone plot spec: a file with a [plot] section"""
    parser = _parser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"malformed plot spec: {e}", field="file") from e
    if not parser.has_section("plot"):
        raise ConfigError("missing [plot] section", field="plot")
    return _validate(PlotSpec, dict(parser.items("plot")), prefix="plot")


def _variant_name(assignment: List[Tuple[str, str]]) -> str:
    if not assignment:
        return "base"
    return "__".join(f"{key.split('.', 1)[1]}-{value}" for key, value in assignment)


def expand_variants(config: ExperimentConfig) -> List[Tuple[str, ExperimentConfig]]:
    """Cartesian product of the [sweep] values, each as a standalone config"""
    keys = list(config.sweep)
    if not keys:
        return [("base", config)]
    base = config.model_dump()
    base["sweep"] = {}
    variants = []
    for values in itertools.product(*(config.sweep[k] for k in keys)):
        assignment = list(zip(keys, values))
        data = {**base, **{s: dict(base[s]) for s in NESTED_SECTIONS if base.get(s) is not None}}
        for key, value in assignment:
            section, name = key.split(".", 1)
            if section == "experiment":
                data[name] = value
            else:
                data[section][name] = value
        name = _variant_name(assignment)
        variants.append((name, _validate(ExperimentConfig, data, prefix=f"sweep[{name}]")))
    logger.info("expanded %d sweep variants over %s", len(variants), ", ".join(keys))
    return variants
