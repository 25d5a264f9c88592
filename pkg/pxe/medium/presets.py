"""Medium construction from run-file blocks and packaged presets"""

from functools import lru_cache
from importlib import resources
from typing import Any, Callable, Dict, Optional, Tuple

import yaml

from ..core.errors import ConfigError
from ..core.logger import logger
from ..core.utils import deep_merge
from .medium import (
    ConstantCoefficient,
    ExpressionCoefficient,
    FrequencySymbol,
    Medium,
    MediumTerm,
    build_example_medium,
    constant_symbol,
    inverse_tau_symbol,
)


@lru_cache(maxsize=1)
def _preset_table() -> Dict[str, Any]:
    text = resources.files("pxe").joinpath("data/presets.yaml").read_text()
    return yaml.safe_load(text) or {}


def load_presets() -> Dict[str, Dict[str, Any]]:
    """All packaged medium presets"""
    return {name: dict(block) for name, block in _preset_table().items()}


def preset_names():
    return sorted(_preset_table())


def symbol_from_spec(spec: Optional[Dict[str, Any]]) -> FrequencySymbol:
    spec = spec or {"kind": "one"}
    kind = spec.get("kind", "one")
    if kind == "one":
        return constant_symbol()
    if kind == "inv_tau":
        return inverse_tau_symbol(float(spec.get("eta0", 0.1)), float(spec.get("check_interval", 0.1)))
    raise ConfigError(f"Unknown symbol kind '{kind}'")


def _profile(value: Any, label: str) -> Tuple[Any, Optional[Callable[[float], float]]]:
    """Number, or {value, slope} for a linear C^1 profile in z"""
    if isinstance(value, dict):
        try:
            base = float(value["value"])
            slope = float(value.get("slope", 0.0))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid {label} profile {value}: {e}") from e
        return (lambda z: base + slope * z), (lambda z: slope)
    try:
        return float(value), None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {label} value {value!r}") from e


def medium_from_spec(spec: Dict[str, Any], length: Optional[float] = None) -> Medium:
    """
    Build a Medium from a config block

    Args:
        spec: {c0, r, terms: [...]} or {preset: name, ...overrides}
        length: Lateral period used for the support check of example terms

    Returns:
        Medium instance
    """
    spec = dict(spec or {})
    name = spec.pop("name", None)
    preset = spec.pop("preset", None)
    if preset is not None:
        presets = load_presets()
        if preset not in presets:
            raise ConfigError(f"Unknown medium preset '{preset}' (available: {', '.join(preset_names())})")
        spec = deep_merge(presets[preset], spec)
        name = name or preset
        logger.debug(f"Using medium preset '{preset}'")

    try:
        c0 = float(spec.get("c0", 1.0))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid c0: {e}") from e
    declared_r = spec.get("r")
    declared_r = None if declared_r is None else float(declared_r)
    terms_spec = spec.get("terms") or []
    if not isinstance(terms_spec, list):
        raise ConfigError("medium.terms must be a list")

    terms = []
    for index, term in enumerate(terms_spec):
        kind = term.get("kind")
        symbol = symbol_from_spec(term.get("symbol"))
        if kind == "example":
            chi0, chi0_dz = _profile(term.get("chi0", 1.0), "chi0")
            alpha, alpha_dz = _profile(term.get("alpha", 0.5), "alpha")
            try:
                single = build_example_medium(
                    c0, chi0, alpha,
                    float(term["R1"]), float(term["R2"]),
                    regularize_eps=float(term.get("eps", 0.0)),
                    declared_r=declared_r,
                    symbol=symbol,
                    length=length,
                    chi0_dz=chi0_dz,
                    alpha_dz=alpha_dz,
                )
            except KeyError as e:
                raise ConfigError(f"example term {index} is missing {e}") from e
            terms.extend(single.terms)
            if declared_r is None and len(terms_spec) == 1:
                declared_r = single.declared_r
        elif kind == "constant":
            terms.append(MediumTerm(ConstantCoefficient(float(term.get("value", 0.0))), symbol))
        elif kind == "expr":
            if "expr" not in term:
                raise ConfigError(f"expr term {index} needs an 'expr' entry")
            terms.append(MediumTerm(ExpressionCoefficient(str(term["expr"]), declared_r), symbol))
        else:
            raise ConfigError(f"Unknown medium term kind '{kind}'")

    return Medium(c0=c0, terms=tuple(terms), declared_r=declared_r, name=name or "medium")
