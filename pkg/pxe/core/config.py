"""Run configuration management for pxe"""

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import yaml

from .errors import ConfigError
from .utils import atomic_write, deep_merge, sha256_text, to_json


@dataclass
class AnalysisThresholds:
    """Calibration constants for the regularity diagnostics"""
    tail_tol: float = 0.1
    reciprocal_tol: float = 0.15
    exponent_tol: float = 0.15
    product_tol: float = 0.2
    pass_fraction: float = 0.8
    degradation_factor: float = 2.0
    baseline_stability: float = 0.1
    min_fit_decades: float = 0.9


@dataclass
class AnalysisConfig:
    """Settings shared by the analysis pipelines"""
    s_values: List[float] = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])
    fit_range: Optional[Tuple[float, float]] = None
    fact_a_r: float = 0.5
    trials: int = 20
    thresholds: AnalysisThresholds = field(default_factory=AnalysisThresholds)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


DEFAULTS: Dict[str, Any] = {
    "grid": {"d": 2, "N": 64, "L": 4.0},
    "medium": {"c0": 1.0, "terms": []},
    "evolution": {
        "Z": 1.0,
        "n": 16,
        "substeps": 4,
        "quadrature": "midpoint",
        "solver_tol": 1e-10,
        "max_iter": 200,
        "record_h2": False,
    },
    "frequency": {"M": 16, "tau_max": 4.0, "tau": 1.0, "filter": None, "z_values": None, "parity": "odd"},
    "data": {"initial": {"kind": "zero"}, "source": {"kind": "zero"}},
    "analysis": {
        "s_values": [0.0, 0.5, 1.0, 1.5, 2.0],
        "fit_range": None,
        "fact_a_r": 0.5,
        "trials": 20,
        "thresholds": asdict(AnalysisThresholds()),
    },
    "inverse": {
        "smooth": {"preset": "example-regularized"},
        "rough": {"preset": "example-rough"},
        "resolutions": [128, 256],
        "tau": 1.0,
        "data": {"kind": "band_limited", "kmax": 6.0},
    },
    "seed": 0,
    "out_dir": "pxe-out",
}


def parse_override(text: str) -> Tuple[str, Any]:
    """
    Parse a dotted override of the form key.path=value

    Args:
        text: Override text; the value is parsed with yaml.safe_load

    Returns:
        Tuple of (dotted key, parsed value)
    """
    if "=" not in text:
        raise ConfigError(f"Override '{text}' must have the form key.path=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"Override '{text}' has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse value of override '{text}': {e}") from e
    return key, value


class RunConfig:
    """Run configuration with dotted access and built-in defaults"""

    def __init__(self, data: Optional[Dict[str, Any]] = None, source: Optional[Path] = None):
        if data is not None and not isinstance(data, dict):
            raise ConfigError("Run configuration must be a mapping")
        self._config: Dict[str, Any] = copy.deepcopy(data or {})
        self.source = source
        self.defaults = copy.deepcopy(DEFAULTS)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """Load a JSON or YAML run file"""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e

        try:
            if path.suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigError(f"Malformed config {path}: {e}") from e

        return cls(data or {}, source=path)

    def save(self, path: Union[str, Path]) -> bool:
        """Save the explicit configuration as JSON"""
        return atomic_write(path, to_json(self._config))

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value with dot notation, falling back to defaults"""
        for tree in (self._config, self.defaults):
            value: Any = tree
            found = True
            for k in key.split('.'):
                if isinstance(value, dict) and k in value:
                    value = value[k]
                else:
                    found = False
                    break
            if found:
                return copy.deepcopy(value)
        return default

    def set(self, key: str, value: Any) -> None:
        """Set configuration value with dot notation support"""
        keys = key.split('.')
        config = self._config

        # Navigate to the parent of the target key
        for k in keys[:-1]:
            if not isinstance(config.get(k), dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def apply_overrides(self, overrides: Iterable[str]) -> None:
        """Apply key.path=value overrides in order"""
        for text in overrides:
            key, value = parse_override(text)
            self.set(key, value)

    def section(self, name: str) -> Dict[str, Any]:
        """Configuration block merged over its defaults"""
        explicit = self._config.get(name, {})
        if explicit is None:
            explicit = {}
        if not isinstance(explicit, dict):
            raise ConfigError(f"Config block '{name}' must be a mapping")
        return deep_merge(copy.deepcopy(self.defaults.get(name, {})), copy.deepcopy(explicit))

    def to_dict(self) -> Dict[str, Any]:
        """Explicit configuration (parsed input plus overrides)"""
        return copy.deepcopy(self._config)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form"""
        return sha256_text(json.dumps(self._config, sort_keys=True, separators=(",", ":")))

    @property
    def seed(self) -> int:
        try:
            return int(self.get("seed", 0))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"seed must be an integer: {e}") from e

    @property
    def out_dir(self) -> Path:
        return Path(self.get("out_dir", "pxe-out"))

    def grid(self):
        """LateralGrid from the grid block"""
        from ..spectral.lateral_grid import LateralGrid

        block = self.section("grid")
        try:
            return LateralGrid(int(block["d"]), int(block["N"]), float(block["L"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid grid block: {e}") from e

    def medium(self, block: Optional[Dict[str, Any]] = None, length: Optional[float] = None):
        """Medium from the medium block (or a given block), support checked against the period"""
        from ..medium.presets import medium_from_spec

        spec = self.section("medium") if block is None else block
        if length is None:
            length = self.grid().length
        return medium_from_spec(spec, length=length)

    def evolution(self):
        """EvolutionConfig from the evolution block"""
        from ..evolution.propagator import EvolutionConfig

        block = self.section("evolution")
        try:
            return EvolutionConfig(
                depth_end=float(block["Z"]),
                macro_steps=int(block["n"]),
                micro_substeps=int(block["substeps"]),
                quadrature=str(block["quadrature"]),
                solver_tol=float(block["solver_tol"]),
                max_iterations=int(block["max_iter"]),
                record_h2=bool(block["record_h2"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid evolution block: {e}") from e

    def frequency(self):
        """FrequencyConfig from the frequency block"""
        from ..evolution.frequency_synthesis import FrequencyConfig

        block = self.section("frequency")
        try:
            z_values = block.get("z_values")
            return FrequencyConfig(
                samples=int(block["M"]),
                tau_max=float(block["tau_max"]),
                filter=block.get("filter"),
                z_values=None if z_values is None else [float(z) for z in z_values],
                parity=str(block.get("parity", "odd")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid frequency block: {e}") from e

    def analysis(self) -> AnalysisConfig:
        """AnalysisConfig from the analysis block"""
        block = self.section("analysis")
        try:
            thresholds = AnalysisThresholds(**block["thresholds"])
            fit_range = block.get("fit_range")
            return AnalysisConfig(
                s_values=[float(s) for s in block["s_values"]],
                fit_range=None if fit_range is None else (float(fit_range[0]), float(fit_range[1])),
                fact_a_r=float(block["fact_a_r"]),
                trials=int(block["trials"]),
                thresholds=thresholds,
            )
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ConfigError(f"Invalid analysis block: {e}") from e
