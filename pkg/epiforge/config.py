"""Load run configuration from config.json."""
from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import (
    Any,
    Dict,
    Optional,
    Union,
)

import commentjson as json
from easydict import EasyDict

from .calibration import FitConfig
from .dataset import split_mode
from .nar import NarConfig
from .pinn import PinnConfig
from .quadrature import (
    PAIRINGS,
    BetaSpec,
)

DEFAULT_CONFIG = Path(__file__).parent / "default_config.json"
VARIANTS = ["siar", "siar_aged"]
SPLIT_MODES = ["short", "long", "short_term", "long_term"]
# Groups merged key by key over the defaults
GROUPS = ("calibration", "pinn", "nar", "betaI", "betaA")


class ConfigError(ValueError):
    pass


def load_config(path: Optional[Union[Path, str]] = None) -> EasyDict[str, Any]:
    """Load configuration from a file or a directory holding config.json;
    defaults only when no path is given."""
    return Config.from_path(Path(path)) if path else Config.from_defaults()


def _read(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf8") as stream:
        try:
            data = json.load(stream)
        except (ValueError, json.ParserException, json.JSONLibraryException) as error:
            raise ConfigError(f"Config file {path} is not valid JSON: {error}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return data


def _merge(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(defaults)
    for key, value in overrides.items():
        if key in GROUPS and isinstance(value, dict):
            merged[key] = {**defaults.get(key, {}), **value}
        else:
            merged[key] = value
    return merged


@dataclasses.dataclass()
class Config:
    """Load configuration from a config.json and parse it."""

    params: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def get(self, name, default=None, hasDefault=False, valuesList=None):
        """Get a value from the config with defaults."""
        hasDefault = hasDefault or (default is not None)

        if name in self.params:
            value = self.params[name]
            if valuesList is not None and value not in valuesList:
                raise ConfigError(
                    f"Value for {name} should be one of: {','.join(valuesList)}"
                )
            return value
        if hasDefault:
            return default
        raise ConfigError(f'missing key "{name}" in config')

    @classmethod
    def from_defaults(cls) -> EasyDict[str, Any]:
        return cls.parse(_read(DEFAULT_CONFIG), Path.cwd())

    @classmethod
    def from_path(cls, path) -> EasyDict[str, Any]:
        """Load configuration from the specified file or directory."""
        path = Path(path)
        config_path = path / "config.json" if path.is_dir() else path
        if not config_path.exists():
            raise FileNotFoundError(f"Config file {config_path} not found")
        params = cls.parse(
            _merge(_read(DEFAULT_CONFIG), _read(config_path)), config_path.parent
        )
        params.configPath = str(config_path)
        return params

    @classmethod
    def parse(cls, data: Dict[str, Any], base: Path) -> EasyDict[str, Any]:
        loaded_config = Config(data)

        settings = [
            ("dataPath", None, True),
            ("outputDirectory", "output"),
            ("modelVariant", "siar_aged", False, VARIANTS),
            # Uncertainty
            ("quadratureNodes", 5),
            ("uncertaintyPairing", "paired", False, list(PAIRINGS)),
            # Augmentation
            ("augmentationStep", 0.2),
            ("augmentationWindow", [15, 105]),
            # Experiments
            ("splitMode", "short", False, SPLIT_MODES),
            ("seeds", [0]),
            ("useCache", False),
            ("workers", None, True),
            ("verbose", False),
        ]

        params = {args[0]: loaded_config.get(*args) for args in settings}

        groups = [
            ("calibration", FitConfig),
            ("pinn", PinnConfig),
            ("nar", NarConfig),
            ("betaI", BetaSpec),
            ("betaA", BetaSpec),
        ]
        for name, kind in groups:
            try:
                params[name] = kind.from_dict(loaded_config.get(name, {}))
            except (TypeError, ValueError, KeyError) as error:
                raise ConfigError(f"Invalid {name} settings: {error}")

        # Validation
        if int(params["quadratureNodes"]) < 1:
            raise ConfigError("quadratureNodes must be >= 1")
        if not float(params["augmentationStep"]) > 0:
            raise ConfigError("augmentationStep must be positive")
        window = params["augmentationWindow"]
        if len(window) != 2 or not window[0] <= window[1]:
            raise ConfigError("augmentationWindow must be [start, end]")
        if not params["seeds"] or any(int(seed) != seed for seed in params["seeds"]):
            raise ConfigError("seeds must be a non-empty list of integers")
        params["splitMode"] = split_mode(params["splitMode"])

        # Paths relative to the config file
        if params["dataPath"] is not None:
            params["dataPath"] = str(base / params["dataPath"])
        params["outputDirectory"] = str(base / params["outputDirectory"])
        params["configPath"] = None

        return EasyDict(params)
