"""
Run configuration
Defaults, then SDCERT_* environment variables (.env supported), then an optional
JSON config file, then CLI flag overrides
"""
import json
import os
from dataclasses import dataclass, asdict, fields, replace
from typing import Optional

from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

VERBOSITY_LEVELS = ('quiet', 'normal', 'verbose')

# environment variable -> field
ENV_KEYS = {
    'SDCERT_TOL_RANK': 'tol_rank',
    'SDCERT_TOL_PSD': 'tol_psd',
    'SDCERT_TOL_FEAS': 'tol_feas',
    'SDCERT_TOL_PD': 'tol_pd',
    'SDCERT_TOL_OBJ': 'tol_obj',
    'SDCERT_TOL_SUPPORT': 'tol_support',
    'SDCERT_TOL_INFEAS': 'tol_infeas',
    'SDCERT_CYCLE_CAP': 'cycle_cap',
    'SDCERT_MAX_ITERS': 'max_iters',
    'SDCERT_VERBOSITY': 'verbosity',
}


@dataclass(frozen=True)
class RunConfig:
    """Tolerances and caps shared by every module"""
    tol_rank: float = 1e-8
    tol_psd: float = 1e-8
    tol_feas: float = 1e-7
    tol_pd: float = 1e-7
    tol_obj: float = 1e-8
    tol_support: float = 1e-6
    tol_infeas: float = 1e-6
    cycle_cap: int = 12
    max_iters: int = 200
    step_frac: float = 0.98
    verbosity: str = 'normal'

    def validate(self):
        """
        Check every field

        Returns:
            self, so calls can be chained

        Raises:
            ConfigError: if a tolerance is not positive or a cap is below one
        """
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.startswith('tol_') and not (isinstance(value, (int, float)) and value > 0):
                raise ConfigError(f"{f.name} must be > 0, got {value!r}")
        for name in ('cycle_cap', 'max_iters'):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if not 0 < self.step_frac < 1:
            raise ConfigError(f"step_frac must lie in (0, 1), got {self.step_frac!r}")
        if self.verbosity not in VERBOSITY_LEVELS:
            raise ConfigError(f"verbosity must be one of {VERBOSITY_LEVELS}")
        return self

    def with_overrides(self, **overrides):
        """Return a validated copy; None values are ignored"""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        changes = {k: _coerce(k, v) for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate()

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_env(cls):
        """Build a config from SDCERT_* environment variables"""
        overrides = {}
        for env_key, name in ENV_KEYS.items():
            raw = os.getenv(env_key)
            if raw is not None and raw != '':
                overrides[name] = raw
        return cls().with_overrides(**overrides)

    @classmethod
    def from_file(cls, path, base: Optional['RunConfig'] = None):
        """
        Layer a static JSON config file over a base config

        Args:
            path: JSON file with a flat object of RunConfig fields
            base: Config to start from (defaults to the environment config)

        Raises:
            ConfigError: unreadable file, bad JSON or unknown keys
        """
        base = base if base is not None else cls.from_env()
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        return base.with_overrides(**data)


def _coerce(name, value):
    """Convert environment strings to the field's type"""
    if name == 'verbosity':
        return str(value)
    if name in ('cycle_cap', 'max_iters'):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}")


# Process-wide default config
_config_instance = None


def get_config() -> RunConfig:
    """Get or create the default config instance"""
    global _config_instance
    if _config_instance is None:
        config_path = os.getenv('SDCERT_CONFIG')
        if config_path:
            _config_instance = RunConfig.from_file(config_path)
        else:
            _config_instance = RunConfig.from_env()
    return _config_instance


def set_config(config: RunConfig):
    """Replace the process-wide default (used by the CLI after flag parsing)"""
    global _config_instance
    _config_instance = config.validate()
    return _config_instance
