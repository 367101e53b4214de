"""Config-file loading. Keys mirror the long CLI flags (dashes or underscores)."""
from __future__ import annotations

from pathlib import Path

import yaml

from ..errors import ConfigError


class _Loader(yaml.SafeLoader):
    """SafeLoader without YAML 1.1 base-60 numbers, so ``10:5:40`` stays a string."""


def _keep_colons(base):
    def construct(loader, node):
        if ":" in node.value:
            return node.value
        return base(loader, node)
    return construct


_Loader.add_constructor("tag:yaml.org,2002:int", _keep_colons(yaml.SafeLoader.construct_yaml_int))
_Loader.add_constructor("tag:yaml.org,2002:float", _keep_colons(yaml.SafeLoader.construct_yaml_float))


def load_config(path) -> dict:
    try:
        data = yaml.load(Path(path).read_text(), Loader=_Loader)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of flag names to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def parse_range(text, *, log=False):
    """``"10:2:40"`` (start:step:stop, inclusive), ``"1e-3:1e-1"`` or a comma list.

    With `log`, a two-field range is expanded to 7 log-spaced points
    (``start:stop:count`` also accepted).
    """
    import numpy as np

    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text).strip()
    try:
        if ":" not in text:
            return [float(x) for x in text.split(",") if x.strip()]
        parts = [float(x) for x in text.split(":")]
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}") from None
    if log:
        if len(parts) == 2:
            parts.append(7)
        lo, hi, count = parts
        if lo <= 0 or hi <= lo or count < 2:
            raise ConfigError(f"bad log range {text!r}")
        return list(np.logspace(np.log10(lo), np.log10(hi), int(count)))
    if len(parts) != 3 or parts[1] <= 0:
        raise ConfigError(f"range must be start:step:stop with positive step, got {text!r}")
    start, step, stop = parts
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]
