"""Flat ``key = value`` configuration files.

One file carries filter, window, detector, scene and evaluation keys; each
consumer picks the keys it knows. ``#`` and ``;`` start comments.
"""
from __future__ import annotations

import configparser
import os
from pathlib import Path

ENV_VAR = "OCTRACK_CONFIG"
_SECTION = "octrack"


def load_config(path=None) -> dict[str, str]:
    """Read a config file into a plain dict; ``None`` falls back to ``$OCTRACK_CONFIG``."""
    if path is None:
        path = os.environ.get(ENV_VAR)
        if not path:
            return {}
    text = Path(path).read_text()
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=str(path))
    except configparser.Error as exc:
        raise ValueError(f"{path}: {exc}") from None
    return dict(parser[_SECTION])


def pick(config: dict[str, str], fields: dict[str, type]) -> dict:
    """Convert the subset of ``config`` whose keys appear in ``fields``."""
    out = {}
    for key, kind in fields.items():
        if key in config:
            try:
                out[key] = kind(config[key])
            except ValueError:
                raise ValueError(f"config key {key!r}: cannot parse {config[key]!r}") from None
    return out
