"""JSON schemas shipped with the package and a small validation helper."""

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import ConfigError

SCHEMAS = {"field": "field.json", "check": "check_config.json", "report": "report.json"}


@lru_cache(maxsize=None)
def load_schema(kind: str) -> dict:
    if kind not in SCHEMAS:
        raise KeyError(kind)
    return json.loads(resources.files(__name__).joinpath(SCHEMAS[kind]).read_text())


def validate(document, kind: str) -> None:
    """Raise :class:`ConfigError` if ``document`` does not match schema ``kind``."""
    try:
        jsonschema.validate(document, load_schema(kind))
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"invalid {kind} config at {where}: {exc.message}") from None
