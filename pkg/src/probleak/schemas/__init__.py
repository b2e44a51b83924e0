"""JSON Schemas for every document the command line emits."""

import json
from importlib import resources

__all__ = ["available", "load"]


def available() -> tuple:
    files = resources.files(__name__)
    return tuple(
        sorted(
            path.name[: -len(".schema.json")]
            for path in files.iterdir()
            if path.name.endswith(".schema.json")
        )
    )


def load(name: str) -> dict:
    path = resources.files(__name__).joinpath(f"{name}.schema.json")
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise KeyError(f"no schema named {name!r}; have {available()}") from None
    return json.loads(text)
