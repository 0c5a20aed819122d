"""Shipped experiment configurations."""

from importlib import resources


def fixture_path(name):
    """Filesystem path of a shipped config, e.g. ``fixture_path("clt")``."""
    fname = name if name.endswith(".yaml") else f"{name}.yaml"
    ref = resources.files(__name__) / fname
    if not ref.is_file():
        raise FileNotFoundError(f"no shipped fixture {fname!r}")
    return str(ref)


def fixture_names():
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".yaml"))
