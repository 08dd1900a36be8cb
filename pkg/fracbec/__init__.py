from importlib.metadata import PackageNotFoundError, version


def _get_version() -> str:
    """Installed version of fracbec, or 0.0.0 when running from a source tree."""
    try:
        return version("fracbec")
    except PackageNotFoundError:
        return "0.0.0"


__version__ = _get_version()
__all__ = ["__version__"]
