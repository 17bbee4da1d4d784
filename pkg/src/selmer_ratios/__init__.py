"""Local density oracles, constants audit and Selmer-ratio statistics for genus-zero torsion families."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("selmer-ratios")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .families import get, registry  # noqa: E402

__all__ = ["__version__", "get", "registry"]
