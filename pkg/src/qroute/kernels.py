"""Backend selection: compiled extension if available, pure Python otherwise."""
from __future__ import annotations

from . import _pykernels

try:
    from . import _native

    _default = _native
    BACKEND = "native"
except ImportError:  # no compiled extension in this environment
    _native = None
    _default = _pykernels
    BACKEND = "python"

sa_sample = _default.sa_sample
tabu_run = _default.tabu_run
dip_statistic = _default.dip_statistic


def available_backends() -> list[str]:
    return ["native", "python"] if _native is not None else ["python"]


def get_backend(name: str):
    """Kernel module by name, for equivalence tests and benchmarks."""
    if name == "python":
        return _pykernels
    if name == "native":
        if _native is None:
            raise ValueError("native backend is not built")
        return _native
    raise ValueError(f"unknown backend {name!r}")
