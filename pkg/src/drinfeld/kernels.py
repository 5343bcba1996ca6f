"""Kernel selection: the compiled extension when importable, numpy otherwise."""

from __future__ import annotations

from types import ModuleType

from . import _kernels_py

try:  # pragma: no cover - depends on the build
    from . import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

BIG = _kernels_py.BIG

_active: ModuleType = _ckernels if _ckernels is not None else _kernels_py


def available() -> list[str]:
    return ["compiled", "python"] if _ckernels is not None else ["python"]


def active() -> str:
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def use(name: str) -> None:
    """Switch the kernel backend ("compiled" or "python")."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _ckernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def backend() -> ModuleType:
    return _active


def ser_mul(gf, a, b, L):
    return _active.ser_mul(gf, a, b, L)


def ser_inv(gf, a, L):
    return _active.ser_inv(gf, a, L)


def lattice_valuations(*args):
    return _active.lattice_valuations(*args)


def lattice_accumulate(*args):
    return _active.lattice_accumulate(*args)
