"""Kernel backend selection.

The compiled extension is used when importable; the numpy reference
backend otherwise.  ELQA_KERNEL=python forces the fallback (useful for the
benchmark and for debugging), ELQA_KERNEL=compiled insists on the
extension and fails loudly when it is missing.
"""

from __future__ import annotations

import os

from elqa.errors import ModelError
from elqa.model.kernels import pyref

try:
    from elqa.model.kernels import _recnet
except ImportError:
    _recnet = None

HAVE_COMPILED = _recnet is not None

_BACKENDS = {"python": pyref}
if HAVE_COMPILED:
    _BACKENDS["compiled"] = _recnet


def _initial_backend() -> str:
    choice = os.environ.get("ELQA_KERNEL", "auto")
    if choice == "auto":
        return "compiled" if HAVE_COMPILED else "python"
    if choice not in ("python", "compiled"):
        raise ModelError(f"ELQA_KERNEL must be auto, python or compiled, not {choice!r}")
    if choice == "compiled" and not HAVE_COMPILED:
        raise ModelError("ELQA_KERNEL=compiled but the extension is not built")
    return choice


_active = _initial_backend()


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ModelError(f"unknown kernel backend {name!r} (have {sorted(_BACKENDS)})")
    _active = name


def lstm_forward(xg, wh, h0, c0):
    return _BACKENDS[_active].lstm_forward(xg, wh, h0, c0)


def lstm_backward(wh, gates, h, c, h0, c0, dh_out):
    return _BACKENDS[_active].lstm_backward(wh, gates, h, c, h0, c0, dh_out)
