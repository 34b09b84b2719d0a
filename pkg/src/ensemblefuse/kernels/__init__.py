"""Selectable numeric backends for the hot inner loops.

Two interchangeable implementations of the same three functions live here:

* ``numba_impl`` -- @njit-compiled loops, the default whenever numba imports;
* ``numpy_impl`` -- pure-numpy reference, always available.

The backend is picked at import time from the ``ENSEMBLEFUSE_BACKEND``
environment variable ("numba" or "numpy"; unset means numba when available)
and can be switched at runtime with :func:`set_backend`. Loss values agree
across backends to ~1e-15 relative (reduction order differs); gradients and
``rank_auc`` agree exactly on identical inputs.
"""

from __future__ import annotations

import os

from ensemblefuse.errors import ValidationError
from ensemblefuse.kernels import numpy_impl

_BACKENDS = {"numpy": numpy_impl}

try:
    from ensemblefuse.kernels import numba_impl

    _BACKENDS["numba"] = numba_impl
    _DEFAULT = "numba"
except ImportError:  # pragma: no cover - depends on the environment
    _DEFAULT = "numpy"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def set_backend(name: str) -> None:
    """Select the kernel backend ("numba" or "numpy") for this process."""
    global _active
    if name not in _BACKENDS:
        raise ValidationError(
            f"unknown kernel backend {name!r}; available: {', '.join(available_backends())}"
        )
    _active = name


def active_backend() -> str:
    return _active


_requested = os.environ.get("ENSEMBLEFUSE_BACKEND", "").strip().lower()
_active = _DEFAULT
if _requested:
    set_backend(_requested)


def loss_value(probs, targets, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps):
    return _BACKENDS[_active].loss_value(
        probs, targets, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps
    )


def loss_grad(probs, targets, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps):
    return _BACKENDS[_active].loss_grad(
        probs, targets, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps
    )


def rank_auc(scores, labels):
    return _BACKENDS[_active].rank_auc(scores, labels)
