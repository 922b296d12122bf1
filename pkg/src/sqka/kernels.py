"""Amplitude kernels, compiled when available.

The Cython extension ``sqka._ckernels`` is preferred; if it is not built, or
``SQKA_PURE_PYTHON=1`` is set, the numpy versions in ``sqka._pykernels`` are
used instead. ``BACKEND`` names the active implementation.
"""

import os

if os.environ.get("SQKA_PURE_PYTHON", "") not in ("", "0"):
    from sqka._pykernels import (
        bell_collapse,
        bell_probabilities,
        kron,
        z_collapse,
        z_probability_one,
    )

    BACKEND = "python"
else:
    try:
        from sqka._ckernels import (
            bell_collapse,
            bell_probabilities,
            kron,
            z_collapse,
            z_probability_one,
        )

        BACKEND = "cython"
    except ImportError:
        from sqka._pykernels import (
            bell_collapse,
            bell_probabilities,
            kron,
            z_collapse,
            z_probability_one,
        )

        BACKEND = "python"

__all__ = [
    "BACKEND",
    "bell_collapse",
    "bell_probabilities",
    "kron",
    "z_collapse",
    "z_probability_one",
]
