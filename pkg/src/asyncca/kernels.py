"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``ASYNCCA_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels as py

BACKEND = "python"
_impl = py

if os.environ.get("ASYNCCA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = py

mix64 = _impl.mix64
stream_key = _impl.stream_key
raw_word = _impl.raw_word
uniform = _impl.uniform
stream_keys = _impl.stream_keys
uniforms = _impl.uniforms
hash_step = _impl.hash_step
hash_events = _impl.hash_events
glauber_standard = _impl.glauber_standard
one_cell_rounds = _impl.one_cell_rounds
aggregated_rounds = _impl.aggregated_rounds

LAW_POISSON = py.LAW_POISSON
LAW_UNIFORM = py.LAW_UNIFORM
LAW_POWER = py.LAW_POWER
LAW_FIXED = py.LAW_FIXED

__all__ = [
    "BACKEND", "mix64", "stream_key", "raw_word", "uniform", "stream_keys",
    "uniforms", "hash_step", "hash_events", "glauber_standard",
    "one_cell_rounds", "aggregated_rounds",
]
