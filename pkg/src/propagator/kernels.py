"""Kernel backend selection.

``PROPAGATOR_KERNELS`` picks the implementation:

* ``auto`` (default) — compiled ``_native`` extension when importable,
  numpy fallback otherwise;
* ``native`` — compiled only, ImportError if the extension is missing;
* ``python`` — force the numpy fallback.
"""

from __future__ import annotations

import os

_choice = os.environ.get("PROPAGATOR_KERNELS", "auto").lower()

if _choice not in {"auto", "native", "python"}:
    raise ValueError(f"PROPAGATOR_KERNELS={_choice!r}: expected auto, native, or python")

if _choice == "python":
    from . import _pykernels as _impl
elif _choice == "native":
    from . import _native as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _pykernels as _impl

BACKEND: str = _impl.BACKEND
jaccard_pairwise = _impl.jaccard_pairwise
cosine_pairwise = _impl.cosine_pairwise
jacobi_eigh = _impl.jacobi_eigh
