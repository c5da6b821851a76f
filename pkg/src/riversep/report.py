"""Deterministic text formatting for CLI output files.

All numeric output funnels through :func:`format_number` so that reruns on
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

# Values whose magnitude falls outside this window switch to scientific
# notation.
_PLAIN_LO = 1e-4
_PLAIN_HI = 1e6

MISSING_TOKEN = "NA"


def format_number(x: float) -> str:
    """Format ``x`` with 12 significant digits.

    Plain decimal notation inside |x| in [1e-4, 1e6), lowercase scientific
    outside it.  NaN renders as the missing-value token.
    """
    x = float(x)
    if math.isnan(x):
        return MISSING_TOKEN
    if x == 0.0:
        return "0"
    ax = abs(x)
    if _PLAIN_LO <= ax < _PLAIN_HI:
        return f"{x:.12g}"
    return f"{x:.11e}"


def format_loading(x: float) -> str:
    """Fixed 7-decimal formatting used for loading tables."""
    return f"{float(x):.7f}"


def write_json(path: Path, obj) -> None:
    """Write ``obj`` as canonical JSON (sorted keys, stable separators)."""
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
