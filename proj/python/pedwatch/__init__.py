"""Python access to the pedwatch native core."""

import json

from ._pedwatch import (
    PedwatchError,
    analysis_digest,
    classify_correlation,
    pearson,
    point_in_convex_polygon,
    stages,
    synth_generate,
)


def box_stats(values):
    """Box-plot summary of ``values`` as a dict."""
    from ._pedwatch import box_stats_json

    return json.loads(box_stats_json(list(values)))


__all__ = [
    "PedwatchError",
    "analysis_digest",
    "box_stats",
    "classify_correlation",
    "pearson",
    "point_in_convex_polygon",
    "stages",
    "synth_generate",
]
