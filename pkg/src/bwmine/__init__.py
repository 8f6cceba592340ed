"""bwmine: RTS replay mining — battles, army clusters, outcome prediction.

The pipeline runs: parse dump triples -> reconstruct battles -> reduce
armies to composition vectors -> fit Gaussian mixtures (BIC-selected) ->
learn counter tables -> predict and evaluate battle outcomes.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    attacktrack,
    composition,
    counterplay,
    geometry,
    gmm,
    logmodel,
    mapregions,
    synthgen,
    units,
)
