"""Symbols, growth indices, path simulation and Monte Carlo checks for jump diffusions."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .symbol import (  # noqa: E402
    CogarchModel,
    CustomTripletModel,
    CutoffFunction,
    DeterministicFigureEightModel,
    LevyModel,
    LevyTriplet,
    SdeComposedModel,
    StableLikeModel,
    SumIndependentModel,
    brownian_motion,
    cogarch_symbol,
    differential_characteristics,
    eval_jump_integral,
    eval_symbol,
    stable_levy,
    sum_symbol,
)
from .indices import IndexReport, estimate_indices  # noqa: E402
from .rng import RngSpec  # noqa: E402
