"""Numeric policies: likelihood categories, feature score, UI intensity.

The likelihood bands follow the analysis prompt's threshold table. The
prompt's strict inequalities leave the boundary values 20/60/90 unassigned,
so the boundaries here go to the upper band (lower-inclusive bands).

The feature score combines the weights of the detected features with a
noisy-or: one strong cue dominates, several weak cues accumulate
sublinearly, and the result stays in [0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .catalog import FeatureCatalog
from .errors import OutOfRange, UnknownFeature

CATEGORIES = ("unlikely", "possibly", "likely", "almost_certainly")

#: Human phrasing of each category as it appears in a verdict line.
CATEGORY_LABELS = {
    "unlikely": "Unlikely to be",
    "possibly": "Possibly",
    "likely": "Likely",
    "almost_certainly": "Almost certainly",
}

#: Relative weight of percentage vs feature score in the phishing tint.
INTENSITY_PERCENT_COEFF = 0.5
INTENSITY_FEATURE_COEFF = 0.5


@dataclass(frozen=True)
class IntensitySignal:
    hue: str  # "red" for phishing, "blue" for safe
    intensity: float
    percentage: int
    feature_score: float


def categorize(percentage: int) -> str:
    """Map a 0-100 likelihood percentage onto its category band.

    [0,20) unlikely, [20,60) possibly, [60,90) likely, [90,100] almost_certainly.
    """
    if not 0 <= percentage <= 100:
        raise OutOfRange(f"percentage {percentage} outside 0-100")
    if percentage < 20:
        return "unlikely"
    if percentage < 60:
        return "possibly"
    if percentage < 90:
        return "likely"
    return "almost_certainly"


def feature_score(features: Iterable[str], catalog: FeatureCatalog) -> float:
    """Noisy-or combination of the catalog weights of the features found.

    Empty input scores 0. All names must be canonical catalog names.
    Folded incrementally (s + w - s*w) rather than via 1 - prod(1 - w) so a
    single feature scores its weight exactly.
    """
    score = 0.0
    for name in features:
        feat = catalog.get(name)
        if feat is None:
            raise UnknownFeature(name)
        score += feat.weight - score * feat.weight
    return score


def ui_intensity(label: str, percentage: int, score: float,
                 percent_coeff: float = INTENSITY_PERCENT_COEFF,
                 feature_coeff: float = INTENSITY_FEATURE_COEFF) -> IntensitySignal:
    """Background tint for a parsed verdict.

    Phishing blends percentage and feature score (red hue); safe maps the
    percentage straight to intensity (blue hue, feature score is 0 there).
    The blend coefficients are tunable config with 0.5/0.5 defaults.
    """
    if not 0 <= percentage <= 100:
        raise OutOfRange(f"percentage {percentage} outside 0-100")
    if label == "phishing":
        raw = percent_coeff * (percentage / 100.0) + feature_coeff * score
        return IntensitySignal("red", min(1.0, max(0.0, raw)), percentage, score)
    return IntensitySignal("blue", percentage / 100.0, percentage, score)
