"""Canonical catalog of the 21 semantic phishing features.

The catalog ships as a versioned JSON document next to this module and can
be overridden with a config path. It is immutable after load and safe to
share across threads. Feature weights express how strongly each cue
indicates phishing; alias lists absorb the name drift that LLM output
exhibits (e.g. "Authority" vs the merged canonical name).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

#: Sentinel returned by name normalization when nothing matches.
UNKNOWN = "UNKNOWN"

EXPECTED_FEATURE_COUNT = 21


@dataclass(frozen=True)
class SemanticFeature:
    canonical_name: str
    description: str
    examples: tuple[str, ...]
    weight: float
    source: dict
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.canonical_name:
            raise ValueError("feature name must be non-empty")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight {self.weight} outside [0, 1] for {self.canonical_name!r}")
        if not self.examples:
            raise ValueError(f"feature {self.canonical_name!r} needs at least one example")


def _fold(name: str) -> str:
    """Case-insensitive, whitespace-collapsed key for name matching."""
    return re.sub(r"\s+", " ", name).strip().casefold()


@dataclass(frozen=True)
class FeatureCatalog:
    features: tuple[SemanticFeature, ...]
    schema_version: int = 1
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for feat in self.features:
            for key in (feat.canonical_name, *feat.aliases):
                folded = _fold(key)
                if folded in index and index[folded] is not feat:
                    raise ValueError(
                        f"alias {key!r} maps to both {index[folded].canonical_name!r}"
                        f" and {feat.canonical_name!r}"
                    )
                index[folded] = feat
        names = [f.canonical_name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("duplicate canonical feature names")
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def names(self) -> list[str]:
        return [f.canonical_name for f in self.features]

    def get(self, canonical_name: str) -> SemanticFeature | None:
        # exact canonical lookups only; use normalize_name for fuzzy input
        for f in self.features:
            if f.canonical_name == canonical_name:
                return f
        return None

    def weight_of(self, name: str) -> float:
        canonical = self.normalize_name(name)
        if canonical == UNKNOWN:
            raise KeyError(name)
        return self._index[_fold(canonical)].weight

    def normalize_name(self, raw: str) -> str:
        """Resolve a raw feature name to its canonical form, or UNKNOWN.

        Matching is case-insensitive and whitespace-normalized against
        canonical names and aliases.
        """
        if not isinstance(raw, str):
            return UNKNOWN
        feat = self._index.get(_fold(raw))
        return feat.canonical_name if feat is not None else UNKNOWN

    def subset(self, excluded: set[str]) -> "FeatureCatalog":
        """Catalog without the excluded canonical names (for reanalysis)."""
        kept = tuple(f for f in self.features if f.canonical_name not in excluded)
        return FeatureCatalog(features=kept, schema_version=self.schema_version)


def _feature_from_dict(entry: dict) -> SemanticFeature:
    return SemanticFeature(
        canonical_name=entry["name"],
        description=entry["description"],
        examples=tuple(entry["examples"]),
        weight=float(entry["weight"]),
        source=dict(entry.get("source", {"kind": "extracted"})),
        aliases=tuple(entry.get("aliases", ())),
    )


def load_catalog(path: str | Path | None = None) -> FeatureCatalog:
    """Load the feature catalog from the packaged JSON, or from ``path``.

    The packaged catalog always has exactly 21 entries in weight-list order;
    an override file may differ and is validated structurally only.
    """
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    else:
        raw = json.loads(
            resources.files("cyri").joinpath("data/feature_catalog.json").read_text(encoding="utf-8")
        )
    features = tuple(_feature_from_dict(e) for e in raw["features"])
    catalog = FeatureCatalog(features=features, schema_version=int(raw.get("schema_version", 1)))
    if path is None and len(catalog) != EXPECTED_FEATURE_COUNT:
        raise ValueError(f"packaged catalog must have {EXPECTED_FEATURE_COUNT} features, found {len(catalog)}")
    return catalog


def normalize_name(raw: str, catalog: FeatureCatalog) -> str:
    """Module-level convenience wrapper around FeatureCatalog.normalize_name."""
    return catalog.normalize_name(raw)
