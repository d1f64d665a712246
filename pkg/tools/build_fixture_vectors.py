"""Regenerate the fixture word-vector store and its manifest.

The store is synthetic: three interpretable axes (growth, employment,
inflation) followed by low-amplitude noise dimensions drawn from a fixed
seed.  Loadings are chosen by hand so that the bundled mini-corpus shows
the aspect shift caused by simplification.

    python3 tools/build_fixture_vectors.py
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

SEED = 20220126
NOISE_DIMS = 5
NOISE_SCALE = 0.05
OUT = Path(__file__).resolve().parents[1] / "src" / "coremsg" / "data"

# token -> (growth, employment, inflation)
LOADINGS: dict[str, tuple[float, float, float]] = {
    # seed terms
    "growth": (1.0, 0.0, 0.0),
    "gdp": (1.0, 0.0, 0.0),
    "economic": (1.0, 0.0, 0.0),
    "activity": (1.0, 0.0, 0.0),
    "output": (1.0, 0.0, 0.0),
    "expansion": (1.0, 0.0, 0.0),
    "employment": (0.0, 1.0, 0.0),
    "unemployment": (0.0, 1.0, 0.0),
    "labor": (0.0, 1.0, 0.0),
    "payroll": (0.0, 1.0, 0.0),
    "jobs": (0.0, 1.0, 0.0),
    "workforce": (0.0, 1.0, 0.0),
    "inflation": (0.0, 0.0, 1.0),
    "prices": (0.0, 0.0, 1.0),
    "cpi": (0.0, 0.0, 1.0),
    "deflation": (0.0, 0.0, 1.0),
    "price": (0.0, 0.0, 1.0),
    # cyclical and demand vocabulary leans toward growth
    "economies": (1.0, 0.0, 0.1),
    "foreign": (0.5, 0.0, 0.0),
    "higher": (1.2, 0.1, 0.2),
    "upward": (1.2, 0.0, 0.2),
    "oil": (0.9, 0.0, 0.3),
    "headline": (0.8, 0.0, 0.2),
    "expanded": (0.8, 0.1, 0.0),
    "business": (0.7, 0.1, 0.0),
    "investment": (0.8, 0.0, 0.0),
    "spending": (0.7, 0.0, 0.1),
    "consumer": (0.4, 0.0, 0.3),
    "household": (0.5, 0.0, 0.0),
    "demand": (0.6, 0.2, 0.1),
    "strongly": (0.5, 0.0, 0.0),
    "solid": (0.4, 0.1, 0.0),
    "weak": (0.4, 0.1, 0.0),
    "pace": (0.3, 0.0, 0.0),
    "supply": (0.6, 0.0, 0.2),
    "disruptions": (0.6, 0.0, 0.1),
    "energy": (0.3, 0.0, 0.6),
    "incomes": (0.3, 0.3, 0.0),
    # labor market vocabulary
    "workers": (0.0, 0.8, 0.0),
    "wage": (0.0, 0.5, 0.4),
    "market": (0.1, 0.4, 0.0),
    "participation": (0.0, 0.7, 0.0),
    "gains": (0.2, 0.4, 0.0),
    "rate": (0.1, 0.2, 0.1),
    # price vocabulary
    "pressures": (0.0, 0.0, 0.9),
    "pressure": (0.1, 0.0, 0.5),
    "core": (0.0, 0.0, 0.7),
    "elevated": (0.0, 0.0, 0.6),
    "subdued": (0.1, 0.0, 0.3),
    "remained": (0.1, 0.1, 0.1),
}


def build() -> dict:
    rng = np.random.default_rng(SEED)
    dim = 3 + NOISE_DIMS
    lines = []
    for token in sorted(LOADINGS):
        vec = np.concatenate([LOADINGS[token], NOISE_SCALE * rng.standard_normal(NOISE_DIMS)])
        lines.append(token + " " + " ".join(f"{x:.6f}" for x in vec))
    body = "\n".join(lines) + "\n"
    (OUT / "fixture_vectors.txt").write_text(body, encoding="utf-8")
    manifest = {
        "file": "fixture_vectors.txt",
        "dimension": dim,
        "vocabulary_size": len(lines),
        "axes": ["growth", "employment", "inflation"] + [f"noise{i}" for i in range(NOISE_DIMS)],
        "seed": SEED,
        "noise_scale": NOISE_SCALE,
        "sha256": hashlib.sha256(body.encode()).hexdigest(),
        "expected": {
            "full_sentence_aspect": "growth",
            "level0_aspect": "inflation",
        },
    }
    (OUT / "fixture_vectors.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


if __name__ == "__main__":
    m = build()
    print(f"wrote {m['vocabulary_size']} tokens, dimension {m['dimension']}")
