"""Relevance dumps: one flat little-endian float64 blob plus a JSON index."""

import json
from pathlib import Path
from typing import List

import numpy as np
from pydantic import BaseModel

from heatmapping.lrp.engine import RelevanceMap


class RelevanceIndexEntry(BaseModel):
    name: str
    shape: List[int]
    sum: float
    offset: int
    count: int


def export_relevance(
    rel: RelevanceMap, blob_path, index_path
) -> List[RelevanceIndexEntry]:
    """Write every layer's relevance, input layer first."""
    entries = []
    chunks = []
    offset = 0
    for name, relevance in zip(rel.names, rel.layers):
        flat = np.ascontiguousarray(relevance, dtype="<f8").reshape(-1)
        entries.append(
            RelevanceIndexEntry(
                name=name,
                shape=list(relevance.shape),
                sum=float(relevance.sum()),
                offset=offset,
                count=int(flat.size),
            )
        )
        chunks.append(flat.tobytes())
        offset += flat.size

    Path(blob_path).write_bytes(b"".join(chunks))
    index = {
        "dtype": "<f8",
        "score": rel.score,
        "layers": [entry.model_dump() for entry in entries],
    }
    Path(index_path).write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    return entries


def read_relevance(blob_path, index_path) -> List[np.ndarray]:
    index = json.loads(Path(index_path).read_text(encoding="utf-8"))
    values = np.frombuffer(Path(blob_path).read_bytes(), dtype="<f8")
    return [
        values[e["offset"] : e["offset"] + e["count"]].reshape(e["shape"]).copy()
        for e in index["layers"]
    ]
