import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from streams.models import LabeledSet, ShiftStream, UnlabeledSet
from utils.exceptions import FormatException
from utils.files import atomic_write_text

logger = logging.getLogger(__name__)

SPLITS = ("source", "intermediate", "target")
FIXED_COLUMNS = ["id", "split", "truth_index", "label"]


def stream_frame(stream: ShiftStream) -> pd.DataFrame:
    """Long table: one row per example with split, truth index, label and features f0..f{d-1}."""
    blocks = []
    for split, features, labels, ids, truth in (
        ("source", stream.source.features, stream.source.labels, stream.source.ids, None),
        ("intermediate", stream.intermediate.features, stream.intermediate_labels, stream.intermediate.ids,
         stream.truth_index),
        ("target", stream.target.features, stream.target.labels, stream.target.ids, None),
    ):
        block = pd.DataFrame(features, columns=[f"f{j}" for j in range(features.shape[1])])
        block.insert(0, "label", labels)
        block.insert(0, "truth_index", np.nan if truth is None else truth)
        block.insert(0, "split", split)
        block.insert(0, "id", ids)
        blocks.append(block)
    return pd.concat(blocks, ignore_index=True)


def write_stream_csv(stream: ShiftStream, path) -> Path:
    frame = stream_frame(stream)
    # a JSON comment line keeps the generator spec with the data
    meta = {"generator": stream.generator, "seed": stream.seed, "num_classes": stream.num_classes}
    header = f"# {json.dumps(meta, sort_keys=True)}\n"
    return atomic_write_text(path, header + frame.to_csv(index=False, float_format="%.17g"))


def read_stream_csv(path) -> ShiftStream:
    path = Path(path)
    text = path.read_text()
    meta = {}
    if text.startswith("#"):
        first, _, _ = text.partition("\n")
        try:
            meta = json.loads(first[1:].strip())
        except json.JSONDecodeError as exc:
            raise FormatException(f"bad stream metadata line in {path}", offset=exc.pos + 1) from exc

    frame = pd.read_csv(path, comment="#")
    missing = [c for c in FIXED_COLUMNS if c not in frame.columns]
    if missing:
        raise FormatException(f"stream CSV {path} lacks columns {missing}", offset=0)
    unknown = set(frame["split"]) - set(SPLITS)
    if unknown:
        raise FormatException(f"stream CSV {path} has unknown splits {sorted(unknown)}", offset=0)

    feature_cols = [c for c in frame.columns if c not in FIXED_COLUMNS]
    parts = {split: frame[frame["split"] == split] for split in SPLITS}

    def labeled(part):
        return LabeledSet(
            part[feature_cols].to_numpy(dtype=np.float64).reshape(len(part), len(feature_cols)),
            part["label"].to_numpy(dtype=np.int64),
            part["id"].to_numpy(dtype=np.int64),
        )

    pool = labeled(parts["intermediate"])
    num_classes = meta.get("num_classes") or int(frame["label"].max()) + 1
    return ShiftStream(
        source=labeled(parts["source"]),
        target=labeled(parts["target"]),
        intermediate=UnlabeledSet(pool.features, pool.ids),
        intermediate_labels=pool.labels,
        truth_index=parts["intermediate"]["truth_index"].to_numpy(dtype=np.float64),
        num_classes=int(num_classes),
        generator=meta.get("generator", {"kind": "csv", "path": str(path)}),
        seed=int(meta.get("seed", 0)),
    )
