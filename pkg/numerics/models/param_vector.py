import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from Idol.settings import TORCH_DTYPE
from utils.exceptions import ContractException, FormatException
from utils.files import atomic_write_bytes

logger = logging.getLogger(__name__)

HEADER_MAGIC = "PARAMVECTOR 1"
HEADER_END = "END"


@dataclass(frozen=True, eq=False)
class ParamVector:
    """
    Flat double-precision parameter vector with a named segment layout.

    layout = ((name, shape), ...) in storage order; segment views are
    reshaped slices of `values`, so no copy is made when reading them.
    """
    values: torch.Tensor
    layout: tuple

    def __post_init__(self):
        if self.values.dim() != 1:
            raise ContractException("ParamVector values must be one-dimensional")
        expected = sum(_size(shape) for _, shape in self.layout)
        if expected != self.values.numel():
            raise ContractException(
                f"ParamVector length {self.values.numel()} does not match layout size {expected}"
            )

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def zeros(cls, layout) -> "ParamVector":
        layout = _normalize_layout(layout)
        total = sum(_size(shape) for _, shape in layout)
        return cls(torch.zeros(total, dtype=TORCH_DTYPE), layout)

    @classmethod
    def from_segments(cls, segments) -> "ParamVector":
        """segments: iterable of (name, tensor-like) pairs, or a dict."""
        items = segments.items() if isinstance(segments, dict) else segments
        layout, flat = [], []
        for name, value in items:
            tensor = torch.as_tensor(value, dtype=TORCH_DTYPE)
            layout.append((name, tuple(tensor.shape)))
            flat.append(tensor.reshape(-1))
        values = torch.cat(flat) if flat else torch.zeros(0, dtype=TORCH_DTYPE)
        return cls(values, tuple(layout))

    def with_values(self, values) -> "ParamVector":
        return ParamVector(values, self.layout)

    def detached(self) -> "ParamVector":
        return ParamVector(self.values.detach().clone(), self.layout)

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    def segments(self) -> dict:
        out, offset = {}, 0
        for name, shape in self.layout:
            size = _size(shape)
            out[name] = self.values[offset:offset + size].reshape(shape)
            offset += size
        return out

    def __len__(self):
        return self.values.numel()

    def numpy(self) -> np.ndarray:
        return self.values.detach().cpu().numpy().copy()

    def equal(self, other: "ParamVector") -> bool:
        return self.layout == other.layout and torch.equal(self.values, other.values)

    def first_nonfinite_segment(self):
        for name, tensor in self.segments().items():
            if not torch.isfinite(tensor).all():
                return name
        return None

    def norm(self) -> float:
        return float(torch.linalg.vector_norm(self.values.detach()))

    def norm_report(self) -> dict:
        """L2 norm per segment plus the total, for checking a norm bound R by eye."""
        report = {
            name: float(torch.linalg.vector_norm(tensor.detach()))
            for name, tensor in self.segments().items()
        }
        report["total"] = self.norm()
        return report

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        lines = [HEADER_MAGIC]
        for name, shape in self.layout:
            dims = "x".join(str(d) for d in shape) if shape else "scalar"
            lines.append(f"{name} {dims}")
        lines.append(HEADER_END)
        header = ("\n".join(lines) + "\n").encode("ascii")
        body = np.ascontiguousarray(self.numpy(), dtype="<f8").tobytes()
        return header + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "ParamVector":
        marker = f"\n{HEADER_END}\n".encode("ascii")
        end = data.find(marker)
        if not data.startswith(HEADER_MAGIC.encode("ascii")) or end < 0:
            raise FormatException("missing parameter header", offset=0)
        body_offset = end + len(marker)

        layout = []
        for line in data[:end].decode("ascii").splitlines()[1:]:
            name, dims = line.rsplit(" ", 1)
            shape = () if dims == "scalar" else tuple(int(d) for d in dims.split("x"))
            layout.append((name, shape))

        body = data[body_offset:]
        expected = sum(_size(shape) for _, shape in layout)
        if len(body) != expected * 8:
            raise FormatException(
                f"expected {expected} float64 values, found {len(body)} bytes",
                offset=body_offset,
            )
        values = torch.from_numpy(np.frombuffer(body, dtype="<f8").astype(np.float64))
        return cls(values, tuple(layout))

    def save(self, path) -> Path:
        return atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path) -> "ParamVector":
        return cls.from_bytes(Path(path).read_bytes())


def _size(shape) -> int:
    return math.prod(shape) if shape else 1


def _normalize_layout(layout) -> tuple:
    return tuple((name, tuple(shape)) for name, shape in layout)
