"""Sample grids: ``box:lo..hi,count=K`` and ``shell:r=a..b,count=K`` specifications."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_RANGE = r"\s*([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)\s*"
_BOX_AXIS = re.compile(rf"{_RANGE},\s*count\s*=\s*(\d+)\s*")
_SHELL = re.compile(rf"\s*r\s*=\s*{_RANGE},\s*count\s*=\s*(\d+)\s*")


class GridSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """A parsed grid specification.

    ``box`` with a single range uses it on every axis and treats ``count`` as
    the total number of points (``round(count ** (1/n))`` per axis).  Several
    ``;``-separated ranges give one axis each, ``count`` then being per axis.
    ``shell`` draws ``count`` points with seeded uniform directions and
    stratified radii in ``[a, b]``.
    """

    kind: str  # "box" or "shell"
    ranges: tuple  # ((lo, hi, count), ...) for box; ((a, b, count),) for shell
    text: str = ""

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        if ":" not in text:
            raise GridSpecError(f"grid spec {text!r} lacks a kind prefix")
        kind, body = text.split(":", 1)
        kind = kind.strip()
        if kind == "box":
            axes = []
            for part in body.split(";"):
                mt = _BOX_AXIS.fullmatch(part)
                if not mt:
                    raise GridSpecError(f"bad box axis {part!r}")
                lo, hi, count = float(mt.group(1)), float(mt.group(2)), int(mt.group(3))
                if count < 1 or not hi >= lo:
                    raise GridSpecError(f"bad box axis {part!r}")
                axes.append((lo, hi, count))
            return cls("box", tuple(axes), text)
        if kind == "shell":
            mt = _SHELL.fullmatch(body)
            if not mt:
                raise GridSpecError(f"bad shell spec {body!r}")
            a, b, count = float(mt.group(1)), float(mt.group(2)), int(mt.group(3))
            if not 0 < a <= b or count < 1:
                raise GridSpecError(f"bad shell spec {body!r}")
            return cls("shell", ((a, b, count),), text)
        raise GridSpecError(f"unknown grid kind {kind!r}")

    @classmethod
    def box(cls, lo: float, hi: float, count: int) -> "GridSpec":
        return cls.parse(f"box:{lo}..{hi},count={count}")

    @classmethod
    def shell(cls, a: float, b: float, count: int) -> "GridSpec":
        return cls.parse(f"shell:r={a}..{b},count={count}")

    def axes(self, n: int) -> list[np.ndarray]:
        """Per-axis coordinates of a box grid."""
        if self.kind != "box":
            raise GridSpecError("only box grids have axes")
        if len(self.ranges) == 1:
            lo, hi, total = self.ranges[0]
            per = max(1, int(round(total ** (1.0 / n))))
            spec = [(lo, hi, per)] * n
        elif len(self.ranges) == n:
            spec = list(self.ranges)
        else:
            raise GridSpecError(f"box grid has {len(self.ranges)} axes, need {n}")
        return [np.linspace(lo, hi, c) if c > 1 else np.array([0.5 * (lo + hi)]) for lo, hi, c in spec]

    def shape(self, n: int) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes(n))

    def points(self, n: int, seed: int = 42) -> np.ndarray:
        """Grid points as an (N, n) array; box points in C order of :meth:`axes`."""
        if self.kind == "box":
            mesh = np.meshgrid(*self.axes(n), indexing="ij")
            return np.stack([g.ravel() for g in mesh], axis=-1)
        a, b, count = self.ranges[0]
        rng = np.random.default_rng(seed)
        d = rng.standard_normal((count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = a + (b - a) * (np.arange(count) + 0.5) / count
        return d * r[:, None]

    def spacing(self, n: int) -> np.ndarray:
        return np.array([ax[1] - ax[0] if len(ax) > 1 else 0.0 for ax in self.axes(n)])

    def __str__(self):
        return self.text
