"""Star graph, spectral data and their JSON files.

Orientation on every edge: ``x = 0`` is the boundary vertex, ``x = L`` the
common interior vertex.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.special

from .numerics import DEFAULT_GRID_POINTS, Grid, SampledFunction

__all__ = [
    "Edge",
    "StarGraph",
    "SpectralDataSet",
    "TwoSpectra",
    "apply_sign_convention",
    "make_demo_graph",
    "DEMO_GRAPHS",
]


@dataclass(frozen=True)
class Edge:
    length: float
    potential: SampledFunction

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("edge length must be positive")
        g = self.potential.grid
        if g.start != 0.0 or abs(g.length - self.length) > 1e-12 * self.length:
            raise ValueError("potential grid must span [0, L]")

    @classmethod
    def from_callable(cls, length, func, grid_points=DEFAULT_GRID_POINTS):
        grid = Grid.uniform(length, grid_points)
        return cls(float(length), SampledFunction.from_callable(func, grid))


@dataclass(frozen=True)
class StarGraph:
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        if len(self.edges) < 2:
            raise ValueError("a star graph needs at least two edges")

    @property
    def M(self):
        return len(self.edges)

    @property
    def lengths(self):
        return np.array([e.length for e in self.edges])

    @property
    def potentials(self):
        return [e.potential for e in self.edges]

    def to_dict(self):
        return {
            "edges": [
                {
                    "length": e.length,
                    "grid_points": len(e.potential.grid),
                    "potential_values": e.potential.values.tolist(),
                }
                for e in self.edges
            ]
        }

    @classmethod
    def from_dict(cls, d):
        edges = []
        for e in d["edges"]:
            grid = Grid.uniform(float(e["length"]), int(e["grid_points"]))
            edges.append(Edge(float(e["length"]), SampledFunction(grid, e["potential_values"])))
        return cls(tuple(edges))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def apply_sign_convention(alpha):
    """Flip ``alpha`` so that its first nonzero component is positive."""
    alpha = np.asarray(alpha, dtype=float)
    nz = np.flatnonzero(alpha)
    if nz.size and alpha[nz[0]] < 0:
        return -alpha
    return alpha


@dataclass(frozen=True, eq=False)
class SpectralDataSet:
    """Eigenvalues ``lam`` (K,) and norming vectors ``alpha`` (K, M).

    ``rho`` is real for ``lam >= 0`` and ``i sqrt(-lam)`` otherwise.
    ``degenerate`` marks data containing multiple eigenvalues.
    """

    lam: np.ndarray
    alpha: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).reshape(-1)
        alpha = np.array(self.alpha, dtype=float)
        if alpha.ndim != 2 or alpha.shape[0] != lam.size:
            raise ValueError("alpha must have shape (K, M)")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be non-decreasing")
        if np.any(np.all(alpha == 0, axis=1)):
            raise ValueError("norming vectors must not vanish")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(alpha))):
            raise ValueError("spectral data must be finite")
        lam.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", alpha)

    @property
    def K(self):
        return self.lam.size

    @property
    def M(self):
        return self.alpha.shape[1]

    @property
    def rho(self):
        return np.where(self.lam >= 0, np.sqrt(np.abs(self.lam)) + 0j,
                        1j * np.sqrt(np.abs(self.lam)))

    @property
    def t(self):
        """Signed roots ``sign(lam) sqrt|lam|``."""
        return np.sign(self.lam) * np.sqrt(np.abs(self.lam))

    def head(self, K):
        return SpectralDataSet(self.lam[:K], self.alpha[:K], self.degenerate)

    def with_alpha(self, alpha):
        return SpectralDataSet(self.lam, alpha, self.degenerate)

    def to_dict(self):
        d = {
            "M": self.M,
            "entries": [
                {"lambda": float(l), "alpha": a.tolist()} for l, a in zip(self.lam, self.alpha)
            ],
        }
        if self.degenerate:
            d["degenerate"] = True
        return d

    @classmethod
    def from_dict(cls, d):
        M = int(d["M"])
        entries = d["entries"]
        lam = np.array([e["lambda"] for e in entries], dtype=float)
        alpha = np.array([e["alpha"] for e in entries], dtype=float).reshape(len(entries), M)
        return cls(lam, alpha, bool(d.get("degenerate", False)))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TwoSpectra:
    """Per-edge DD roots ``mu``, DN roots ``nu``, ``omega`` and multipliers ``beta``."""

    mu: np.ndarray
    nu: np.ndarray
    omega: float
    beta: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_dict(self):
        return {
            "mu": np.asarray(self.mu).tolist(),
            "nu": np.asarray(self.nu).tolist(),
            "omega": float(self.omega),
            "beta": np.asarray(self.beta).tolist(),
        }


def _example1_edges():
    return [
        (math.e / 2, lambda x: np.abs(x - 1.0) + 1.0),
        (1.0, lambda x: np.exp(-((x - 0.5) ** 2))),
        (math.pi / 2, lambda x: np.sin(8.0 * x) + 2.0 * math.pi / 3.0),
        (math.pi / 3, lambda x: np.cos(9.0 * x * x) + 1.0),
        (math.e**2 / 4, lambda x: 1.0 / (x + 0.1)),
    ]


def _example2_edges():
    return _example1_edges() + [
        (1.1, lambda x: 1.0 / (x + 0.1) ** 2),
        (1.2, np.exp),
        (1.3, lambda x: np.full_like(x, math.pi**2)),
        (1.4, lambda x: scipy.special.j0(9.0 * x)),
    ]


def _zero_edges():
    return [(1.0, np.zeros_like)] * 3


DEMO_GRAPHS = {"example1": _example1_edges, "example2": _example2_edges, "zero": _zero_edges}


def make_demo_graph(name, grid_points=DEFAULT_GRID_POINTS):
    """Demo graphs: ``example1`` (5 edges), ``example2`` (9 edges), ``zero`` (3 unit edges, q = 0)."""
    try:
        spec = DEMO_GRAPHS[name]()
    except KeyError:
        raise ValueError(f"unknown demo graph {name!r}; choose from {sorted(DEMO_GRAPHS)}") from None
    return StarGraph(tuple(Edge.from_callable(L, f, grid_points) for L, f in spec))
