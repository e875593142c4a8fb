"""Collocation grids and physical (h, theta) fields with CSV/binary dumps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class GridSpec:
    """Periodic rectangle [0, Lx) x [0, Ly) sampled on an nx x ny grid."""

    nx: int
    ny: int
    Lx: float
    Ly: float

    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.Lx / self.nx)

    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (self.Ly / self.ny)

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """(kx, ky) meshgrids, fields indexed [i, j] <-> (x_i, y_j)."""
        kx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.Lx / self.nx)
        ky = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.Ly / self.ny)
        return np.meshgrid(kx, ky, indexing="ij")


@dataclass
class GridField:
    """Real surface-height and temperature fields on a collocation grid."""

    grid: GridSpec
    h: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        shape = (self.grid.nx, self.grid.ny)
        self.h = np.asarray(self.h, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.h.shape != shape or self.theta.shape != shape:
            raise UsageError(f"field arrays must have shape {shape}")

    def to_csv(self, path) -> None:
        x, y = self.grid.x(), self.grid.y()
        with open(path, "w") as fh:
            fh.write("x,y,h,theta\n")
            for i in range(self.grid.nx):
                for j in range(self.grid.ny):
                    fh.write(f"{x[i]:.17g},{y[j]:.17g},{self.h[i, j]:.17g},{self.theta[i, j]:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "GridField":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        x = np.unique(data[:, 0])
        y = np.unique(data[:, 1])
        nx, ny = len(x), len(y)
        if nx * ny != data.shape[0]:
            raise UsageError("grid CSV is not a full tensor grid")
        dx = x[1] - x[0] if nx > 1 else 1.0
        dy = y[1] - y[0] if ny > 1 else 1.0
        grid = GridSpec(nx, ny, nx * dx, ny * dy)
        h = data[:, 2].reshape(nx, ny)
        theta = data[:, 3].reshape(nx, ny)
        return cls(grid, h, theta)

    def to_binary(self, path) -> None:
        """Row-major float64 dump (h block then theta) with a JSON sidecar."""
        path = Path(path)
        np.concatenate([self.h.ravel(), self.theta.ravel()]).astype("<f8").tofile(path)
        sidecar = {"nx": self.grid.nx, "ny": self.grid.ny,
                   "Lx": self.grid.Lx, "Ly": self.grid.Ly}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))

    @classmethod
    def from_binary(cls, path) -> "GridField":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        raw = np.fromfile(path, dtype="<f8")
        n = meta["nx"] * meta["ny"]
        grid = GridSpec(meta["nx"], meta["ny"], meta["Lx"], meta["Ly"])
        return cls(grid, raw[:n].reshape(meta["nx"], meta["ny"]),
                   raw[n:].reshape(meta["nx"], meta["ny"]))
