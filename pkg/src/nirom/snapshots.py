from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SnapshotMatrix:
    """Flattened field snapshots as columns, sampled every ``dt``.

    ``data`` is m x (N+1); for gridded fields m == nx * ny with each column the
    row-major flattening of an (ny, nx) grid.
    """

    data: np.ndarray
    dt: float
    nx: int
    ny: int
    name: str = "field"

    @property
    def shape(self):
        return self.data.shape

    @property
    def times(self):
        return np.arange(self.data.shape[1]) * self.dt

    def column_grid(self, j):
        return self.data[:, j].reshape(self.ny, self.nx)

    @classmethod
    def from_array(cls, data, dt=1.0, name="field"):
        data = np.ascontiguousarray(data, dtype=float)
        return cls(data, float(dt), data.shape[0], 1, name)
