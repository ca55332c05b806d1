"""
Sample grids in the upper half-plane.

The standard grid is 5×4 points: Re z evenly spaced on [−2, 2] and Im z
log-spaced on [0.1, 10], so near-boundary and far-field behaviour are both
sampled. Points are listed imaginary part first, then real part, which is
also the row order of every report and CSV file.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    re_min: float = -2.0
    re_max: float = 2.0
    im_min: float = 0.1
    im_max: float = 10.0
    re_count: int = 5
    im_count: int = 4

    def __post_init__(self):
        if not self.im_min > 0:
            raise ValueError(f"grid im_min must be positive, got {self.im_min}")
        if self.im_max < self.im_min:
            raise ValueError(f"grid im_max {self.im_max} is below im_min {self.im_min}")
        if self.re_max < self.re_min:
            raise ValueError(f"grid re_max {self.re_max} is below re_min {self.re_min}")
        if self.re_count < 1 or self.im_count < 1:
            raise ValueError("grid counts must be at least 1")

    @classmethod
    def from_mapping(cls, table):
        """Build from a config [grid] table; unknown keys are rejected."""
        known = set(cls.__dataclass_fields__)
        unknown = set(table) - known
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**{key: table[key] for key in table})

    def points(self):
        reals = np.linspace(self.re_min, self.re_max, self.re_count)
        if self.im_count == 1:
            imags = np.array([self.im_min])
        else:
            imags = np.geomspace(self.im_min, self.im_max, self.im_count)
        return tuple(complex(x, y) for y in imags for x in reals)


def standard_grid():
    return GridSpec().points()
