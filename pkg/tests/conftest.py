import math

import numpy as np
import pytest

from exportnet.geo import Country, WorldGeometry


@pytest.fixture
def line_world():
    """Four countries on a line, distances used as given (scale 1)."""
    pos = {"H": 0.0, "A": math.e, "B": -math.e**2 + math.e, "C": 5.0}
    ids = list(pos)
    km = np.array([[abs(pos[a] - pos[b]) for b in ids] for a in ids])
    countries = [Country(c, 1.0 + k, c == "H") for k, c in enumerate(ids)]
    return WorldGeometry.from_matrix(countries, km, distance_scale=1.0)


def matrix_world(km, gdp=None, home=0):
    km = np.asarray(km, dtype=float)
    n = len(km)
    gdp = [1.0] * n if gdp is None else gdp
    countries = [Country(f"X{k}", float(gdp[k]), k == home) for k in range(n)]
    return WorldGeometry.from_matrix(countries, km, distance_scale=1.0)
