import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from qroute.instance_io import Instance, load_instance_xml

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(REPO_ROOT, "data")
GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")


def cmt01_path() -> str | None:
    """The benchmark instance is user-suppliable; QROUTE_CMT01 overrides the
    bundled copy."""
    override = os.environ.get("QROUTE_CMT01")
    if override:
        return override if os.path.exists(override) else None
    bundled = os.path.join(DATA_DIR, "CMT01.xml")
    return bundled if os.path.exists(bundled) else None


@pytest.fixture(scope="session")
def cmt01() -> Instance:
    path = cmt01_path()
    if path is None:
        pytest.skip("CMT01 instance file not available")
    return load_instance_xml(path)


def toy_instance(num_customers=4, capacity=30, vehicles=2, seed=0, spread=10.0) -> Instance:
    rng = np.random.default_rng(seed)
    coords = tuple(
        (float(x), float(y)) for x, y in rng.uniform(-spread, spread, (num_customers, 2))
    )
    demands = tuple(int(d) for d in rng.integers(1, 10, num_customers))
    return Instance(
        name=f"toy{num_customers}",
        demands=demands,
        capacity=capacity,
        num_vehicles=vehicles,
        customer_coords=coords,
        depot_coord=(0.0, 0.0),
    )
