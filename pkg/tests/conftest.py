import numpy as np
import pytest

from weakhopf.actions import canonical_action, crossed_product, minimality, theta_iso
from weakhopf.deform import deform
from weakhopf.groups import cyclic, symmetric
from weakhopf.reconstruct import reconstruct
from weakhopf.tower import build_tower_from_group

GROUPS = {
    "z2": lambda: cyclic(2),
    "z3": lambda: cyclic(3),
    "z4": lambda: cyclic(4),
    "s3": lambda: symmetric(3),
}
TOWER_NAMES = ["z2", "z3", "z4", "s3"]


@pytest.fixture(scope="session")
def get_tower():
    cache = {}

    def build(name):
        if name not in cache:
            cache[name] = build_tower_from_group(GROUPS[name]())
        return cache[name]

    return build


@pytest.fixture(scope="session")
def get_reconstruction(get_tower):
    cache = {}

    def build(name):
        if name not in cache:
            cache[name] = reconstruct(get_tower(name))
        return cache[name]

    return build


@pytest.fixture(scope="session")
def get_pipeline(get_tower, get_reconstruction):
    """Full deformation / action / crossed-product chain, cached per tower."""
    cache = {}

    def build(name):
        if name not in cache:
            tower = get_tower(name)
            rec = get_reconstruction(name)
            deformed, deform_report = deform(rec.on_b, tower=tower)
            action = canonical_action(tower, deformed)
            crossed = crossed_product(action, rng=np.random.default_rng(0))
            cache[name] = {
                "tower": tower,
                "rec": rec,
                "deformed": deformed,
                "deform_report": deform_report,
                "action": action,
                "crossed": crossed,
                "minimality": minimality(crossed),
                "theta": theta_iso(tower, deformed, crossed),
            }
        return cache[name]

    return build
