import random

import pytest

from wot.catalog import Catalog, Item
from wot.group import setup_params


@pytest.fixture(scope="session")
def p23():
    return setup_params("p23")


@pytest.fixture(scope="session")
def p47():
    return setup_params("p47")


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def make_catalog(weights, rng=None, payload_size=64, ids=None):
    rng = rng or random.Random(1)
    items = []
    for i, w in enumerate(weights):
        item_id = ids[i] if ids else f"item{i:02d}"
        items.append(Item(id=item_id, weight=w, payload=rng.randbytes(payload_size)))
    return Catalog(items=tuple(items))


def write_catalog_dir(path, entries):
    """entries: list of (id, weight, payload bytes). Returns the directory."""
    path.mkdir(parents=True, exist_ok=True)
    lines = ["# id\tweight\tfilename"]
    for item_id, weight, payload in entries:
        filename = f"{item_id}.bin"
        (path / filename).write_bytes(payload)
        lines.append(f"{item_id}\t{weight}\t{filename}")
    (path / "items.tsv").write_text("\n".join(lines) + "\n")
    return path
