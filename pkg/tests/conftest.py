import pytest

from eonsim.net_model import topology_from_dict


def make_topology(links, nodes=None, cores=4, slots=320, name="t"):
    if nodes is None:
        nodes = sorted({n for a, b, _ in links for n in (a, b)})
    doc = {"name": name, "nodes": list(nodes), "links": [{"src": a, "dst": b, "length_km": l} for a, b, l in links]}
    return topology_from_dict(doc, cores=cores, slots_per_core=slots)


@pytest.fixture
def triangle():
    return make_topology([("A", "B", 1), ("B", "C", 1), ("A", "C", 3)])


@pytest.fixture
def line3():
    return make_topology([("A", "B", 100), ("B", "C", 200)])
