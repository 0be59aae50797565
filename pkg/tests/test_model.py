import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snnswitch.errors import ConfigError
from snnswitch.model import (
    GESTURE_DENSITY,
    LayerSpec,
    NetworkSpec,
    NeuronParams,
    Population,
    Projection,
    SynapseTable,
    build_application_graph,
    gesture_network,
    layer_features,
    load_network,
    network_from_dict,
    network_to_dict,
    realize_synapses,
)

layer_specs = st.builds(
    LayerSpec,
    n_source=st.integers(1, 80),
    n_target=st.integers(1, 80),
    delay_range=st.integers(1, 16),
    weight_density=st.sampled_from([0.05, 0.1, 0.25, 0.5, 0.75, 1.0]),
    seed=st.integers(0, 2**32),
)


def test_full_density_forces_all_pairs():
    t = realize_synapses(LayerSpec(2, 2, 1, 1.0, seed=5))
    assert len(t) == 4
    assert set(zip(t.sources.tolist(), t.targets.tolist())) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert set(t.delays.tolist()) == {1}


def test_entry_count_matches_density():
    assert len(realize_synapses(LayerSpec(10, 10, 3, 0.1, seed=1))) == 10


def test_realize_is_deterministic():
    spec = LayerSpec(40, 30, 8, 0.3, seed=99)
    a, b = realize_synapses(spec), realize_synapses(spec)
    assert a == b
    for name in ("sources", "targets", "weights", "delays"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    assert realize_synapses(LayerSpec(40, 30, 8, 0.3, seed=100)) != a


def test_empty_after_rounding_is_an_error():
    with pytest.raises(ConfigError, match="empty layer"):
        realize_synapses(LayerSpec(2, 2, 1, 0.1))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_source=0, n_target=1, delay_range=1, weight_density=0.5),
        dict(n_source=1, n_target=1, delay_range=0, weight_density=0.5),
        dict(n_source=1, n_target=1, delay_range=1, weight_density=0.0),
        dict(n_source=1, n_target=1, delay_range=1, weight_density=1.5),
        dict(n_source=1, n_target=1, delay_range=17, weight_density=0.5),
        dict(n_source=1, n_target=1, delay_range=1, weight_density=float("nan")),
    ],
)
def test_layer_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        LayerSpec(**kwargs)


def test_max_delay_can_be_raised():
    assert LayerSpec(1, 1, 20, 1.0, max_delay=32).delay_range == 20


@given(layer_specs)
def test_realized_tables_respect_spec(spec):
    expected = spec.weight_density * spec.n_source * spec.n_target
    if round(expected) == 0:
        return
    t = realize_synapses(spec)
    assert abs(len(t) - expected) < 1
    assert t.delays.min() >= 1 and t.delays.max() <= spec.delay_range
    assert np.all(t.weights != 0)
    flat = t.sources.astype(np.int64) * spec.n_target + t.targets
    assert np.all(np.diff(flat) > 0)


def test_from_entries_validation():
    t = SynapseTable.from_entries(3, 2, [(2, 1, -5, 2), (0, 0, 7, 1)])
    assert t.entries() == [(0, 0, 7, 1), (2, 1, -5, 2)]
    assert t.delay_range == 2
    assert t.synapse_types.tolist() == [0, 1]
    assert t.dense()[1, 1, 2] == -5
    for bad in ([(0, 0, 0, 1)], [(5, 0, 1, 1)], [(0, 0, 1, 0)], [(0, 0, 1, 1), (0, 0, 2, 1)]):
        with pytest.raises(ConfigError):
            SynapseTable.from_entries(3, 2, bad)
    with pytest.raises(ConfigError):
        SynapseTable.from_entries(3, 2, [(0, 0, 1, 3)], delay_range=2)


def test_application_graph_structure():
    a = Population("a", 10)
    b = Population("b", 5, NeuronParams())
    c = Population("c", 3, NeuronParams())
    net = NetworkSpec(
        (a, b, c),
        (
            Projection("a", "b", LayerSpec(10, 5, 2, 0.5)),
            Projection("b", "c", LayerSpec(5, 3, 1, 1.0)),
        ),
    )
    g = build_application_graph(net)
    assert len(g.vertices) == 3 and len(g.edges) == 2
    assert [(e.source, e.target) for e in g.edges] == [(0, 1), (1, 2)]
    assert len(build_application_graph(NetworkSpec((a, b))).edges) == 0


def test_application_graph_rejects_inconsistent_networks():
    a = Population("a", 10)
    b = Population("b", 5, NeuronParams())
    with pytest.raises(ConfigError, match="unknown population"):
        build_application_graph(NetworkSpec((a, b), (Projection("a", "zz", LayerSpec(10, 5, 1, 1.0)),)))
    with pytest.raises(ConfigError, match="shape"):
        build_application_graph(NetworkSpec((a, b), (Projection("a", "b", LayerSpec(9, 5, 1, 1.0)),)))
    with pytest.raises(ConfigError, match="input population"):
        build_application_graph(NetworkSpec((a, b), (Projection("b", "a", LayerSpec(5, 10, 1, 1.0)),)))
    with pytest.raises(ConfigError, match="duplicate"):
        NetworkSpec((a, a))


def test_gesture_network_shape():
    net = gesture_network()
    g = build_application_graph(net)
    assert [v.population.size for v in g.vertices] == [2048, 20, 4]
    assert len(g.edges) == 2
    assert layer_features(net.projections[0].layer).as_tuple() == (1.0, 2048.0, 20.0, GESTURE_DENSITY)
    assert GESTURE_DENSITY == 0.0316


@pytest.mark.parametrize(
    "args", [(16, 500, 500, 1.0), (1, 50, 50, 0.1)]
)
def test_layer_features_identity(args):
    d, ns, nt, rho = args
    assert layer_features(LayerSpec(ns, nt, d, rho)).as_tuple() == args


def test_neuron_params_validation():
    with pytest.raises(ConfigError):
        NeuronParams(alpha_q=2**15)
    with pytest.raises(ConfigError):
        NeuronParams(v_th=0)
    with pytest.raises(ConfigError):
        NeuronParams(reset="hold")


def test_network_json_round_trip(tmp_path):
    doc = {
        "populations": [
            {"name": "in", "size": 6, "input": True},
            {"name": "out", "size": 4, "params": {"v_th": 30}},
        ],
        "projections": [
            {"from": "in", "to": "out", "synapses": [[0, 1, 12, 2], [5, 3, -7, 1]]},
        ],
    }
    net = network_from_dict(doc)
    assert net.population("out").params.v_th == 30
    proj = net.projections[0]
    assert proj.synapses.entries() == [(0, 1, 12, 2), (5, 3, -7, 1)]
    path = tmp_path / "net.json"
    path.write_text(json.dumps(network_to_dict(net)))
    again = load_network(path)
    assert again.projections[0].synapses == proj.synapses
    assert again.population("out").params == net.population("out").params


def test_network_json_errors(tmp_path):
    with pytest.raises(ConfigError):
        network_from_dict({})
    with pytest.raises(ConfigError, match="unknown population"):
        network_from_dict({"populations": [{"name": "a", "size": 2, "input": True}],
                           "projections": [{"from": "a", "to": "b", "delay_range": 1, "density": 1.0}]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_network(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_network(tmp_path / "missing.json")
