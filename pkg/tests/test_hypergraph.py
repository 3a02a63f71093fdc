import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_chain
from quantum_nft.errors import CapacityError, ConstraintError, ParameterError, QubitIndexError
from quantum_nft.model import hypergraph
from quantum_nft.model.hypergraph import DoubleHypergraph, HyperedgeMode, VertexClass
from quantum_nft.solver import simcore


class TestLayout:
    def test_vertex_qubits(self):
        assert hypergraph.qubit_of(0, VertexClass.A) == 0
        assert hypergraph.qubit_of(0, VertexClass.B) == 1
        assert hypergraph.qubit_of(2, VertexClass.A) == 4

    def test_edge_instructions_per_class(self):
        both = hypergraph.edge_instructions([0, 1, 2])
        assert [targets for _, targets in both] == [(0, 2, 4), (1, 3, 5)]
        assert all(gate.n_controls == 2 for gate, _ in both)
        only_a = hypergraph.edge_instructions([0, 1], HyperedgeMode.CLASS_A_ONLY)
        assert [targets for _, targets in only_a] == [(0, 2)]


class TestBuildState:
    def test_single_vertex_is_weighted_bell_pair(self):
        state = hypergraph.build_state(DoubleHypergraph(n_vertices=1, weights=[[0.3, 0.2]]))
        expected = np.array([1, 0, 0, np.exp(0.5j)]) / math.sqrt(2)
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    @pytest.mark.parametrize("mode", list(HyperedgeMode))
    def test_chain_shaped_hypergraph_matches_brute_force(self, mode):
        weights = [[0.1, 0.2], [0.05, 0.3], [0.4, 0.15]]
        g = DoubleHypergraph(n_vertices=3, hyperedges=[[0, 1], [0, 1, 2]], weights=weights, mode=mode.value)
        state = hypergraph.build_state(g)
        expected = brute_force_chain([a + b for a, b in weights], mode)
        assert np.max(np.abs(state.amplitudes - expected)) < 1e-12

    def test_unweighted_graph(self):
        state = hypergraph.build_state(DoubleHypergraph(n_vertices=2, hyperedges=[[0, 1]]))
        # both classes add pi/2 on |1111>
        assert state.amplitudes[15] == pytest.approx(-0.5)

    def test_json_description(self):
        g = DoubleHypergraph.from_json(
            '{"n_vertices": 2, "hyperedges": [[0, 1]], "weights": [[0.19, 0.19], [0.09, 0.09]]}'
        )
        assert g.vertex_weights() == [(0.19, 0.19), (0.09, 0.09)]
        assert hypergraph.build_state(g).norm_error() < simcore.NORM_TOLERANCE


class TestValidation:
    def test_too_many_vertices(self):
        with pytest.raises(CapacityError):
            DoubleHypergraph(n_vertices=9).validate()

    @pytest.mark.parametrize("edge", [[0], [1, 1], [0, 5]])
    def test_malformed_hyperedges(self, edge):
        with pytest.raises(QubitIndexError):
            DoubleHypergraph(n_vertices=2, hyperedges=[edge]).validate()

    def test_weights_length(self):
        with pytest.raises(ParameterError):
            DoubleHypergraph(n_vertices=2, weights=[[0.1, 0.1]]).validate()

    def test_weight_pairs(self):
        with pytest.raises(ParameterError):
            DoubleHypergraph(n_vertices=1, weights=[[0.1]]).validate()

    def test_budget(self):
        with pytest.raises(ConstraintError):
            DoubleHypergraph(n_vertices=2, weights=[[1.0, 1.0], [0.6, 0.6]]).validate()

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            DoubleHypergraph(n_vertices=1, mode="class_b_only").validate()


class TestApplyWeight:
    def test_budget_counts_spent_weight(self):
        state = simcore.bell_pair(simcore.new_state(2), 0, 1)
        with pytest.raises(ConstraintError):
            hypergraph.apply_weight(state, 0, VertexClass.B, 1.0, spent=math.pi - 1.0)

    def test_missing_vertex(self):
        with pytest.raises(QubitIndexError):
            hypergraph.apply_weight(simcore.new_state(2), 1, VertexClass.A, 0.1)

    def test_zero_weight_is_identity(self):
        state = simcore.bell_pair(simcore.new_state(2), 0, 1)
        assert hypergraph.apply_weight(state, 0, VertexClass.A, 0.0) is state


@st.composite
def weighted_hypergraphs(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    edges = []
    if n > 1:
        edge = st.lists(st.integers(min_value=0, max_value=n - 1), min_size=2, max_size=n, unique=True)
        edges = draw(st.lists(edge, max_size=4))
    phase = st.floats(min_value=0.0, max_value=0.35, allow_nan=False)
    weights = draw(st.lists(st.tuples(phase, phase), min_size=n, max_size=n))
    mode = draw(st.sampled_from([m.value for m in HyperedgeMode]))
    return DoubleHypergraph(n_vertices=n, hyperedges=edges, weights=[list(w) for w in weights], mode=mode)


class TestGateOrder:
    """Edge gates and weights are all diagonal, so any interleaving gives the same state."""

    @settings(max_examples=40, deadline=None)
    @given(g=weighted_hypergraphs(), data=st.data())
    def test_shuffled_edges_and_weights_match_build_state(self, g, data):
        mode = HyperedgeMode(g.mode)
        steps = [("edge", instruction) for edge in g.hyperedges for instruction in hypergraph.edge_instructions(edge, mode)]
        for v, (theta_a, theta_b) in enumerate(g.vertex_weights()):
            steps.append(("weight", (v, VertexClass.A, theta_a)))
            steps.append(("weight", (v, VertexClass.B, theta_b)))
        order = data.draw(st.permutations(steps))

        state = simcore.new_state(2 * g.n_vertices)
        for v in range(g.n_vertices):
            state = simcore.bell_pair(state, hypergraph.qubit_of(v, VertexClass.A), hypergraph.qubit_of(v, VertexClass.B))
        for kind, step in order:
            if kind == "edge":
                state = simcore.apply_circuit(state, [step])
            else:
                state = hypergraph.apply_weight(state, *step)

        expected = hypergraph.build_state(g)
        assert np.max(np.abs(state.amplitudes - expected.amplitudes)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(g=weighted_hypergraphs(), weights_first=st.booleans())
    def test_weights_commute_with_the_edge_layer(self, g, weights_first):
        mode = HyperedgeMode(g.mode)
        edges = [i for edge in g.hyperedges for i in hypergraph.edge_instructions(edge, mode)]
        state = simcore.new_state(2 * g.n_vertices)
        for v in range(g.n_vertices):
            state = simcore.bell_pair(state, 2 * v, 2 * v + 1)
        if not weights_first:
            state = simcore.apply_circuit(state, edges)
        for v, (theta_a, theta_b) in enumerate(g.vertex_weights()):
            state = hypergraph.apply_weight(state, v, VertexClass.A, theta_a)
            state = hypergraph.apply_weight(state, v, VertexClass.B, theta_b)
        if weights_first:
            state = simcore.apply_circuit(state, edges)
        assert np.allclose(state.amplitudes, hypergraph.build_state(g).amplitudes, atol=1e-12, rtol=0)
