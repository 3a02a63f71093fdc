import logging
import math
from dataclasses import dataclass, field
from enum import Enum

from dataclasses_json import dataclass_json

from quantum_nft.errors import CapacityError, ConstraintError, ParameterError, QubitIndexError
from quantum_nft.model import codec
from quantum_nft.solver import simcore

logger = logging.getLogger(__name__)

EDGE_PHASE = math.pi / 2


class VertexClass(Enum):
    """Which qubit of a vertex's Bell pair: A at 2v, B at 2v + 1."""
    A = "A"
    B = "B"


class HyperedgeMode(Enum):
    """
    Which qubit classes receive hyperedge gates.

    BOTH applies one MCP(pi/2) over the class-A qubits of an edge and another
    over its class-B qubits. CLASS_A_ONLY is the alternative reading where
    token qubits stay out of the entangling layer.
    """
    BOTH = "both"
    CLASS_A_ONLY = "class_a_only"

    @property
    def classes(self) -> tuple[VertexClass, ...]:
        if self is HyperedgeMode.CLASS_A_ONLY:
            return (VertexClass.A,)
        return (VertexClass.A, VertexClass.B)


def qubit_of(vertex: int, which: VertexClass) -> int:
    return 2 * vertex + (0 if which is VertexClass.A else 1)


@dataclass_json
@dataclass
class DoubleHypergraph:
    """
    Weighted double hypergraph: one Bell pair per vertex.

    JSON description:
        {"n_vertices": 2, "hyperedges": [[0, 1]], "weights": [[0.19, 0.19], [0.09, 0.09]]}
    `weights[v]` is (theta_A, theta_B) in radians; an omitted weights list means all zeros.
    """
    n_vertices: int
    hyperedges: list[list[int]] = field(default_factory=list)
    weights: list[list[float]] = field(default_factory=list)
    mode: str = HyperedgeMode.BOTH.value

    def vertex_weights(self) -> list[tuple[float, float]]:
        if not self.weights:
            return [(0.0, 0.0)] * self.n_vertices
        return [(float(w[0]), float(w[1])) for w in self.weights]

    def validate(self) -> None:
        """
        Raises:
            CapacityError: If 2 * n_vertices exceeds the statevector limit
            QubitIndexError: On malformed hyperedges
            ParameterError: On malformed weights
            ConstraintError: If the weights break the budget sum < pi
        """
        if not 1 <= 2 * self.n_vertices <= simcore.MAX_STATE_QUBITS:
            raise CapacityError(
                f"{self.n_vertices} vertices need {2 * self.n_vertices} qubits, "
                f"limit is {simcore.MAX_STATE_QUBITS}"
            )
        for edge in self.hyperedges:
            if len(edge) < 2:
                raise QubitIndexError(f"Hyperedge {edge} needs at least two vertices")
            if len(set(edge)) != len(edge):
                raise QubitIndexError(f"Hyperedge {edge} repeats a vertex")
            if any(not 0 <= v < self.n_vertices for v in edge):
                raise QubitIndexError(f"Hyperedge {edge} references a missing vertex")
        if self.weights and len(self.weights) != self.n_vertices:
            raise ParameterError(
                f"Expected {self.n_vertices} weight pairs, got {len(self.weights)}"
            )
        if any(len(w) != 2 for w in self.weights):
            raise ParameterError("Every weight entry must be a (theta_A, theta_B) pair")
        HyperedgeMode(self.mode)
        if not codec.validate_budget(self.vertex_weights()):
            raise ConstraintError(
                f"Weights sum to {sum(a + b for a, b in self.vertex_weights()):.12f}, must stay below pi"
            )


def edge_instructions(
    edge: list[int], mode: HyperedgeMode = HyperedgeMode.BOTH
) -> list[simcore.Instruction]:
    """One MCP(pi/2) per qubit class over the edge's vertices, last vertex as target."""
    gate = simcore.Gate.mcp(EDGE_PHASE, len(edge) - 1)
    return [(gate, tuple(qubit_of(v, which) for v in edge)) for which in mode.classes]


def apply_weight(
    state: simcore.StateVector,
    vertex: int,
    which: VertexClass,
    theta: float,
    spent: float = 0.0,
) -> simcore.StateVector:
    """
    Adds a local phase weight P(theta) to one qubit of a vertex.

    Args:
        state: Register holding the double hypergraph
        vertex: Vertex index
        which: Class A (information) or B (token) qubit
        theta: Phase in radians
        spent: Weight already placed on the register

    Raises:
        ConstraintError: If spent + theta reaches pi
        QubitIndexError: If the vertex does not exist
    """
    if not spent + theta < math.pi:
        raise ConstraintError(f"Weight budget exceeded: {spent} + {theta} >= pi")
    qubit = qubit_of(vertex, which)
    if vertex < 0 or qubit >= state.n_qubits:
        raise QubitIndexError(f"Vertex {vertex} is not part of a {state.n_qubits}-qubit register")
    if theta == 0.0:
        return state
    return simcore.apply_gate(state, simcore.Gate.phase(theta), (qubit,))


def build_state(g: DoubleHypergraph) -> simcore.StateVector:
    """
    Builds the weighted double hypergraph state.

    Vertex v owns qubits (2v, 2v + 1). Each pair starts as a Bell pair, every
    hyperedge receives its MCP(pi/2) gates, then weights are applied locally.
    """
    g.validate()
    mode = HyperedgeMode(g.mode)
    state = simcore.new_state(2 * g.n_vertices)
    for v in range(g.n_vertices):
        state = simcore.bell_pair(state, qubit_of(v, VertexClass.A), qubit_of(v, VertexClass.B))
    for edge in g.hyperedges:
        state = simcore.apply_circuit(state, edge_instructions(edge, mode))
    spent = 0.0
    for v, (theta_a, theta_b) in enumerate(g.vertex_weights()):
        state = apply_weight(state, v, VertexClass.A, theta_a, spent)
        spent += theta_a
        state = apply_weight(state, v, VertexClass.B, theta_b, spent)
        spent += theta_b
    logger.debug(
        f"Built double hypergraph: {g.n_vertices} vertices, {len(g.hyperedges)} hyperedges, weight {spent:.6f}"
    )
    return state
