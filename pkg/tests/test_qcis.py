import pytest

from helpers import lattice_circuit
from rqcbench.circuit import Circuit, Layer, generate_rqc, validate
from rqcbench.gates import CPhaseParams, Gate, ISwapLikeParams
from rqcbench.lattice import zuchongzhi_56
from rqcbench.qcis import QcisError, emit_qcis, fsim_table, parse_qcis

LISTING = """\
X2P Q01
Y2P Q02
X2P Q03
Y2P Q04
XY2P Q07 0.785398163397448
X2P Q08
// ... lines not shown
Y2P Q63
Y2P Q64
FSIM G1003 1
FSIM G1104 1
FSIM G1408 1
FSIM G1509 1
// ... lines not shown
M Q50
M Q64
"""


def test_sqrt_w_line():
    # positions span six columns, so (1, 0) is site 7
    gates = (Gate("SqrtW", (2,)), Gate("SqrtX", (0,)), Gate("SqrtY", (1,)))
    c = Circuit(3, (Layer("single", gates),), ((0, 0), (0, 5), (1, 0)))
    assert emit_qcis(c).splitlines()[0] == "XY2P Q07 0.785398163397448"


def test_empty_circuit_only_measures():
    c = Circuit(2, (), ((0, 0), (0, 1)))
    assert emit_qcis(c) == "M Q01\nM Q02\n"


def test_minimal_program():
    c = parse_qcis("X2P Q01\nM Q01")
    assert c.n_qubits == 1
    assert [l.kind for l in c.layers] == ["single"]
    assert c.layers[0].gates[0].name == "SqrtX"


def test_round_trip_12_qubits():
    c = lattice_circuit(4, 3, 10, 4)
    back = parse_qcis(emit_qcis(c), cols=3)
    assert back.n_qubits == c.n_qubits
    assert back.layers == c.layers
    assert back.qubit_order == c.qubit_order


def test_round_trip_with_parameter_table():
    c = lattice_circuit(3, 3, 4, 2)
    layers = list(c.layers)
    g = layers[1].gates[0]
    odd = ISwapLikeParams(1.4, 0.5)
    layers[1] = Layer("two", (Gate("ISwapLike", g.targets, odd),) + layers[1].gates[1:])
    c = c.with_layers(layers)
    table = fsim_table(c)
    assert table[1] == ISwapLikeParams() and table[2] == odd
    text = emit_qcis(c)
    assert "FSIM" in text and " 2\n" in text
    assert parse_qcis(text, cols=3, fsim_params=table).layers == c.layers


def test_device_circuit_measures_56():
    topo, ps, _ = zuchongzhi_56()
    c = generate_rqc(topo, ps, 20, 1)
    text = emit_qcis(c)
    assert sum(line.startswith("M ") for line in text.splitlines()) == 56
    back = parse_qcis(text)
    assert back.n_qubits == 56
    assert back.qubit_order == c.qubit_order
    assert back.layers == c.layers


def test_listing_excerpt_parses():
    c = parse_qcis(LISTING)
    assert [l.kind for l in c.layers] == ["single", "two", "single"]
    assert len(c.layers[1].gates) == 4
    assert c.n_qubits == 14


def test_comments_and_blank_lines_ignored():
    c = parse_qcis("\n// header\nX2P Q01   // note\n\nM Q01\n")
    assert c.n_qubits == 1


@pytest.mark.parametrize(
    "text, match",
    [
        ("FROB Q01", "unknown opcode"),
        ("X2P Q1x", "qubit"),
        ("FSIM Gx 1", "coupler|G"),
        ("X2P Q01\nY2P Q01", "already used"),
        ("FSIM G0201 7", "FSIM index"),
        ("XY2P Q01 0.3", "azimuth"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(QcisError, match=match):
        parse_qcis(text)


def test_cphase_has_no_encoding():
    c = Circuit(2, (Layer("single", ()), Layer("two", (Gate("CPhase", (0, 1), CPhaseParams(0.2)),)),
                    Layer("single", ())), ((0, 0), (1, 0)))
    with pytest.raises(QcisError, match="no QCIS encoding"):
        emit_qcis(c)


def test_barrier_free_program_alternates():
    c = parse_qcis("X2P Q01\nX2P Q07\nFSIM G0701 1\nY2P Q01\nY2P Q07\n")
    assert [l.kind for l in c.layers] == ["single", "two", "single"]
    assert validate(c) == []
