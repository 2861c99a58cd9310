import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import dense_state, embed, lattice_circuit, random_state
from rqcbench.circuit import Circuit, Layer
from rqcbench.gates import PAULI_X, PAULI_Y, PAULI_Z, SQRT_W, SQRT_X, SQRT_Y, Gate, ISwapLikeParams
from rqcbench.statevec import (
    MemoryCapError,
    NoiseModel,
    StateVector,
    apply_gate,
    bitstrings_to_indices,
    fuse,
    ideal_probs,
    indices_to_bitstrings,
    noisy_run,
    read_amplitudes,
    read_samples,
    run,
    sample,
    sample_indices,
    write_amplitudes,
    write_samples,
)


def _bare(n, layers):
    return Circuit(n, tuple(layers), tuple((0, q) for q in range(n)))


def _uniform(n):
    return StateVector(n, np.full(2**n, 2 ** (-n / 2), dtype=complex))


# ---- run -------------------------------------------------------------------------

def test_empty_circuit():
    s = run(_bare(3, []))
    assert np.array_equal(s.amps, np.eye(8)[0])


def test_single_sqrt_x():
    s = run(_bare(1, [Layer("single", (Gate("SqrtX", (0,)),))]))
    assert np.allclose(s.amps, SQRT_X @ [1, 0], atol=1e-15)


def test_bit_order_is_lsb_first():
    c = _bare(3, [Layer("single", (Gate("SqrtX", (2,)),))])
    probs = run(c).probabilities()
    assert probs[0] == pytest.approx(0.5) and probs[4] == pytest.approx(0.5)


def test_two_qubit_target_order():
    # |q0=1, q1=0> is index 1; the first target is the MSB of the matrix.
    u = ISwapLikeParams(0.4, 0.3).matrix()
    psi = StateVector(2, np.array([0, 1, 0, 0], dtype=complex))
    apply_gate(psi, u, (0, 1))
    assert np.allclose(psi.amps, embed(u, (0, 1), 2) @ [0, 1, 0, 0])
    assert psi.amps[1] == pytest.approx(u[2, 2]) and psi.amps[2] == pytest.approx(u[1, 2])


def test_random_10_qubit_against_dense_oracle():
    c = lattice_circuit(5, 2, 12, 17)
    assert c.n_qubits == 10
    assert np.max(np.abs(run(c).amps - dense_state(c))) < 1e-10


def test_norm_preserved_per_layer():
    run(lattice_circuit(3, 3, 8, 2), check_norm=True)
    run(lattice_circuit(3, 3, 8, 2), precision="single", check_norm=True)


def test_single_precision_close_to_double():
    c = lattice_circuit(3, 4, 10, 3)
    d = run(c).amps
    s = run(c, precision="single").amps
    assert s.dtype == np.complex64
    assert np.max(np.abs(s - d)) < 1e-5


def test_workers_bit_identical():
    c = lattice_circuit(4, 4, 8, 9)
    base = run(c, workers=1).amps
    for w in (2, 4, 8):
        assert np.array_equal(run(c, workers=w).amps, base)
        assert np.array_equal(run(c, workers=w, fuse_width=4).amps, run(c, fuse_width=4).amps)


def test_memory_cap_message():
    with pytest.raises(MemoryCapError) as exc:
        run(lattice_circuit(3, 3, 2, 0), memory_cap_bytes=1024)
    assert exc.value.required == 2**10 * 8
    assert "2^10" in str(exc.value) and str(2**10 * 8) in str(exc.value)


def test_memory_cap_from_environment(monkeypatch):
    monkeypatch.setenv("RQC_MEMORY_CAP_BYTES", "100")
    with pytest.raises(MemoryCapError):
        run(lattice_circuit(2, 2, 1, 0))


# ---- fusion ------------------------------------------------------------------------

def test_fuse_two_single_qubit_gates():
    c = _bare(1, [Layer("single", (Gate("SqrtX", (0,)),)), Layer("two", ()), Layer("single", (Gate("SqrtY", (0,)),))])
    (fg,) = fuse(c, 2)
    assert fg.matrix.shape == (2, 2)
    assert len(fg.members) == 2


def test_fuse_single_then_overlapping_two_qubit():
    g2 = Gate("ISwapLike", (0, 1), ISwapLikeParams())
    c = _bare(2, [Layer("single", (Gate("SqrtX", (1,)),)), Layer("two", (g2,))])
    (fg,) = fuse(c, 2)
    assert fg.matrix.shape == (4, 4)
    assert set(fg.targets) == {0, 1}


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_fused_matches_unfused(seed, width):
    c = lattice_circuit(4, 2, 6, seed)
    init = StateVector(8, random_state(8, seed))
    a = run(c, initial=init).amps
    b = run(c, fuse_width=width, initial=init).amps
    assert np.max(np.abs(a - b)) < 1e-10
    for fg in fuse(c, width):
        assert len(fg.targets) <= width
        assert np.allclose(fg.matrix @ fg.matrix.conj().T, np.eye(len(fg.matrix)), atol=1e-10)


def test_fuse_width_must_be_two_or_more():
    with pytest.raises(ValueError):
        fuse(lattice_circuit(2, 2, 1, 0), 1)


# ---- probabilities and sampling ---------------------------------------------------------

def test_ideal_probs_examples():
    zero = StateVector.zero(3)
    assert ideal_probs(zero, ["000", "111"]).tolist() == [1.0, 0.0]
    assert np.allclose(ideal_probs(_uniform(4), ["0110", "1111"]), 1 / 16)
    with pytest.raises(ValueError):
        ideal_probs(zero, ["00"])
    with pytest.raises(ValueError):
        ideal_probs(zero, ["0a0"])


def test_bitstring_convention():
    assert bitstrings_to_indices(["100", "001"], 3).tolist() == [1, 4]
    assert indices_to_bitstrings(np.array([1, 4, 6]), 3) == ["100", "001", "011"]


def test_sample_basis_state():
    amps = np.zeros(16, dtype=complex)
    amps[bitstrings_to_indices(["0101"], 4)[0]] = 1
    assert set(sample(StateVector(4, amps), 500, 1)) == {"0101"}


def test_sample_uniform_frequencies():
    idx = sample_indices(_uniform(2), 10**6, 5)
    freq = np.bincount(idx, minlength=4) / 1e6
    assert np.all(np.abs(freq - 0.25) < 0.002)


def test_sample_reproducible():
    s = run(lattice_circuit(3, 3, 6, 1))
    assert sample(s, 100, 42) == sample(s, 100, 42)
    assert sample(s, 100, 42) != sample(s, 100, 43)


# ---- noise ---------------------------------------------------------------------------------

def test_noise_model_bounds():
    with pytest.raises(ValueError):
        NoiseModel(1.0, 0, 0)
    with pytest.raises(ValueError):
        NoiseModel(0, -0.1, 0)


def _freq(idx, dim):
    return np.bincount(idx, minlength=dim) / len(idx)


def test_zero_noise_matches_ideal_distribution():
    c = lattice_circuit(2, 2, 4, 3)
    p = run(c).probabilities()
    idx = noisy_run(c, NoiseModel(), 7, 100_000)
    sigma = np.sqrt(p * (1 - p) / 100_000)
    assert np.all(np.abs(_freq(idx, 16) - p) < 5 * sigma + 1e-12)


def test_certain_single_qubit_error_is_pauli_mixture():
    # SqrtY then SqrtX: the corrupted outputs differ between X, Y and Z.
    c = _bare(1, [Layer("single", (Gate("SqrtY", (0,)),)), Layer("two", ()), Layer("single", (Gate("SqrtX", (0,)),))])
    e1 = np.nextafter(1.0, 0.0)
    idx = noisy_run(c, NoiseModel(e1, 0, 0), 11, 60_000)
    expect = np.zeros(2)
    for p1 in (PAULI_X, PAULI_Y, PAULI_Z):
        for p2 in (PAULI_X, PAULI_Y, PAULI_Z):
            v = p2 @ SQRT_X @ p1 @ SQRT_Y @ np.array([1, 0])
            expect += np.abs(v) ** 2 / 9
    sigma = np.sqrt(expect * (1 - expect) / 60_000)
    assert np.all(np.abs(_freq(idx, 2) - expect) < 5 * sigma)


def test_certain_two_qubit_error_is_pauli_mixture():
    u = ISwapLikeParams(1.1, 0.5).matrix()
    c = _bare(2, [
        Layer("single", (Gate("SqrtX", (0,)), Gate("SqrtW", (1,)))),
        Layer("two", (Gate("ISwapLike", (0, 1), ISwapLikeParams(1.1, 0.5)),)),
    ])
    e2 = np.nextafter(1.0, 0.0)
    idx = noisy_run(c, NoiseModel(0, e2, 0), 3, 60_000)
    psi = u @ np.kron(SQRT_X @ [1, 0], SQRT_W @ [1, 0])
    paulis = (np.eye(2), PAULI_X, PAULI_Y, PAULI_Z)
    expect = np.zeros(4)
    for code in range(1, 16):
        # first target (qubit 0) is the MSB of the 4x4 operator
        v = np.kron(paulis[code // 4], paulis[code % 4]) @ psi
        expect += np.abs(v) ** 2 / 15
    # matrix order (q0, q1) -> basis index q0 + 2 q1
    expect_idx = expect[[0, 2, 1, 3]]
    sigma = np.sqrt(expect_idx * (1 - expect_idx) / 60_000)
    assert np.all(np.abs(_freq(idx, 4) - expect_idx) < 5 * sigma + 1e-12)


def test_readout_flip_rate():
    c = _bare(3, [])
    idx = noisy_run(c, NoiseModel(0, 0, 0.2), 1, 50_000)
    bits = (idx[:, None] >> np.arange(3)) & 1
    assert np.all(np.abs(bits.mean(axis=0) - 0.2) < 0.01)


def test_noisy_run_independent_of_workers():
    c = lattice_circuit(3, 3, 6, 8)
    noise = NoiseModel(0.01, 0.03, 0.02)
    base = noisy_run(c, noise, 99, 10_000, workers=1)
    for w in (4, 8):
        assert np.array_equal(noisy_run(c, noise, 99, 10_000, workers=w), base)


# ---- files -------------------------------------------------------------------------------------

def test_samples_file_round_trip(tmp_path):
    path = tmp_path / "s.txt"
    write_samples(path, ["010", "111"], 3, 5, "abc")
    assert path.read_text() == "010\n111\n"
    bits, meta = read_samples(path)
    assert bits == ["010", "111"]
    assert meta == {"n": 3, "n_samples": 2, "seed": 5, "circuit_hash": "abc"}


@pytest.mark.parametrize("dtype, width", [(np.complex128, 8), (np.complex64, 4)])
def test_amplitude_dump_round_trip(tmp_path, dtype, width):
    amps = random_state(4, 1).astype(dtype)
    path = tmp_path / "a.bin"
    write_amplitudes(path, amps, {"circuit_hash": "x"})
    head, back = read_amplitudes(path)
    assert head["float_bytes"] == width and head["count"] == 16
    assert np.array_equal(back, amps)
    raw = path.read_bytes().split(b"\n", 1)[1]
    assert len(raw) == 16 * 2 * width
    assert np.frombuffer(raw[:width], dtype="<f8" if width == 8 else "<f4")[0] == amps[0].real
