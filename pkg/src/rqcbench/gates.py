"""Gate matrices and gate records.

Two-qubit matrices act on ``|a b>`` with the first target ``a`` as the most
significant bit, i.e. row/column index ``2*a + b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt
from typing import Optional, Tuple, Union

import numpy as np

_S2 = 1 / sqrt(2)

SQRT_X = _S2 * np.array([[1, -1j], [-1j, 1]], dtype=complex)
SQRT_Y = _S2 * np.array([[1, -1], [1, 1]], dtype=complex)
# pi/2 rotation about (X+Y)/sqrt(2)
SQRT_W = _S2 * np.array(
    [[1, -1j * np.exp(-1j * pi / 4)], [-1j * np.exp(1j * pi / 4), 1]], dtype=complex
)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

SINGLE_QUBIT_GATES = ("SqrtX", "SqrtY", "SqrtW")
TWO_QUBIT_GATES = ("ISwapLike", "CPhase")

_SINGLE = {"SqrtX": SQRT_X, "SqrtY": SQRT_Y, "SqrtW": SQRT_W}


@dataclass(frozen=True)
class ISwapLikeParams:
    """Parameters of the iSWAP-like coupler gate.

    Defaults are the nominal values theta = pi/2, phi = pi/6 with no
    single-qubit phase accumulation.
    """

    theta: float = pi / 2
    phi: float = pi / 6
    delta_plus: float = 0.0
    delta_minus: float = 0.0
    delta_minus_off: float = 0.0

    def matrix(self) -> np.ndarray:
        return iswap_like_matrix(
            self.theta, self.phi, self.delta_plus, self.delta_minus, self.delta_minus_off
        )

    def local_phases(self):
        """Angles (a, b, c, d) with U = (Pa (x) Pb) U0(theta, phi) (Pc (x) Pd).

        ``P(x) = diag(1, e^{ix})`` and U0 is the phase-free gate.
        """
        dp, dm, doff = self.delta_plus, self.delta_minus, self.delta_minus_off
        return 0.0, dm - doff, dp - dm, dp + doff

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "phi": self.phi,
            "delta_plus": self.delta_plus,
            "delta_minus": self.delta_minus,
            "delta_minus_off": self.delta_minus_off,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ISwapLikeParams":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class CPhaseParams:
    """diag(1, e^{i phase_b}, e^{i phase_a}, e^{i(phase_a + phase_b - phi)})."""

    phi: float
    phase_a: float = 0.0
    phase_b: float = 0.0

    def matrix(self) -> np.ndarray:
        return cphase_matrix(self.phi, self.phase_a, self.phase_b)

    def to_dict(self) -> dict:
        return {"phi": self.phi, "phase_a": self.phase_a, "phase_b": self.phase_b}

    @classmethod
    def from_dict(cls, d: dict) -> "CPhaseParams":
        return cls(**{k: float(v) for k, v in d.items()})


def iswap_like_matrix(theta, phi, delta_plus=0.0, delta_minus=0.0, delta_minus_off=0.0):
    c, s = cos(theta), sin(theta)
    e = np.exp
    return np.array(
        [
            [1, 0, 0, 0],
            [0, e(1j * (delta_plus + delta_minus)) * c, -1j * e(1j * (delta_plus - delta_minus_off)) * s, 0],
            [0, -1j * e(1j * (delta_plus + delta_minus_off)) * s, e(1j * (delta_plus - delta_minus)) * c, 0],
            [0, 0, 0, e(1j * (2 * delta_plus - phi))],
        ],
        dtype=complex,
    )


def cphase_matrix(phi, phase_a=0.0, phase_b=0.0):
    return np.diag(
        [1, np.exp(1j * phase_b), np.exp(1j * phase_a), np.exp(1j * (phase_a + phase_b - phi))]
    ).astype(complex)


Params = Union[ISwapLikeParams, CPhaseParams, None]


@dataclass(frozen=True)
class Gate:
    """One gate application: a name from the supported set, targets, params."""

    name: str
    targets: Tuple[int, ...]
    params: Params = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.name in _SINGLE:
            if len(self.targets) != 1:
                raise ValueError(f"{self.name} takes one target, got {self.targets}")
        elif self.name in TWO_QUBIT_GATES:
            if len(self.targets) != 2 or self.targets[0] == self.targets[1]:
                raise ValueError(f"{self.name} takes two distinct targets, got {self.targets}")
            if self.name == "ISwapLike" and self.params is None:
                object.__setattr__(self, "params", ISwapLikeParams())
            if self.name == "CPhase" and not isinstance(self.params, CPhaseParams):
                raise ValueError("CPhase requires CPhaseParams")
        else:
            raise ValueError(f"unknown gate {self.name!r}")

    @property
    def arity(self) -> int:
        return len(self.targets)

    def matrix(self) -> np.ndarray:
        if self.name in _SINGLE:
            return _SINGLE[self.name]
        return self.params.matrix()

    def retarget(self, targets) -> "Gate":
        return Gate(self.name, tuple(targets), self.params)

    def to_dict(self) -> dict:
        d = {"gate": self.name, "targets": list(self.targets)}
        if self.params is not None:
            d["params"] = self.params.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        name = d["gate"]
        params: Optional[object] = None
        if name == "ISwapLike":
            params = ISwapLikeParams.from_dict(d.get("params", {}))
        elif name == "CPhase":
            params = CPhaseParams.from_dict(d["params"])
        return cls(name, tuple(d["targets"]), params)


def is_unitary(m: np.ndarray, atol: float = 1e-12) -> bool:
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=atol)
