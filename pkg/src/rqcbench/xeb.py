"""Cross-entropy benchmarking statistics.

With ``D = 2^n`` and ideal probabilities ``p`` of the sampled bitstrings:

* linear XEB ``F_l = <D p> - 1``, standard error ``D sqrt(Var p / Ns)``;
* log XEB ``F_c = <log D p> + gamma``, standard error ``sqrt(Var(log D p) / Ns)``.

For a sampler of fidelity ``F`` on a Porter-Thomas circuit, ``x = D p``
has density ``P_l(x|F) = (F x + 1 - F) e^{-x}`` and ``y = log x`` has density
``P_c(y|F) = (1 + F (e^y - 1)) e^{y - e^y}``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit

EULER_GAMMA = 0.57721566490153286
ESTIMATORS = ("linear", "log")


class XebError(ValueError):
    pass


class ZeroProbabilityError(XebError):
    pass


@dataclass
class XebSample:
    D: float
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 1:
            raise XebError("probs must be one-dimensional")
        if self.probs.size and (self.probs.min() < 0 or self.probs.max() > 1):
            raise XebError("probabilities must lie in [0, 1]")

    @property
    def Ns(self) -> int:
        return int(self.probs.size)

    @classmethod
    def from_scaled(cls, x: Sequence[float], D: float = 2.0**40) -> "XebSample":
        """Build a sample from scaled probabilities ``x = D p``."""
        return cls(D, np.asarray(x, dtype=float) / D)


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    sigma: float
    estimator: str = "linear"
    n_samples: Optional[int] = None

    def to_dict(self) -> dict:
        return {"estimator": self.estimator, "F": self.value, "sigma": self.sigma, "n_samples": self.n_samples}


def _check(sample: XebSample) -> None:
    if sample.Ns < 1:
        raise XebError("empty sample")


def linear_xeb(sample: XebSample) -> FidelityEstimate:
    _check(sample)
    x = sample.D * sample.probs
    sigma = sample.D * math.sqrt(np.var(sample.probs, ddof=1) / sample.Ns) if sample.Ns > 1 else 0.0
    return FidelityEstimate(float(np.mean(x) - 1), float(sigma), "linear", sample.Ns)


def _log_scaled(sample: XebSample, floor: Optional[str]) -> np.ndarray:
    p = sample.probs
    zero = p <= 0
    if zero.any():
        if floor is None:
            raise ZeroProbabilityError(
                f"{int(zero.sum())} sampled bitstrings have zero ideal probability; "
                "pass floor='min' to replace them by the smallest positive value"
            )
        if floor != "min":
            raise XebError(f"unknown floor option {floor!r}")
        pos = p[~zero]
        if not pos.size:
            raise ZeroProbabilityError("every probability is zero")
        p = np.where(zero, pos.min(), p)
    return np.log(sample.D * p)


def log_xeb(sample: XebSample, floor: Optional[str] = None) -> FidelityEstimate:
    """Log XEB; zero probabilities raise unless ``floor='min'``."""
    _check(sample)
    y = _log_scaled(sample, floor)
    sigma = math.sqrt(np.var(y, ddof=1) / sample.Ns) if sample.Ns > 1 else 0.0
    return FidelityEstimate(float(np.mean(y) + EULER_GAMMA), float(sigma), "log", sample.Ns)


def estimate(sample: XebSample, estimator: str = "linear", floor: Optional[str] = None) -> FidelityEstimate:
    if estimator == "linear":
        return linear_xeb(sample)
    if estimator == "log":
        return log_xeb(sample, floor)
    raise XebError(f"unknown estimator {estimator!r}")


def theoretical_sigma(F: float, Ns: float, estimator: str = "linear") -> float:
    if Ns < 1:
        raise XebError("Ns must be at least 1")
    if estimator == "linear":
        return math.sqrt((1 + 2 * F - F * F) / Ns)
    if estimator == "log":
        return math.sqrt((math.pi**2 / 6 - F * F) / Ns)
    raise XebError(f"unknown estimator {estimator!r}")


# ---- predicted fidelity -------------------------------------------------------------

@dataclass
class ErrorBudget:
    """Error rates keyed by gate location ``(layer, index)`` and by qubit."""

    e1: Dict[Tuple[int, int], float] = field(default_factory=dict)
    e2: Dict[Tuple[int, int], float] = field(default_factory=dict)
    er: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("e1", "e2", "er"):
            for k, v in getattr(self, name).items():
                if not 0 <= v < 1:
                    raise XebError(f"{name}[{k}] = {v} outside [0, 1)")

    @classmethod
    def uniform(cls, circuit, e1: float, e2: float, er: float) -> "ErrorBudget":
        b1, b2 = {}, {}
        for li, gi, g in circuit.gates():
            if g.arity == 1:
                b1[(li, gi)] = e1
            else:
                b2[(li, gi)] = e2
        return cls(b1, b2, {q: er for q in range(circuit.n_qubits)})


def predicted_fidelity(circuit, budget: ErrorBudget) -> float:
    """Product of ``(1 - e)`` over every gate and every measured qubit."""
    logf = 0.0
    try:
        for li, gi, g in circuit.gates():
            e = (budget.e1 if g.arity == 1 else budget.e2)[(li, gi)]
            logf += math.log1p(-e)
        for q in range(circuit.n_qubits):
            logf += math.log1p(-budget.er[q])
    except KeyError as exc:
        raise XebError(f"error budget has no entry for {exc.args[0]}") from None
    return math.exp(logf)


# ---- Porter-Thomas densities ----------------------------------------------------------

def pdf_linear(x, F: float):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, (F * x + 1 - F) * np.exp(-x), 0.0)


def cdf_linear(x, F: float):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, -np.expm1(-x) - F * x * np.exp(-x), 0.0)


def pdf_log(y, F: float):
    y = np.asarray(y, dtype=float)
    # split so that huge y gives 0 rather than inf * 0
    with np.errstate(over="ignore"):
        ey = np.exp(y)
        return (1 - F) * np.exp(y - ey) + F * np.exp(2 * y - ey)


def cdf_log(y, F: float):
    return cdf_linear(np.exp(np.asarray(y, dtype=float)), F)


def sample_linear(F: float, size: int, seed, iterations: int = 64) -> np.ndarray:
    """Draw ``x`` from ``P_l(x|F)`` by vectorised bisection on the CDF."""
    rng = np.random.default_rng(seed)
    u = rng.random(size)
    lo = np.zeros(size)
    hi = np.full(size, 64.0)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = cdf_linear(mid, F) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_log(F: float, size: int, seed) -> np.ndarray:
    """Draw ``y = log x`` with ``x`` from ``P_l(x|F)``."""
    return np.log(sample_linear(F, size, seed))


# ---- Kolmogorov-Smirnov -----------------------------------------------------------------

def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """Survival function of the Kolmogorov distribution.

    Uses ``2 sum (-1)^(k-1) exp(-2 k^2 lam^2)`` for ``lam >= 1`` and the
    equivalent theta-function form ``1 - sqrt(2 pi)/lam sum exp(-(2k-1)^2
    pi^2 / (8 lam^2))`` below, where the alternating series converges slowly.
    """
    if lam <= 0:
        return 1.0
    k = np.arange(1, terms + 1, dtype=float)
    if lam >= 1.0:
        s = 2 * np.sum((-1) ** (k - 1) * np.exp(-2 * k * k * lam * lam))
    else:
        s = 1 - math.sqrt(2 * math.pi) / lam * np.sum(np.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * lam * lam)))
    return float(min(1.0, max(0.0, s)))


def ks_statistic(values: np.ndarray, cdf) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    c = cdf(v)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - c), np.max(c - (i - 1) / n)))


def ks_test(sample: XebSample, F: float, estimator: str = "linear", floor: Optional[str] = None) -> Tuple[float, float]:
    """``(D_KS, p_value)`` of the sample against ``P(.|F)``, asymptotic p-value."""
    _check(sample)
    if estimator == "linear":
        d = ks_statistic(sample.D * sample.probs, lambda v: cdf_linear(v, F))
    elif estimator == "log":
        d = ks_statistic(_log_scaled(sample, floor), lambda v: cdf_log(v, F))
    else:
        raise XebError(f"unknown estimator {estimator!r}")
    return d, kolmogorov_sf(math.sqrt(sample.Ns) * d)


# ---- bootstrap and combination ------------------------------------------------------------

@dataclass
class BootstrapResult:
    distribution: np.ndarray
    sigma: float
    gaussian_fit_sigma: float
    estimator: str

    def __iter__(self):
        return iter((self.distribution, self.sigma, self.gaussian_fit_sigma))


def _gauss(x, a, mu, s):
    return a * np.exp(-0.5 * ((x - mu) / s) ** 2)


def gaussian_fit_sigma(values: np.ndarray, bins: int = 50) -> float:
    """Width of a Gaussian least-squares fit to the histogram of ``values``."""
    values = np.asarray(values, dtype=float)
    sd = float(np.std(values))
    if sd == 0 or not np.isfinite(sd):
        return 0.0
    counts, edges = np.histogram(values, bins=bins, density=True)
    centres = 0.5 * (edges[1:] + edges[:-1])
    p0 = (1 / (sd * math.sqrt(2 * math.pi)), float(np.mean(values)), sd)
    popt, _ = curve_fit(_gauss, centres, counts, p0=p0, maxfev=10000)
    return float(abs(popt[2]))


def bootstrap_sigma(
    sample: XebSample,
    n_boot: int = 2500,
    seed=0,
    estimator: str = "linear",
    workers: int = 1,
    floor: Optional[str] = None,
) -> BootstrapResult:
    """Resample with replacement ``n_boot`` times and re-estimate ``F``.

    Replicate ``i`` draws from ``SeedSequence(seed).spawn(n_boot)[i]``, so the
    distribution depends only on ``seed``.
    """
    _check(sample)
    if estimator == "linear":
        vals = sample.D * sample.probs
        stat = lambda v: float(np.mean(v) - 1)
    else:
        vals = _log_scaled(sample, floor)
        stat = lambda v: float(np.mean(v) + EULER_GAMMA)
    seqs = np.random.SeedSequence(seed).spawn(n_boot)
    ns = sample.Ns

    def one(i):
        idx = np.random.default_rng(seqs[i]).integers(0, ns, size=ns)
        return stat(vals[idx])

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            dist = np.array(list(pool.map(one, range(n_boot))))
    else:
        dist = np.array([one(i) for i in range(n_boot)])
    sigma = float(np.std(dist, ddof=1)) if n_boot > 1 else 0.0
    if sigma == 0.0:
        return BootstrapResult(dist, 0.0, 0.0, estimator)
    return BootstrapResult(dist, sigma, gaussian_fit_sigma(dist), estimator)


@dataclass(frozen=True)
class CombinedEstimate:
    value: float
    sigma: float
    z: float
    estimator: str = "linear"

    def to_dict(self) -> dict:
        return {"estimator": self.estimator, "F": self.value, "sigma": self.sigma, "z": self.z}


def combine_instances(estimates: Sequence[FidelityEstimate]) -> CombinedEstimate:
    """Inverse-variance weighted mean; ``z`` is its significance against F = 0."""
    if not estimates:
        raise XebError("nothing to combine")
    sig = np.array([e.sigma for e in estimates], dtype=float)
    if (sig <= 0).any():
        raise XebError("every estimate needs sigma > 0")
    w = 1 / sig**2
    f = float(np.sum(w * np.array([e.value for e in estimates])) / np.sum(w))
    s = float(1 / math.sqrt(np.sum(w)))
    return CombinedEstimate(f, s, f / s, estimates[0].estimator)


# ---- report -------------------------------------------------------------------------

def histogram(values: np.ndarray, bins: int = 40, value_range=None) -> dict:
    counts, edges = np.histogram(values, bins=bins, range=value_range, density=True)
    return {"edges": edges.tolist(), "density": counts.tolist()}


def xeb_report(
    sample: XebSample,
    estimator: str = "linear",
    ks_hypothesis: Optional[float] = None,
    n_boot: int = 0,
    seed=0,
    workers: int = 1,
    floor: Optional[str] = None,
    bins: int = 40,
) -> dict:
    """Everything needed for a fidelity table row and a PDF overlay plot."""
    est = estimate(sample, estimator, floor)
    hyp = est.value if ks_hypothesis is None else ks_hypothesis
    d_ks, p_val = ks_test(sample, hyp, estimator, floor) if sample.Ns >= 10 else (None, None)
    values = sample.D * sample.probs if estimator == "linear" else _log_scaled(sample, floor)
    rng = (0.0, 8.0) if estimator == "linear" else (-8.0, 3.0)
    hist = histogram(values, bins, rng)
    centres = 0.5 * (np.array(hist["edges"][1:]) + np.array(hist["edges"][:-1]))
    model = pdf_linear(centres, hyp) if estimator == "linear" else pdf_log(centres, hyp)
    out = {
        "estimator": estimator,
        "n_samples": sample.Ns,
        "D": sample.D,
        "F": est.value,
        "sigma": est.sigma,
        "theoretical_sigma": theoretical_sigma(est.value, sample.Ns, estimator),
        "ks_hypothesis_F": hyp,
        "D_KS": d_ks,
        "p_value": p_val,
        "n_boot": n_boot,
        "histogram": {**hist, "model_density": model.tolist()},
    }
    if n_boot:
        b = bootstrap_sigma(sample, n_boot, seed, estimator, workers, floor)
        out["bootstrap_sigma"] = b.sigma
        out["bootstrap_gaussian_fit_sigma"] = b.gaussian_fit_sigma
    return out
