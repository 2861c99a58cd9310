"""Estimate fidelity from samples with the linear and log XEB estimators.

Noisy samples are drawn from a 12-qubit circuit by Pauli trajectories.  The
bootstrap spread is compared with the analytic sigma, and a KS test checks
the sampled probabilities against the Porter-Thomas mixture.
"""
import numpy as np

from rqcbench.circuit import generate_rqc
from rqcbench.lattice import LatticeTopology, PatternSet
from rqcbench.statevec import NoiseModel, noisy_run, run
from rqcbench.xeb import (
    ErrorBudget,
    XebSample,
    bootstrap_sigma,
    ks_test,
    linear_xeb,
    log_xeb,
    predicted_fidelity,
    theoretical_sigma,
)

topo = LatticeTopology.staggered(4, 3)
circuit = generate_rqc(topo, PatternSet.default(topo), 10, seed=7)
p = run(circuit).probabilities()
D = len(p)
print(f"ideal linear XEB of this circuit: {D * np.sum(p * p) - 1:.3f}")

rng = np.random.default_rng(0)
ideal = XebSample(D, p[rng.choice(D, 20000, p=p / p.sum())])
uniform = XebSample(D, p[rng.integers(0, D, 20000)])
for name, s in (("ideal", ideal), ("uniform", uniform)):
    lin, lg = linear_xeb(s), log_xeb(s)
    print(f"{name:8s} linear {lin.value:+.3f} +/- {lin.sigma:.3f}   log {lg.value:+.3f} +/- {lg.sigma:.3f}")

noise = NoiseModel(0.002, 0.01, 0.02)
idx = noisy_run(circuit, noise, seed=1, n_samples=20000)
noisy = XebSample(D, p[idx])
est = linear_xeb(noisy)
pred = predicted_fidelity(circuit, ErrorBudget.uniform(circuit, noise.e1, noise.e2, noise.er))
print(f"noisy    linear {est.value:.3f} +/- {est.sigma:.3f}, gate-error product {pred:.3f}")

boot = bootstrap_sigma(noisy, 500, seed=2)
print(f"sigma: sample {est.sigma:.4f}, theory {theoretical_sigma(est.value, noisy.Ns):.4f}, "
      f"bootstrap {boot.sigma:.4f}, Gaussian fit {boot.gaussian_fit_sigma:.4f}")

d, pval = ks_test(noisy, est.value)
print(f"KS against the F = {est.value:.3f} mixture: D = {d:.4f}, p = {pval:.3f}")
