"""Frequency-comb superpositions.

A comb is psi(x) = sum_k A_k exp(i omega_k (x - tau_k)) with equally spaced
teeth omega_k = omega_min + k Omega / (K - 1). Two ways of choosing the free
parameters are provided: a least-squares fit of the amplitudes to target
samples, and a phase (delay) descent that minimises the energy of an
equal-amplitude comb over a short window [-T, T].
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .approx import PINV_RCOND

__all__ = [
    "CombSpec",
    "PhaseDescentConfig",
    "PhaseDescentResult",
    "comb_fit",
    "comb_frequencies",
    "interference_energy",
    "interference_gradient",
    "phase_descent",
]


def comb_frequencies(K: int, omega_min: float, Omega: float) -> np.ndarray:
    """omega_k = k/(K-1) * Omega + omega_min, k = 0..K-1 (K = 1 gives omega_min)."""
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    if not Omega > 0:
        raise ValueError("Omega must be positive")
    K = int(K)
    if K == 1:
        return np.array([float(omega_min)])
    return np.arange(K) / (K - 1) * Omega + omega_min


@dataclass(frozen=True)
class CombSpec:
    """Comb teeth, amplitudes and per-tooth delays.

    ``omegas`` defaults to the equally spaced teeth; an explicit list (for
    example from :func:`phase_descent`) overrides it.
    """

    K: int
    omega_min: float
    Omega: float
    amplitudes: np.ndarray = dc_field(repr=False)
    delays: np.ndarray | None = dc_field(default=None, repr=False)
    omegas: np.ndarray | None = dc_field(default=None, repr=False)
    diagnostics: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        omegas = comb_frequencies(self.K, self.omega_min, self.Omega) if self.omegas is None else np.asarray(self.omegas, float)
        if omegas.shape != (self.K,):
            raise ValueError(f"expected {self.K} frequencies, got {omegas.shape}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.K,):
            raise ValueError(f"expected {self.K} amplitudes, got {amps.shape}")
        delays = np.zeros(self.K) if self.delays is None else np.asarray(self.delays, dtype=float)
        if delays.shape != (self.K,):
            raise ValueError(f"expected {self.K} delays, got {delays.shape}")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "delays", delays)

    @property
    def bandlimit(self) -> float:
        return float(np.max(np.abs(self.omegas)))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.multiply.outer(x, self.omegas) - self.omegas * self.delays
        return np.exp(1j * phase) @ self.amplitudes


def comb_fit(x, F, K: int, omega_min: float, Omega: float, rcond: float = PINV_RCOND) -> CombSpec:
    """Amplitudes A = M^+ F with M_ik = exp(i omega_k x_i).

    With fewer distinct samples than teeth the minimum-norm solution is
    returned; ``diagnostics['rank']`` reports the numerical rank of M.
    """
    x = np.asarray(x, dtype=float).ravel()
    F = np.asarray(F, dtype=complex).ravel()
    if x.shape != F.shape or x.size == 0:
        raise ValueError("x and F must be non-empty and of equal length")
    omegas = comb_frequencies(K, omega_min, Omega)
    M = np.exp(1j * np.multiply.outer(x, omegas))
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    keep = s > rcond * s[0]
    A = vh.conj().T @ (np.where(keep, 1 / np.where(keep, s, 1), 0) * (u.conj().T @ F))
    resid = float(np.sum(np.abs(M @ A - F) ** 2))
    diag = {"rank": int(keep.sum()), "n_samples": int(x.size), "residual": resid,
            "condition": float(s[0] / s[keep][-1])}
    return CombSpec(int(K), float(omega_min), float(Omega), A, None, omegas, diag)


# --------------------------------------------------------------------------
# interference minimisation


@dataclass(frozen=True)
class PhaseDescentConfig:
    T_SO: float
    step: float = 1.0
    max_iter: int = 2000
    restarts: int = 16
    tol: float = 1e-15
    seed: int = 0

    def __post_init__(self):
        if not self.T_SO > 0:
            raise ValueError("T_SO must be positive")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise ValueError("restarts must be a positive integer")


@dataclass(frozen=True)
class PhaseDescentResult:
    comb: CombSpec
    objective: float
    converged: bool
    history: list
    restart_objectives: list


def _overlap(omegas: np.ndarray, T: float) -> np.ndarray:
    # S_ij = integral over [-T, T] of exp(i (omega_i - omega_j) t) dt
    d = np.subtract.outer(omegas, omegas)
    return 2 * T * np.sinc(d * T / np.pi)


def _energy_theta(theta, S, A2):
    c = np.cos(np.subtract.outer(theta, theta))
    return float(A2 * np.sum(S * c))


def _grad_theta(theta, S, A2):
    s = np.sin(np.subtract.outer(theta, theta))
    return -2 * A2 * np.sum(S * s, axis=1)


def interference_energy(A: float, omegas, delays, T_SO: float) -> float:
    """I = int_{-T}^{T} |sum_i A exp(i omega_i (t - tau_i))|^2 dt in closed form."""
    omegas = np.asarray(omegas, float)
    theta = omegas * np.asarray(delays, float)
    return _energy_theta(theta, _overlap(omegas, T_SO), abs(A) ** 2)


def interference_gradient(A: float, omegas, delays, T_SO: float) -> np.ndarray:
    """dI/dtau_i = -2 A^2 omega_i sum_j S_ij sin(omega_i tau_i - omega_j tau_j)."""
    omegas = np.asarray(omegas, float)
    theta = omegas * np.asarray(delays, float)
    return omegas * _grad_theta(theta, _overlap(omegas, T_SO), abs(A) ** 2)


def _descend(theta, S, A2, cfg: PhaseDescentConfig):
    # gradient descent on the phases theta_i = omega_i tau_i with theta_0 fixed
    f = _energy_theta(theta, S, A2)
    history = [f]
    step = cfg.step
    converged = False
    for _ in range(cfg.max_iter):
        g = _grad_theta(theta, S, A2)
        g[0] = 0.0
        gg = float(g @ g)
        if gg == 0.0:
            converged = True
            break
        # backtracking (Armijo) line search
        t = step
        while True:
            trial = theta - t * g
            ft = _energy_theta(trial, S, A2)
            if ft <= f - 1e-4 * t * gg or t < 1e-16:
                break
            t *= 0.5
        if ft > f:
            converged = True
            break
        done = f - ft <= cfg.tol * max(abs(f), A2 * S[0, 0])
        theta, f = trial, ft
        history.append(f)
        step = min(cfg.step, 2 * t)
        if done:
            converged = True
            break
    return theta, f, converged, history


def phase_descent(A: float, omegas, config: PhaseDescentConfig) -> PhaseDescentResult:
    """Delays minimising the comb energy over [-T_SO, T_SO].

    tau_0 is fixed at 0 (a common time shift only moves the window). Each of
    ``config.restarts`` random starts draws its phases from its own child of
    ``config.seed``; the best local minimum is returned.
    """
    omegas = np.asarray(omegas, dtype=float).ravel()
    if omegas.size < 1:
        raise ValueError("need at least one frequency")
    if np.any(omegas == 0) and omegas.size > 1:
        raise ValueError("frequencies must be nonzero (a zero frequency has no delay)")
    S = _overlap(omegas, config.T_SO)
    A2 = abs(A) ** 2
    best = None
    finals = []
    for child in np.random.SeedSequence(config.seed).spawn(config.restarts):
        rng = np.random.default_rng(child)
        theta0 = rng.uniform(0, 2 * np.pi, omegas.size)
        theta0[0] = 0.0
        out = _descend(theta0, S, A2, config)
        finals.append(out[1])
        if best is None or out[1] < best[1]:
            best = out
    theta, f, converged, history = best
    # delays modulo one period of each tooth
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(omegas != 0, np.mod(theta, 2 * np.pi) / omegas, 0.0)
    tau[0] = 0.0
    K = omegas.size
    spec = CombSpec(K, float(omegas.min()), float(np.ptp(omegas)) or 1.0, np.full(K, A, dtype=complex), tau, omegas,
                    {"objective": f, "converged": converged})
    return PhaseDescentResult(spec, f, converged, history, finals)
