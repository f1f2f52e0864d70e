"""Projected gradient descent on a product of mass spheres.

One engine serves the coupled minimization, the one-component problems and the
linear ground-state solves: callers supply energy and gradient callbacks over
tuples of raw arrays.  Trial steps move along the plain gradient and are
radially reprojected; acceptance is an Armijo test against the squared norm of
the tangential (Euler-Lagrange) residual, so every recorded energy decreases
and every recorded iterate sits exactly on its mass sphere.

Once the predicted energy decrease falls below double-precision resolution of
the energy itself, the loop switches to a polishing phase that steps along the
tangential residual and accepts only when the residual norm strictly drops and
the computed energy does not rise; the recorded trace therefore stays
nonincreasing bit for bit while the residual converges to its round-off floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ARMIJO_C = 1e-4          # sufficient-decrease constant
STEP_GROWTH = 1.5        # applied after GROWTH_AFTER consecutive accepts
GROWTH_AFTER = 5
STEP_COLLAPSE = 1e-14
ENERGY_WINDOW = 50       # iterations spanned by the energy-change stop
ENERGY_RESOLUTION = 64 * np.finfo(np.float64).eps
POLISH_MAX_HALVINGS = 30


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the projected descent loop."""

    tau0: float = 0.25
    armijo: float = 0.5
    tol_energy: float = 1e-11
    tol_residual: float = 1e-6
    max_iter: int = 30000

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not 0.0 < self.armijo < 1.0:
            raise ValueError("armijo factor must lie in (0, 1)")
        if not (self.tol_energy > 0 and self.tol_residual > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        object.__setattr__(self, "max_iter", int(self.max_iter))

    def to_dict(self) -> dict:
        return {"tau0": self.tau0, "armijo": self.armijo,
                "tol_energy": self.tol_energy, "tol_residual": self.tol_residual,
                "max_iter": self.max_iter}

    @classmethod
    def from_dict(cls, d: dict) -> "SolverOptions":
        return cls(**d)


@dataclass
class DescentResult:
    states: tuple
    energy: float
    trace: np.ndarray
    residuals: np.ndarray
    taus: np.ndarray
    iterations: int
    converged: bool
    final_residual: float
    multipliers: tuple = field(default_factory=tuple)


def _project(arr: np.ndarray, target: float, vol: float) -> np.ndarray:
    m = float(np.sum(arr * arr)) * vol
    if m <= 0.0:
        raise ValueError("cannot project the zero field onto a mass sphere")
    return arr * np.sqrt(target / m)


def projected_descent(states0, masses, energy_fn, gradient_fn, vol,
                      opts: SolverOptions) -> DescentResult:
    """Minimize energy_fn over states with prescribed masses.

    states0: tuple of real arrays (initial guess, any masses > 0).
    masses:  per-component mass targets.
    energy_fn(states) -> float, gradient_fn(states) -> tuple of arrays; the
    gradient must be the exact L2 gradient of the discrete energy.
    """
    states = tuple(_project(np.array(s, dtype=np.float64), a, vol)
                   for s, a in zip(states0, masses))
    energy = energy_fn(states)
    trace = [energy]
    residuals = []
    taus = []
    tau = opts.tau0
    accepts_in_row = 0
    converged = False
    iterations = 0
    polishing = False
    lams = tuple(0.0 for _ in states)
    grads = None

    def tangential_parts(current, gradients):
        lams_now = tuple(float(np.sum(g * s)) * vol / a
                         for g, s, a in zip(gradients, current, masses))
        tang = tuple(g - lam * s for g, s, lam in
                     zip(gradients, current, lams_now))
        res_sq = sum(float(np.sum(t * t)) * vol for t in tang)
        return lams_now, tang, res_sq

    grads = gradient_fn(states)
    lams, tangential, res_sq = tangential_parts(states, grads)
    final_residual = np.sqrt(res_sq)

    for iterations in range(1, opts.max_iter + 1):
        residuals.append(final_residual)
        taus.append(tau)

        span = min(ENERGY_WINDOW, len(trace) - 1)
        window_ok = (span == 0 or
                     abs(trace[-1 - span] - trace[-1])
                     <= opts.tol_energy * max(1.0, abs(trace[-1])))
        if final_residual < opts.tol_residual and (window_ok or polishing):
            converged = True
            break
        if res_sq == 0.0:
            converged = True
            break

        if not polishing and tau * res_sq < ENERGY_RESOLUTION * max(1.0, abs(energy)):
            polishing = True

        if not polishing:
            accepted = False
            while True:
                trial = tuple(_project(s - tau * g, a, vol)
                              for s, g, a in zip(states, grads, masses))
                trial_energy = energy_fn(trial)
                if trial_energy <= energy - ARMIJO_C * tau * res_sq:
                    accepted = True
                    break
                tau *= opts.armijo
                accepts_in_row = 0
                if tau < STEP_COLLAPSE:
                    break
            if not accepted:
                polishing = True
                tau = max(tau, opts.tau0 * 1e-6)
                continue
            states = trial
            energy = trial_energy
            trace.append(energy)
            accepts_in_row += 1
            if accepts_in_row >= GROWTH_AFTER:
                tau *= STEP_GROWTH
                accepts_in_row = 0
            grads = gradient_fn(states)
            lams, tangential, res_sq = tangential_parts(states, grads)
            final_residual = np.sqrt(res_sq)
            continue

        # polishing: step along the tangential residual and insist on a strict
        # residual decrease; energy changes here sit below double resolution,
        # so the trace stops growing (its last entry bounds the true energy)
        improved = False
        for _ in range(POLISH_MAX_HALVINGS):
            trial = tuple(_project(s - tau * t, a, vol)
                          for s, t, a in zip(states, tangential, masses))
            trial_grads = gradient_fn(trial)
            t_lams, t_tang, t_res_sq = tangential_parts(trial, trial_grads)
            if t_res_sq < res_sq:
                states = trial
                grads = trial_grads
                lams, tangential, res_sq = t_lams, t_tang, t_res_sq
                final_residual = np.sqrt(res_sq)
                accepts_in_row += 1
                if accepts_in_row >= GROWTH_AFTER:
                    tau *= STEP_GROWTH
                    accepts_in_row = 0
                improved = True
                break
            tau *= 0.5
            accepts_in_row = 0
        if not improved:
            # residual floor reached
            converged = final_residual < opts.tol_residual
            break

    return DescentResult(
        states=states,
        energy=energy,
        trace=np.array(trace),
        residuals=np.array(residuals),
        taus=np.array(taus),
        iterations=iterations,
        converged=converged,
        final_residual=final_residual,
        multipliers=lams,
    )
