"""Particle swarm with stagnation-adaptive coefficients (PSOPSSL).

Velocity update per particle ``k``::

    v <- w_k v + c1_k r1 (pbest_k - x) + c2 r2 (gbest - x)
    c1_k = c1_0 + step * s1_k        c2 = c2_0 + step * s2
    w_k  <- max(w_floor, w_k - step * s1_k)

where ``s1_k`` counts rounds since particle k's personal best last moved and
``s2`` the rounds since the global best last moved.  Positions are advanced
by ``x <- x + v`` and clipped to the box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from stackmec.errors import ConfigurationError


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 30
    inner_iterations: int = 50
    w0: float = 0.9
    c1_0: float = 1.5
    c2_0: float = 1.5
    adaptation_step: float = 0.1
    w_floor: float = 0.05
    adaptive: bool = True  # False gives plain PSO with frozen coefficients

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ConfigurationError("swarm_size must be >= 2")
        if self.inner_iterations < 0:
            raise ConfigurationError("inner_iterations must be >= 0")
        if self.w_floor < 0:
            raise ConfigurationError("w_floor must be >= 0")


@dataclass
class ParticleState:
    positions: np.ndarray  # (n, d)
    velocities: np.ndarray
    best_positions: np.ndarray
    best_values: np.ndarray  # (n,)
    global_best: np.ndarray  # (d,)
    global_value: float
    inertia: np.ndarray  # (n,)
    s1: np.ndarray  # (n,) personal-best stagnation rounds
    s2: int = 0  # global-best stagnation rounds
    tau: int = 0


@dataclass
class PsoResult:
    x: np.ndarray
    value: float
    history: list = field(default_factory=list)  # global best value after each round

    @property
    def iterations(self) -> int:
        return len(self.history) - 1


class Psopssl:
    """Maximiser of ``objective`` over the box ``[lower, upper]``.

    ``objective`` receives an ``(n, d)`` array of candidates and returns ``n``
    values.  ``initial`` (optional) seeds the first particle, which lets a
    caller warm-start from an incumbent solution.
    """

    def __init__(self, objective, lower, upper, cfg: PsoConfig = PsoConfig(), seed=None,
                 initial=None):
        self.objective = objective
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ConfigurationError("bounds must have matching shapes")
        if not (np.isfinite(self.lower).all() and np.isfinite(self.upper).all()):
            raise ConfigurationError("bounds must be finite")
        if (self.lower > self.upper).any():
            raise ConfigurationError("lower bound exceeds upper bound")
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)

        n, d = cfg.swarm_size, self.lower.size
        x = self.lower + self.rng.random((n, d)) * (self.upper - self.lower)
        if initial is not None:
            x[0] = np.clip(np.atleast_1d(initial), self.lower, self.upper)
        f = self._evaluate(x)
        k = int(np.argmax(f))
        self.state = ParticleState(
            positions=x,
            velocities=np.zeros((n, d)),
            best_positions=x.copy(),
            best_values=f.copy(),
            global_best=x[k].copy(),
            global_value=float(f[k]),
            inertia=np.full(n, cfg.w0),
            s1=np.zeros(n, dtype=int),
        )

    def _evaluate(self, x):
        return np.asarray(self.objective(x), dtype=float).reshape(len(x))

    def coefficients(self):
        """Current ``(w, c1, c2)``; w and c1 per particle."""
        st, cfg = self.state, self.cfg
        if not cfg.adaptive:
            n = len(st.s1)
            return np.full(n, cfg.w0), np.full(n, cfg.c1_0), cfg.c2_0
        c1 = cfg.c1_0 + cfg.adaptation_step * st.s1
        c2 = cfg.c2_0 + cfg.adaptation_step * st.s2
        return st.inertia, c1, c2

    def step(self):
        st, cfg = self.state, self.cfg
        w, c1, c2 = self.coefficients()
        r1 = self.rng.random(st.positions.shape)
        r2 = self.rng.random(st.positions.shape)
        st.velocities = (w[:, None] * st.velocities
                         + c1[:, None] * r1 * (st.best_positions - st.positions)
                         + c2 * r2 * (st.global_best - st.positions))
        st.positions = np.clip(st.positions + st.velocities, self.lower, self.upper)
        f = self._evaluate(st.positions)

        improved = f > st.best_values
        st.best_positions[improved] = st.positions[improved]
        st.best_values[improved] = f[improved]
        st.s1 = np.where(improved, 0, st.s1 + 1)

        k = int(np.argmax(st.best_values))
        if st.best_values[k] > st.global_value:
            st.global_best = st.best_positions[k].copy()
            st.global_value = float(st.best_values[k])
            st.s2 = 0
        else:
            st.s2 += 1
        if cfg.adaptive:
            st.inertia = np.maximum(cfg.w_floor, st.inertia - cfg.adaptation_step * st.s1)
        st.tau += 1

    def run(self, iterations=None) -> PsoResult:
        iterations = self.cfg.inner_iterations if iterations is None else iterations
        history = [self.state.global_value]
        for _ in range(iterations):
            self.step()
            history.append(self.state.global_value)
        return PsoResult(self.state.global_best.copy(), self.state.global_value, history)


def psopssl_maximize(objective, lower, upper, cfg: PsoConfig = PsoConfig(), seed=None,
                     initial=None) -> PsoResult:
    return Psopssl(objective, lower, upper, cfg, seed, initial).run()


def projected_gradient_ascent(objective, gradient, lower, upper, x0, step: float,
                              iterations: int) -> PsoResult:
    """Fixed-step ascent ``x <- clip(x + step * grad(x))``; tracks the best value."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    x = np.clip(np.atleast_1d(np.asarray(x0, dtype=float)), lower, upper)
    best_x, best_v = x.copy(), float(objective(x[None, :])[0])
    history = [best_v]
    for _ in range(iterations):
        x = np.clip(x + step * np.asarray(gradient(x), dtype=float), lower, upper)
        v = float(objective(x[None, :])[0])
        if v > best_v:
            best_x, best_v = x.copy(), v
        history.append(best_v)
    return PsoResult(best_x, best_v, history)
