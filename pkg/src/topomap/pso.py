"""Force-based particle simulation for neuron layouting.

Two pairwise scalar forces act on the particles: a global force derived
from the cosine distances between profile rows (similar neurons attract)
and a local force derived from the current 2D distances (uniform
spreading).  Over T steps a tanh schedule shifts weight from global to
local, so the map first organizes by similarity and then spreads out.
The same machinery runs the local-only refinement behind the ``*_pso``
hybrid methods and the random baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import TopomapError
from .layouts import BASE_ENGINES, Layout, scale_coordinates
from .nap import NapMatrix, cosine_distance_matrix

DEFAULT_STEPS = 1000
GLOBAL_WEIGHTS = (1.5, 0.5, 2.0)
LOCAL_WEIGHTS = (1.5, 15.0, 2.0)
MAX_DISPLACEMENT = 0.1


@dataclass(frozen=True)
class PsoParams:
    """Simulation parameters.

    step_size None resolves to 0.05/N at run time: the displacement rule
    sums per-pair forces, so the step must shrink with particle count to
    keep wide layers from exploding.
    """

    steps: int = DEFAULT_STEPS
    global_weights: tuple[float, float, float] = GLOBAL_WEIGHTS
    local_weights: tuple[float, float, float] = LOCAL_WEIGHTS
    step_size: float | None = None
    mode: str = "full"
    eq1_literal: bool = False

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise TopomapError("steps must be >= 1")
        if self.mode not in ("full", "local_only"):
            raise TopomapError(f"unknown PSO mode {self.mode!r}")
        if min(*self.global_weights, *self.local_weights) <= 0:
            raise TopomapError("force weights must be positive")
        if self.step_size is not None and self.step_size <= 0:
            raise TopomapError("step_size must be positive")


def global_force(nap_dist: np.ndarray, params: PsoParams | None = None) -> np.ndarray:
    """Pairwise force from profile distances: a*(1-(d/max)^3) - b*e^(-d/c).

    Positive values attract.  The attraction term is normalized by the
    largest off-diagonal distance so it vanishes for the most dissimilar
    pair; with eq1_literal the cube is applied to max(d) alone.  A zero
    distance matrix degenerates to constant attraction a.
    """
    params = params or PsoParams()
    a, b, c = params.global_weights
    dist = np.asarray(nap_dist, dtype=np.float64)
    off = ~np.eye(dist.shape[0], dtype=bool)
    dmax = float(dist[off].max()) if off.any() else 0.0
    if dmax > 0.0:
        if params.eq1_literal:
            attr = a * (1.0 - dist / dmax**3)
        else:
            attr = a * (1.0 - (dist / dmax) ** 3)
    else:
        attr = np.full_like(dist, a)
    return attr - b * np.exp(-dist / c)


def _local_force_from_dist(d: np.ndarray, params: PsoParams) -> np.ndarray:
    a, b, c = params.local_weights
    return a / (d + 1.0) ** 3 - b * np.exp(-d / c)


def local_force(coords: np.ndarray, params: PsoParams | None = None) -> np.ndarray:
    """Pairwise force from 2D distances: a/(d+1)^3 - b*e^(-d/c), zero diagonal."""
    params = params or PsoParams()
    coords = np.asarray(coords, dtype=np.float64)
    delta = coords[None, :, :] - coords[:, None, :]
    d = np.sqrt((delta**2).sum(axis=2))
    f = _local_force_from_dist(d, params)
    np.fill_diagonal(f, 0.0)
    return f


def weight_schedule(t: float, steps: int = DEFAULT_STEPS) -> tuple[float, float]:
    """(w_g, w_l) at step t: w_l = (tanh(9t/T - 3) + 1)/2, w_g = 1 - w_l.

    Computing w_g as the complement keeps w_g + w_l == 1 exactly in
    IEEE doubles.
    """
    s = 9.0 * t / steps - 3.0
    w_l = (np.tanh(s) + 1.0) / 2.0
    return 1.0 - w_l, w_l


@njit(cache=True)
def _simulate_steps(coords, f_glob, use_global, a, b, c, steps, eta, max_disp, seed):
    """Step loop over pairwise forces; returns 0, or the step index at
    which coordinates became non-finite.

    The per-pair force is symmetric, so each (i, j) visit moves both
    particles with exactly opposite contributions.  Coincident pairs draw
    a direction from an inline xorshift generator, making the whole run a
    pure function of (init, forces, seed).
    """
    n = coords.shape[0]
    disp = np.empty((n, 2))
    state = np.uint64(seed) ^ np.uint64(0x9E3779B97F4A7C15)
    if state == np.uint64(0):
        state = np.uint64(1)
    w_g = 0.0
    w_l = 1.0
    for t in range(1, steps + 1):
        if use_global:
            w_l = (np.tanh(9.0 * t / steps - 3.0) + 1.0) / 2.0
            w_g = 1.0 - w_l
        for i in range(n):
            disp[i, 0] = 0.0
            disp[i, 1] = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                dx = coords[j, 0] - coords[i, 0]
                dy = coords[j, 1] - coords[i, 1]
                d = np.sqrt(dx * dx + dy * dy)
                if d > 0.0:
                    ux = dx / d
                    uy = dy / d
                else:
                    state ^= state << np.uint64(13)
                    state ^= state >> np.uint64(7)
                    state ^= state << np.uint64(17)
                    angle = 2.0 * np.pi * (np.float64(state) / 1.8446744073709552e19)
                    ux = np.cos(angle)
                    uy = np.sin(angle)
                f = a / (d + 1.0) ** 3 - b * np.exp(-d / c)
                if use_global:
                    f = 0.5 * (w_g * f_glob[i, j] + w_l * f)
                else:
                    f = 0.5 * f
                disp[i, 0] += f * ux
                disp[i, 1] += f * uy
                disp[j, 0] -= f * ux
                disp[j, 1] -= f * uy
        for i in range(n):
            mx = eta * disp[i, 0]
            my = eta * disp[i, 1]
            norm = np.sqrt(mx * mx + my * my)
            if norm > max_disp:
                mx *= max_disp / norm
                my *= max_disp / norm
            coords[i, 0] += mx
            coords[i, 1] += my
            if not (np.isfinite(coords[i, 0]) and np.isfinite(coords[i, 1])):
                return t
    return 0


def simulate(
    init_coords: np.ndarray,
    nap_dist: np.ndarray | None = None,
    params: PsoParams | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Run the force simulation and return raw (unscaled) coordinates.

    Per step, particle i moves by eta * sum_j f[i,j] * u_ij with u_ij the
    unit vector from i toward j; coincident pairs get a seeded random
    direction (antisymmetric within the pair) and per-particle
    displacement is clamped to MAX_DISPLACEMENT.
    """
    params = params or PsoParams()
    coords = np.array(init_coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise TopomapError("init_coords must be N x 2")
    n = coords.shape[0]
    eta = params.step_size if params.step_size is not None else 0.05 / n

    use_global = params.mode == "full"
    if use_global:
        if nap_dist is None:
            raise TopomapError("mode='full' requires a NAP distance matrix")
        f_glob = np.ascontiguousarray(global_force(nap_dist, params))
    else:
        f_glob = np.zeros((1, 1))
    a, b, c = params.local_weights
    bad_step = _simulate_steps(
        coords, f_glob, use_global, a, b, c, params.steps, eta, MAX_DISPLACEMENT, seed
    )
    if bad_step:
        raise TopomapError(f"non-finite coordinates at step {bad_step}")
    return coords


def _provenance(params: PsoParams) -> dict:
    return {
        "steps": params.steps,
        "mode": params.mode,
        "step_size": params.step_size,
        "eq1_literal": params.eq1_literal,
    }


def pso_optimize(
    init_coords: np.ndarray,
    nap_dist: np.ndarray | None = None,
    params: PsoParams | None = None,
    seed: int = 0,
    method: str = "pso",
    neuron_ids: list[int] | None = None,
) -> Layout:
    params = params or PsoParams()
    raw = simulate(init_coords, nap_dist, params, seed)
    return Layout(
        coords=scale_coordinates(raw),
        method=method,
        seed=seed,
        neuron_ids=neuron_ids,
        params=_provenance(params),
    )


def layout_pso(nap: NapMatrix, params: PsoParams | None = None, seed: int = 0) -> Layout:
    """Full PSO: random uniform init, scheduled global+local forces."""
    params = params or PsoParams()
    if params.mode != "full":
        params = replace(params, mode="full")
    init = np.random.default_rng(seed).random((nap.n_neurons, 2))
    dist = cosine_distance_matrix(nap.layout_features)
    return pso_optimize(init, dist, params, seed, method="pso", neuron_ids=list(nap.neuron_ids))


def random_baseline(
    n: int,
    params: PsoParams | None = None,
    seed: int = 0,
    neuron_ids: list[int] | None = None,
) -> Layout:
    """Local-only run from uniform random positions; ignores profiles."""
    if n < 2:
        raise TopomapError("random_baseline needs at least 2 particles")
    params = params or PsoParams(mode="local_only")
    if params.mode != "local_only":
        params = replace(params, mode="local_only")
    init = np.random.default_rng(seed).random((n, 2))
    return pso_optimize(
        init, None, params, seed, method="random_baseline", neuron_ids=neuron_ids
    )


def hybrid_layout(
    method: str,
    nap: NapMatrix,
    params: PsoParams | None = None,
    seed: int = 0,
    base_kwargs: dict | None = None,
) -> Layout:
    """Base engine, coordinate scaling, then local-only refinement."""
    if method not in BASE_ENGINES:
        raise TopomapError(f"unknown base method {method!r}")
    base = BASE_ENGINES[method](nap, seed=seed, **(base_kwargs or {}))
    params = params or PsoParams(mode="local_only")
    if params.mode != "local_only":
        params = replace(params, mode="local_only")
    raw = simulate(base.coords, None, params, seed)
    provenance = _provenance(params)
    provenance.update(
        {"base_seed": base.seed, "pso_seed": seed, "base_params": base.params}
    )
    return Layout(
        coords=scale_coordinates(raw),
        method=f"{method}_pso",
        seed=seed,
        neuron_ids=list(nap.neuron_ids),
        params=provenance,
    )


def compute_layout(
    method: str,
    nap: NapMatrix,
    seed: int = 0,
    pso_params: PsoParams | None = None,
    **engine_kwargs,
) -> Layout:
    """Dispatch any of the 12 layout methods on a NapMatrix."""
    if method in BASE_ENGINES:
        return BASE_ENGINES[method](nap, seed=seed, **engine_kwargs)
    if method == "pso":
        return layout_pso(nap, params=pso_params, seed=seed)
    if method == "random_baseline":
        return random_baseline(
            nap.n_neurons, params=pso_params, seed=seed, neuron_ids=list(nap.neuron_ids)
        )
    if method.endswith("_pso") and method[:-4] in BASE_ENGINES:
        return hybrid_layout(
            method[:-4], nap, params=pso_params, seed=seed, base_kwargs=engine_kwargs or None
        )
    raise TopomapError(f"unknown layout method {method!r}")
