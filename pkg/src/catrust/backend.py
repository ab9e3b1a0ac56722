"""Backend selection: compiled core when importable, pure Python otherwise.

Set ``CATRUST_BACKEND=python`` to force the reference implementation.
"""
from __future__ import annotations

import os

from .ca import CaParams
from .fire import FireParams
from .kernel import LogTable, run_world
from .world import DynamicsConfig, ProviderKind, World, WorldConfig, init_world

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

AVAILABLE = ("compiled", "python") if _core is not None else ("python",)
DEFAULT = "python" if os.environ.get("CATRUST_BACKEND") == "python" else AVAILABLE[0]


def snapshot(world: World) -> dict:
    """Flatten a freshly initialized world for the compiled core."""
    cfg, dyn, cap, fp = world.config, world.dynamics, world.ca_params, world.fire_params
    locs = [c.location for c in world.consumers] + [p.location for p in world.providers]
    return {
        "rng_state": world.rng.state,
        "threshold": cap.threshold, "alpha": cap.alpha, "beta": cap.beta,
        "history_size": fp.history_size, "branching_factor": fp.branching_factor,
        "referral_length": fp.referral_length, "recency_scale": fp.recency_scale,
        "gamma_i": fp.gamma_i, "gamma_w": fp.gamma_w, "gamma_c": fp.gamma_c,
        "w_i": fp.w_i, "w_w": fp.w_w, "w_c": fp.w_c, "exploration": fp.exploration,
        "world_radius": cfg.world_radius, "operational_radius": cfg.operational_radius,
        "activity_min": cfg.activity_min, "activity_max": cfg.activity_max,
        "p_cpc": dyn.p_cpc, "p_ppc": dyn.p_ppc, "p_clc": dyn.p_clc, "p_plc": dyn.p_plc,
        "delta_phi_max": dyn.delta_phi_max, "p_mu_c": dyn.p_mu_c,
        "drift_magnitude": dyn.drift_magnitude, "p_profile_switch": dyn.p_profile_switch,
        "provider_id": [p.id for p in world.providers],
        "kind": [int(p.profile.kind) for p in world.providers],
        "mu": [0.0 if p.profile.kind is ProviderKind.INTERMITTENT else p.profile.mu_p
               for p in world.providers],
        "consumer_id": [c.id for c in world.consumers],
        "group": [int(c.group) for c in world.consumers],
        "activity": [c.activity for c in world.consumers],
        "r": [loc.r for loc in locs],
        "phi": [loc.phi for loc in locs],
        "theta": [loc.theta for loc in locs],
        "next_provider_id": world.next_provider_id,
        "next_consumer_id": world.next_consumer_id,
    }


def run_simulation(world_config: WorldConfig, dynamics: DynamicsConfig, seed: int,
                   ca_params: CaParams | None = None, fire_params: FireParams | None = None,
                   run_id: int = 0, backend: str | None = None) -> LogTable:
    """Initialize a world from ``seed`` and play ``world_config.rounds`` rounds."""
    backend = backend or DEFAULT
    if backend not in AVAILABLE:
        raise ValueError(f"backend {backend!r} unavailable; have {AVAILABLE}")
    world = init_world(world_config, dynamics, seed, ca_params, fire_params)
    if backend == "python":
        return run_world(world, world_config.rounds, run_id)
    cols = _core.simulate(snapshot(world), world_config.rounds, run_id)
    return LogTable(**cols)
