import pytest

from catrust import backend
from catrust.ca import CaParams
from catrust.fire import FireParams
from catrust.world import DynamicsConfig, WorldConfig

compiled = pytest.mark.skipif("compiled" not in backend.AVAILABLE, reason="extension not built")


def test_python_always_available():
    assert "python" in backend.AVAILABLE


def test_unknown_backend():
    with pytest.raises(ValueError):
        backend.run_simulation(WorldConfig(rounds=1), DynamicsConfig(), 0, backend="fortran")


@compiled
@pytest.mark.parametrize("dyn", [
    DynamicsConfig(),
    DynamicsConfig(p_cpc=0.1, p_ppc=0.1, p_clc=0.2, p_plc=0.2, delta_phi_max=0.3,
                   p_mu_c=0.2, drift_magnitude=1.0, p_profile_switch=0.05),
    DynamicsConfig(p_ppc=0.3),
])
@pytest.mark.parametrize("seed", [0, 11])
def test_backends_bit_identical(small_world_config, dyn, seed):
    cfg = WorldConfig(rounds=40, n_good=3, n_ordinary=8, n_intermittent=2, n_bad=7, n_consumers=60)
    py = backend.run_simulation(cfg, dyn, seed, backend="python", run_id=4)
    cc = backend.run_simulation(cfg, dyn, seed, backend="compiled", run_id=4)
    assert len(py) > 0
    assert py.equals(cc)


@compiled
def test_backends_agree_with_custom_parameters():
    cfg = WorldConfig(rounds=30, n_good=2, n_ordinary=5, n_intermittent=1, n_bad=4, n_consumers=40,
                      operational_radius=0.7)
    ca_p = CaParams(threshold=0.6, alpha=0.2, beta=0.3)
    fire_p = FireParams(history_size=4, branching_factor=3, referral_length=2, exploration=0.3)
    dyn = DynamicsConfig(p_ppc=0.1, p_profile_switch=0.1)
    py = backend.run_simulation(cfg, dyn, 5, ca_p, fire_p, backend="python")
    cc = backend.run_simulation(cfg, dyn, 5, ca_p, fire_p, backend="compiled")
    assert py.equals(cc)


@compiled
def test_full_scale_rounds_agree():
    cfg = WorldConfig(rounds=8)
    dyn = DynamicsConfig(p_ppc=0.05, p_cpc=0.05, p_clc=0.1, p_plc=0.1, delta_phi_max=0.157)
    assert backend.run_simulation(cfg, dyn, 2, backend="python").equals(
        backend.run_simulation(cfg, dyn, 2, backend="compiled"))
