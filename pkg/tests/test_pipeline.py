import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlospos.detector import DetectorConfig, detect, threshold_for_alpha
from nlospos.errors import InsufficientPathsError
from nlospos.geometry import AnglePair, NoiseModel, PathObservation, apply_noise
from nlospos.harness import calibrate_detector, derive_seed
from nlospos.pipeline import OrderingMode, grow_estimates, order_paths, run
from nlospos.scenarios import street_scene
from nlospos.scene import enumerate_paths
from nlospos.wls import estimate_position

from conftest import box_scene, random_single_bounce_paths

STREET = street_scene()
STREET_TRUTH = enumerate_paths(STREET)
STREET_OBS = [p.observation for p in STREET_TRUTH]


def _obs(gain, toa):
    return PathObservation(gain, AnglePair(0.1, 0.0), AnglePair(1.0, 0.1), toa)


def test_order_by_delay():
    paths = [_obs(1, 3e-9), _obs(1, 1e-9), _obs(1, 2e-9)]
    assert [p.toa for p in order_paths(paths, "delay")] == [1e-9, 2e-9, 3e-9]


def test_order_by_amplitude():
    paths = [_obs(0.1, 1e-9), _obs(0.5, 1e-9), _obs(0.2, 1e-9)]
    assert [p.gain for p in order_paths(paths, OrderingMode.AMPLITUDE)] == [0.5, 0.2, 0.1]


def test_ordering_is_stable():
    paths = [_obs(0.3, 2e-9), _obs(0.3, 1e-9), _obs(0.3, 2e-9)]
    assert order_paths(paths, "amplitude") == paths
    by_delay = order_paths(paths, "delay")
    assert by_delay[1] is paths[0] and by_delay[2] is paths[2]


def test_two_paths(rng):
    paths, tx, rx, _ = random_single_bounce_paths(rng, 2)
    obs = [p.observation for p in paths]
    result = run(obs, tx=tx)
    assert result.paths_used == 2
    assert result.detection is None
    assert not result.fallback_all_paths
    assert result.residual_series == (0.0,)
    np.testing.assert_array_equal(result.position, estimate_position(order_paths(obs), tx=tx).position)


def test_too_few_paths():
    with pytest.raises(InsufficientPathsError):
        run([_obs(1, 1e-9)])
    with pytest.raises(InsufficientPathsError):
        grow_estimates([])


def test_zero_noise_stops_at_first_multi_bounce():
    cfg = DetectorConfig(0.0, 1.0, threshold_for_alpha(0.05, len(STREET_OBS) - 1))
    result = run(STREET_OBS, detector=cfg, tx=STREET.tx)
    assert result.detection.detected
    assert result.detection.stop_index == 3
    assert result.detection.change_point == 2
    assert result.paths_used == 3
    assert not result.fallback_all_paths
    assert [STREET_TRUTH[i].bounce_count for i in result.used_indices] == [1, 1, 1]
    assert np.linalg.norm(result.position - STREET.rx) < 1e-6
    assert abs(result.clock_bias - STREET.clock_bias) < 1e-13
    ref = detect(list(result.residual_series), cfg)
    assert (ref.stop_index, ref.change_point) == (3, 2)


def test_residual_growth_pattern():
    residuals, steps = grow_estimates(STREET_OBS, tx=STREET.tx)
    assert residuals[0] == 0.0
    assert residuals[1] < 1e-9
    assert all(r > 1.0 for r in residuals[2:])
    assert [s.n_paths for s in steps] == list(range(2, len(STREET_OBS) + 1))


def test_online_series_is_prefix_of_full_series():
    noisy = apply_noise(STREET_OBS, NoiseModel(0.01, 0.1, 4))
    full, _ = grow_estimates(noisy, tx=STREET.tx)
    result = run(noisy, detector=DetectorConfig(0.0, 1.0, 4.0), tx=STREET.tx)
    assert list(result.residual_series) == full[: len(result.residual_series)]


def test_no_detection_uses_all_paths():
    noisy = apply_noise(STREET_OBS, NoiseModel(0.01, 0.1, 4))
    result = run(noisy, detector=DetectorConfig(0.0, 1.0, 1e12), tx=STREET.tx)
    assert not result.detection.detected
    assert result.fallback_all_paths
    assert result.paths_used == len(noisy)
    np.testing.assert_array_equal(result.position, estimate_position(noisy, tx=STREET.tx).position)
    assert result.clock_bias == estimate_position(noisy, tx=STREET.tx).clock_bias


def test_prefix_property(rng):
    """Replacing later paths leaves earlier per-step estimates untouched."""
    noisy = apply_noise(STREET_OBS, NoiseModel(0.01, 0.1, 9))
    _, steps = grow_estimates(noisy, tx=STREET.tx)
    tail = [PathObservation(p.gain, p.aod, AnglePair(p.aoa.azimuth + 0.3, p.aoa.elevation), p.toa) for p in noisy[4:]]
    _, steps2 = grow_estimates(noisy[:4] + tail, tx=STREET.tx)
    for a, b in zip(steps[:3], steps2[:3]):
        np.testing.assert_array_equal(a.as_array(), b.as_array())
    assert not np.array_equal(steps[-1].position, steps2[-1].position)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63), st.floats(1.0, 30.0))
def test_paths_used_below_n_iff_detected(seed, threshold):
    noisy = apply_noise(STREET_OBS, NoiseModel(0.02, 1.0, seed))
    result = run(noisy, detector=DetectorConfig(2.0, 3.0, threshold), tx=STREET.tx)
    assert 2 <= result.paths_used <= len(noisy)
    assert (result.paths_used < len(noisy)) == result.detection.detected
    assert result.residual_series[0] == 0.0


def test_deterministic():
    noisy = apply_noise(STREET_OBS, NoiseModel(0.01, 0.1, 17))
    a = run(noisy, detector=DetectorConfig(0, 1, 4), tx=STREET.tx)
    b = run(noisy, detector=DetectorConfig(0, 1, 4), tx=STREET.tx)
    assert a.position.tobytes() == b.position.tobytes()
    assert a.residual_series == b.residual_series


def test_amplitude_ordering_runs():
    result = run(STREET_OBS, "amplitude", "uniform", DetectorConfig(0, 1, 4), STREET.tx)
    gains = [STREET_OBS[i].gain for i in result.order]
    assert gains == sorted(gains, reverse=True)


def test_non_identifiable_final_is_flagged():
    p = STREET_OBS[0]
    result = run([p, p], tx=STREET.tx)
    assert not result.estimate.identifiable


def test_single_bounce_scene_rarely_alarms():
    """With a calibrated detector at alpha=0.01, almost every run uses all paths."""
    scene = box_scene([0, 0, 10], [20, 15, 1.5], order=1)
    clean = [p.observation for p in enumerate_paths(scene)]
    noise = NoiseModel(0.01, 0.1, 1)
    cfg = calibrate_detector(scene, noise, trials=500, alpha=0.01)
    runs = 1000
    fallback = sum(
        run(apply_noise(clean, NoiseModel(0.01, 0.1, derive_seed(99, k))), detector=cfg, tx=scene.tx).fallback_all_paths
        for k in range(runs)
    )
    assert fallback / runs >= 0.99
