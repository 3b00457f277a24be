import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tclflex.battery import (
    METHODS,
    CharacterizationResult,
    VirtualBattery,
    baseline_battery,
    battery_to_polytope,
    characterize,
    decompose,
    derive_fleet,
    device_battery,
    from_homothet,
    gamma,
    optimal_characterize,
    prototype,
    read_battery_json,
    read_homothets,
    sample_profiles,
    suboptimal_sufficient,
)
from tclflex.fleet import FleetSpec, TclParams, default_ambient, sample_fleet
from tclflex.geometry import Homothet, apply_homothet, contains, flex_polytope
from tclflex.verify import random_sandwich

FIELDS = ("d_minus", "d_plus", "e_minus", "e_plus")


def _flat(b):
    return np.concatenate([[b.a, b.delta, b.x0]] + [getattr(b, f) for f in FIELDS])


@pytest.fixture(scope="module")
def amb6():
    return default_ambient(6)


@pytest.fixture(scope="module")
def fleet6():
    return sample_fleet(FleetSpec(n=8, epsilon=0.25, seed=11))


def test_prototype_uses_mean_dissipation(fleet6, amb6):
    proto, poly = prototype(fleet6, amb6)
    assert proto.a == pytest.approx(np.mean([p.a(1.0) for p in fleet6]))
    assert poly.n_facets == 4 * 6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_homothet_parameters_match_polytope(seed):
    r = np.random.default_rng(seed)
    m = 5
    proto = VirtualBattery(r.uniform(0.5, 0.95), r.uniform(0.3, 1.5), r.uniform(-0.1, 0.1),
                           r.uniform(1, 3, m), r.uniform(1, 3, m), r.uniform(0.5, 1, m), r.uniform(0.5, 1, m))
    hm = Homothet(r.uniform(0.5, 20), r.normal(size=m))
    by_params = battery_to_polytope(from_homothet(proto, hm.beta, hm.t))
    by_facets = apply_homothet(hm, battery_to_polytope(proto))
    np.testing.assert_allclose(by_params.f, by_facets.f)
    np.testing.assert_allclose(by_params.h, by_facets.h, atol=1e-10)
    for u in r.normal(scale=3 * hm.beta, size=(50, m)) + hm.t:
        assert by_params.contains_point(u, 0.0) == by_facets.contains_point(u, 0.0)


def test_homogeneous_fleet_collapse(amb6):
    fleet = sample_fleet(FleetSpec(n=5, epsilon=0.0))
    batts = [characterize(fleet, amb6, m, k).battery for m in METHODS for k in ("sufficient", "necessary")]
    for b in batts[1:]:
        np.testing.assert_allclose(_flat(b), _flat(batts[0]), atol=1e-8)
    single = device_battery(derive_fleet(fleet, amb6)[0])
    np.testing.assert_allclose(batts[0].d_plus, 5 * single.d_plus)
    np.testing.assert_allclose(batts[0].e_plus, 5 * single.e_plus)


def test_baseline_necessary_power_is_sum_of_boxes(fleet6, amb6):
    devices = derive_fleet(fleet6, amb6)
    proto, _ = prototype(fleet6, amb6)
    b = baseline_battery(devices, proto, "necessary").battery
    np.testing.assert_allclose(b.d_minus, np.sum([d.u_minus for d in devices], axis=0))
    np.testing.assert_allclose(b.d_plus, np.sum([d.u_plus for d in devices], axis=0))


def test_baseline_inside_suboptimal_sufficient(fleet6, amb6):
    base = characterize(fleet6, amb6, "baseline", "sufficient").battery
    sub = characterize(fleet6, amb6, "suboptimal", "sufficient").battery
    assert contains(battery_to_polytope(sub), battery_to_polytope(base))


def test_sandwich_small_fleet():
    rep = random_sandwich(3, 2, seed=5)
    assert rep.passed, rep.lines()


def test_infeasible_device_is_excluded(fleet6, amb6):
    devices = derive_fleet(fleet6, amb6)
    bad = derive_fleet([TclParams(theta_0=30.0)], amb6)[0]
    assert bad.x0 == pytest.approx(-6.0)
    proto, _ = prototype(fleet6, amb6)
    res = optimal_characterize(devices + [bad], proto, "sufficient")
    assert res.excluded == [len(devices)]
    assert res.homothets[-1] is None
    u = res.t_total
    parts = decompose(u, res)
    np.testing.assert_array_equal(parts[-1], 0.0)
    np.testing.assert_allclose(parts.sum(axis=0), u, atol=1e-9)


def test_decompose_identical_devices(amb6):
    fleet = sample_fleet(FleetSpec(n=2, epsilon=0.0))
    res = characterize(fleet, amb6, "optimal", "sufficient")
    np.testing.assert_allclose(res.t_total, 0.0, atol=1e-9)
    u = sample_profiles(res.battery, 1, seed=0)[0]
    parts = decompose(u, res)
    np.testing.assert_allclose(parts, [u / 2, u / 2], atol=1e-9)


def test_decompose_at_translation(fleet6, amb6):
    res = characterize(fleet6, amb6, "optimal", "sufficient")
    parts = decompose(res.t_total, res)
    for hm, part in zip(res.homothets, parts):
        np.testing.assert_allclose(part, hm.t, atol=1e-9)


def test_decompose_rejects_outside_and_necessary(fleet6, amb6):
    res = characterize(fleet6, amb6, "optimal", "sufficient")
    with pytest.raises(ValueError, match="outside"):
        decompose(res.battery.d_plus + 1.0, res)
    nec = characterize(fleet6, amb6, "optimal", "necessary")
    with pytest.raises(ValueError):
        decompose(np.zeros(6), nec)


@pytest.mark.parametrize("method", ["optimal", "suboptimal", "baseline"])
def test_decomposed_profiles_are_admissible(fleet6, amb6, method):
    res = characterize(fleet6, amb6, method, "sufficient")
    polys = [flex_polytope(d).combined for d in derive_fleet(fleet6, amb6)]
    for u in sample_profiles(res.battery, 20, seed=1):
        parts = decompose(u, res)
        np.testing.assert_allclose(parts.sum(axis=0), u, atol=1e-9)
        assert all(p.contains_point(x, 1e-7) for p, x in zip(polys, parts))


def test_samples_inside_battery(fleet6, amb6):
    b = characterize(fleet6, amb6, "optimal", "sufficient").battery
    s = sample_profiles(b, 30, seed=4)
    assert all(b.contains(u) for u in s)
    np.testing.assert_array_equal(s, sample_profiles(b, 30, seed=4))


def test_gamma_trivial():
    m = 4
    b = VirtualBattery(0.8, 1.0, 0.0, np.ones(m), np.ones(m), np.ones(m), np.ones(m))
    doubled = VirtualBattery(0.8, 1.0, 0.0, 2 * np.ones(m), 2 * np.ones(m), 2 * np.ones(m), 2 * np.ones(m))
    assert gamma(b, b) == 0.0
    assert gamma(doubled, b) == pytest.approx(1.0)
    assert gamma(b, doubled) == pytest.approx(0.5)
    short = VirtualBattery(0.8, 1.0, 0.0, np.ones(2), np.ones(2), np.ones(2), np.ones(2))
    with pytest.raises(ValueError):
        gamma(b, short)


def test_battery_validation():
    with pytest.raises(ValueError):
        VirtualBattery(1.2, 1.0, 0.0, [1], [1], [1], [1])
    with pytest.raises(ValueError):
        VirtualBattery(0.5, 1.0, 0.0, [1, 2], [1], [1], [1])


def test_json_and_homothet_files(tmp_path, fleet6, amb6):
    res = characterize(fleet6, amb6, "optimal", "sufficient")
    res.write_json(tmp_path / "b.json")
    res.write_homothets(tmp_path / "h.csv")
    b, doc = read_battery_json(tmp_path / "b.json")
    np.testing.assert_array_equal(_flat(b), _flat(res.battery))
    for key in ("a", "delta_hours", "x0_kwh", "d_minus_kw", "d_plus_kw", "e_minus_kwh", "e_plus_kwh",
                "kind", "method", "beta_total", "t_total"):
        assert key in doc
    assert doc["kind"] == "sufficient" and doc["method"] == "optimal"
    hms = read_homothets(tmp_path / "h.csv")
    assert sorted(hms) == list(range(len(fleet6)))
    for i, hm in hms.items():
        assert hm.beta == res.homothets[i].beta
        np.testing.assert_array_equal(hm.t, res.homothets[i].t)
    header = (tmp_path / "h.csv").read_text().splitlines()[0]
    assert header == "device_index,beta," + ",".join(f"t_{k}" for k in range(1, 7))


def test_parallel_fan_out_matches_serial(fleet6, amb6):
    serial = characterize(fleet6, amb6, "optimal", "sufficient", jobs=1)
    parallel = characterize(fleet6, amb6, "optimal", "sufficient", jobs=2)
    np.testing.assert_array_equal(_flat(serial.battery), _flat(parallel.battery))


def test_suboptimal_records_prototype(fleet6, amb6):
    devices = derive_fleet(fleet6, amb6)
    proto, _ = prototype(fleet6, amb6)
    res = suboptimal_sufficient(devices, proto)
    assert isinstance(res, CharacterizationResult)
    assert res.prototype is not proto
    np.testing.assert_array_equal(res.prototype.e_plus, proto.e_plus)


def test_unknown_method_and_kind(fleet6, amb6):
    with pytest.raises(ValueError):
        characterize(fleet6, amb6, "magic", "sufficient")
    with pytest.raises(ValueError):
        characterize(fleet6, amb6, "optimal", "both")
