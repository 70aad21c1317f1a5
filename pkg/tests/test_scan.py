import numpy as np
import pytest
from scipy.special import jn_zeros

from pipeflow.errors import ValidationError
from pipeflow.estimates import mode_norm_report
from pipeflow.grid import Parity, interpolant_norm_sq
from pipeflow.modes import BoundaryKind, FlowParams, ForcingMode, grid_of_size, solve_mode
from pipeflow.response import MeridionalResponse, SwirlResponse, largest_singular_value
from pipeflow.scan import (CSV_HEADER, GAIN_KEYS, ScanRecord, cache_key, fit_exponent,
                           frequency_grid, mode_gain, records_to_csv, resolution_for,
                           resolvent_norm_at_zero, summarize, sup_gain, sweep)


def poly_forcing(grid, rng, with_swirl=True):
    a, b, c = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    return ForcingMode.from_components(
        grid, lambda r: r * np.polyval(a, r * r), lambda r: np.polyval(b, r * r),
        (lambda r: r * np.polyval(c, r * r)) if with_swirl else None)


# ---------------------------------------------------------------------------
# response maps

def test_dense_and_power_gain_agree():
    g, fine = grid_of_size(24), grid_of_size(48)
    P = FlowParams(300, 1.5)
    for resp in (MeridionalResponse(fine, P, forcing_grid=g), SwirlResponse(fine, P, forcing_grid=g)):
        G = resp.velocity_operator("H1")
        a = resp.gain(G, method="dense")
        b = resp.gain(G, method="power", rtol=1e-9)
        assert abs(a - b) <= 1e-7 * a


def test_power_iteration_on_diagonal_map():
    s = np.array([3.0, 2.999, 1.0, 0.5, 0.1])
    est = largest_singular_value(lambda z: s * z, lambda y: s * y, 5, block=2, rtol=1e-10)
    assert abs(est - 3.0) <= 1e-9


def test_representer_attains_norm():
    g = grid_of_size(32)
    resp = MeridionalResponse(g, FlowParams(1e3, 2.0), BoundaryKind.SLIP)
    row = resp.wall_slope_functional()
    fr, fz, value = resp.representer(row)
    assert abs(interpolant_norm_sq(g, g.field(fr)) + interpolant_norm_sq(g, g.field(fz, Parity.EVEN)) - 1) < 1e-10
    attained = abs(row @ resp.solve(np.concatenate([fr, fz])))
    assert abs(attained - value) <= 1e-10 * value
    # no other unit forcing does better
    rng = np.random.default_rng(0)
    for _ in range(5):
        F = poly_forcing(g, rng, with_swirl=False)
        nrm = np.sqrt(F.meridional_norm_sq())
        y = resp.solve(np.concatenate([F.fr_hat.values, F.fz_hat.values]) / nrm)
        assert abs(row @ y) <= value * (1 + 1e-10)


# ---------------------------------------------------------------------------
# gains

def test_swirl_gain_static_bessel_oracle():
    """At Phi = 0 the swirl L2 gain is 1 / (j_{1,1}^2 + xi^2)."""
    j11 = jn_zeros(1, 1)[0]
    for xi in (0.0, 0.5, 3.0):
        rec = mode_gain(grid_of_size(32), FlowParams(0, xi))
        assert abs(rec.block_gains["swirl"]["L2"] - 1 / (j11 ** 2 + xi ** 2)) <= 1e-12


def test_gain_dominates_rayleigh_quotients():
    g = grid_of_size(24)
    rng = np.random.default_rng(1)
    for P in (FlowParams(10, 0.7), FlowParams(1e3, -2.0), FlowParams(0, 0.0)):
        rec = mode_gain(g, P, refine=False)
        for _ in range(3):
            F = poly_forcing(g, rng)
            rep = mode_norm_report(solve_mode(g, P, F))
            fn = np.sqrt(F.norm_sq())
            for key, src in (("L2", "H0"), ("H1", "H1"), ("H2", "H2")):
                assert rep[src] / fn <= rec.gains[key] * (1 + 1e-8)


def test_gain_symmetric_in_xi():
    g = grid_of_size(24)
    a = mode_gain(g, FlowParams(500, 1.3)).gains
    b = mode_gain(g, FlowParams(500, -1.3)).gains
    for k in GAIN_KEYS:
        assert abs(a[k] - b[k]) <= 1e-9 * a[k]


def test_gain_converges_under_doubling():
    P = FlowParams(1e3, 1.0)
    a = mode_gain(grid_of_size(32), P, refine=False).gains
    b = mode_gain(grid_of_size(64), P, refine=False).gains
    for k in GAIN_KEYS:
        assert abs(a[k] - b[k]) <= 0.01 * b[k]


def test_h53_is_interpolation_of_gains():
    rec = mode_gain(grid_of_size(16), FlowParams(50, 2.0))
    assert rec.gains["H53"] == rec.gains["H1"] ** (1 / 3) * rec.gains["H2"] ** (2 / 3)
    assert rec.gains["L2"] <= rec.gains["H1"] <= rec.gains["H2"]


def test_resolution_rule():
    g = grid_of_size(16)
    assert resolution_for(g, FlowParams(1, 1)) == 16
    assert resolution_for(g, FlowParams(1e4, 100)) == 64
    n = resolution_for(g, FlowParams(1e4, 10))
    assert 16 <= n <= 64


def test_record_rejects_negative_gain():
    with pytest.raises(ValidationError):
        ScanRecord(1.0, 1.0, mode_gain(grid_of_size(16), FlowParams(1, 1)).regime,
                   {"L2": -1.0}, 1.0, 16)


def test_record_round_trip():
    rec = mode_gain(grid_of_size(16), FlowParams(20, 0.3))
    assert ScanRecord.from_dict(rec.to_dict()) == rec


# ---------------------------------------------------------------------------
# sweeps

def test_frequency_grid():
    xs = frequency_grid(1e-3, 1e2, 61)
    assert xs.size == 122 and np.all(np.diff(xs) > 0)
    assert np.allclose(xs[61:], -xs[:61][::-1])
    assert frequency_grid(1.0, 1.0, 1, both_signs=False).tolist() == [1.0]
    with pytest.raises(ValidationError):
        frequency_grid(0.0, 1.0)
    with pytest.raises(ValidationError):
        frequency_grid(2.0, 1.0)


def test_sweep_cache_and_csv(tmp_path):
    g = grid_of_size(16)
    phis, xis = [1.0, 10.0, 100.0], frequency_grid(0.1, 10, 5, both_signs=False)
    recs = sweep(g, phis, xis, cache_dir=tmp_path)
    assert len(recs) == 15 and all(r.ok for r in recs)
    assert [(r.phi, r.xi) for r in recs] == sorted((p, x) for p in phis for x in xis)
    assert len(list(tmp_path.glob("*.bin"))) == 15
    assert (tmp_path / cache_key(16, 1.0, xis[0])).with_suffix(".bin").exists()
    csv1 = records_to_csv(recs)
    again = sweep(g, phis, xis, cache_dir=tmp_path)
    assert records_to_csv(again) == csv1
    assert csv1.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(csv1.splitlines()) == 16


def test_sweep_env_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("PIPEFLOW_CACHE_DIR", str(tmp_path / "env"))
    sweep(grid_of_size(16), [1.0], [0.5])
    assert len(list((tmp_path / "env").glob("*.bin"))) == 1


def test_sweep_parallel_matches_serial():
    g = grid_of_size(16)
    a = sweep(g, [1.0, 10.0], [0.2, 2.0])
    b = sweep(g, [1.0, 10.0], [0.2, 2.0], workers=2)
    assert records_to_csv(a) == records_to_csv(b)


def test_sweep_empty_and_invalid():
    assert sweep(grid_of_size(16), [1.0], []) == []
    with pytest.raises(ValidationError):
        sweep(grid_of_size(16), [], [1.0])
    with pytest.raises(ValidationError):
        sweep(grid_of_size(16), [-1.0], [1.0])


def test_cache_key_distinguishes_inputs():
    keys = {cache_key(16, 1.0, 1.0), cache_key(32, 1.0, 1.0), cache_key(16, 2.0, 1.0),
            cache_key(16, 1.0, -1.0), cache_key(16, 1.0, 1.0, BoundaryKind.SLIP)}
    assert len(keys) == 5


def test_sup_gain_and_summary():
    recs = sweep(grid_of_size(16), [1.0, 10.0, 100.0], [0.1, 1.0, 10.0])
    sup = sup_gain(recs, "H2")
    assert list(sup) == [1.0, 10.0, 100.0]
    for p, v in sup.items():
        assert v == max(r.gains["H2"] for r in recs if r.phi == p)
    s = summarize(recs)
    assert s["cells"] == 9 and s["failed"] == [] and s["h53_ratio"] >= 1
    assert "H2_vs_phi" in s["fits"]


def test_fit_exponent_examples():
    rows = [{"x": x, "y": 3.0 * x ** 2} for x in (1.0, 10.0, 100.0)]
    fit = fit_exponent(rows, "x", "y")
    assert abs(fit.slope - 2) < 1e-12 and abs(fit.intercept - np.log(3)) < 1e-12
    assert abs(fit.r_squared - 1) < 1e-12 and fit.count == 3
    flat = fit_exponent([{"x": x, "y": 5.0} for x in (1.0, 2.0, 4.0)], "x", "y")
    assert abs(flat.slope) < 1e-12


def test_fit_exponent_errors():
    with pytest.raises(ValidationError):
        fit_exponent([{"x": 1.0, "y": 1.0}, {"x": 2.0, "y": 2.0}], "x", "y")
    with pytest.raises(ValidationError):
        fit_exponent([{"x": x, "y": y} for x, y in ((1, 1), (2, 0), (3, 3))], "x", "y")
    with pytest.raises(ValidationError):
        fit_exponent([{"x": x, "y": y} for x, y in ((1, 1), (2, np.nan), (3, 3))], "x", "y")


def test_resolvent_norm_monotone_and_dominant():
    g = grid_of_size(16)
    xis = [0.1, 1.0, 10.0]
    vals = [resolvent_norm_at_zero(g, re, xis) for re in (10.0, 100.0, 1000.0)]
    assert np.all(np.diff(vals) > 0)
    single = 100.0 * mode_gain(g, FlowParams(np.pi * 50.0, 1.0)).gains["L2"]
    assert vals[1] >= single
    with pytest.raises(ValidationError):
        resolvent_norm_at_zero(g, 0.0, xis)
