"""Tests for parameter sweeps and their output files."""

import json
import time
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from tests.conftest import make_config
from tripartite_optomech.config import load_config
from tripartite_optomech.exceptions import ConfigError
from tripartite_optomech.sweep import (
    GridAxis,
    SweepRecord,
    SweepSpec,
    apply_override,
    records_to_frame,
    run_sweep,
    write_records,
)

CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture
def detuning_sweep(red_config):
    return SweepSpec(variable="delta_a", start=-1.0, stop=1.0, count=5, config=red_config)


class TestApplyOverride:
    def test_detuning_clears_bare_value(self):
        """Test that setting delta_f drops a configured delta_0f."""
        config = make_config(delta_f=None, delta_0f=0.5)
        updated = apply_override(config, "delta_f", -0.8)
        assert updated.delta_f == -0.8
        assert updated.delta_0f is None

    def test_frequency_variables_scale_with_omega_m(self):
        """Test that frequency sweeps are in units of omega_m."""
        config = make_config(omega_m=2.0, kappa=0.2, gamma_a=0.2, delta_a=2.0, delta_f=2.0)
        assert apply_override(config, "delta_a", 0.5).delta_a == pytest.approx(1.0)
        assert apply_override(config, "drive", 3.0).drive.e == pytest.approx(6.0)
        assert apply_override(config, "drive", 3.0).drive.alpha is None

    def test_temperature_clears_occupation(self, red_config):
        """Test that a swept temperature replaces an explicit n_th."""
        updated = apply_override(red_config, "temperature", 0.4)
        assert updated.temperature == 0.4
        assert updated.thermal_occupation is None

    def test_eta_needs_effective_tier(self):
        """Test that eta cannot be swept in the geometric tier."""
        config = load_config(CONFIGS / "geometric_physical.cfg")
        with pytest.raises(ConfigError, match="eta"):
            apply_override(config, "eta", 0.05)

    def test_invalid_value(self, red_config):
        """Test that values rejected by validation become config errors."""
        with pytest.raises(ConfigError, match="gamma_a"):
            apply_override(red_config, "gamma_a", -1.0)

    def test_unknown_variable(self, red_config):
        """Test that unknown variables are rejected."""
        with pytest.raises(ConfigError, match="Unknown sweep variable"):
            apply_override(red_config, "mass", 1.0)


class TestSweepSpec:
    def test_reversed_range(self, red_config):
        """Test that start must be below stop."""
        with pytest.raises(ValidationError, match="must be below"):
            SweepSpec(variable="eta", start=0.1, stop=0.0, count=3, config=red_config)

    def test_too_few_points(self, red_config):
        """Test that a sweep needs at least two points."""
        with pytest.raises(ValidationError):
            SweepSpec(variable="eta", start=0.0, stop=0.1, count=1, config=red_config)

    def test_same_axis_twice(self, red_config):
        """Test that both map axes must differ."""
        with pytest.raises(ValidationError, match="Both map axes"):
            SweepSpec(
                variable="eta",
                start=0.0,
                stop=0.1,
                count=3,
                config=red_config,
                second=GridAxis(variable="eta", start=0.0, stop=0.1, count=2),
            )

    def test_map_grid_is_row_major(self, red_config):
        """Test the outer-then-inner ordering of a two-dimensional map."""
        spec = SweepSpec(
            variable="delta_a",
            start=0.0,
            stop=1.0,
            count=2,
            config=red_config,
            second=GridAxis(variable="eta", start=0.0, stop=0.1, count=3),
        )
        assert spec.grid() == [
            (0.0, 0.0),
            (0.0, 0.05),
            (0.0, 0.1),
            (1.0, 0.0),
            (1.0, 0.05),
            (1.0, 0.1),
        ]


class TestSweepRecord:
    def test_negativities_need_stability(self):
        """Test that unstable records cannot carry E_N."""
        with pytest.raises(ValidationError, match="stable points"):
            SweepRecord(value=0.0, en_mf=0.1, stable=False)

    def test_negative_negativity_rejected(self):
        """Test E_N >= 0."""
        with pytest.raises(ValidationError):
            SweepRecord(value=0.0, en_mf=-0.1, stable=True)


class TestRunSweep:
    def test_one_record_per_point(self, detuning_sweep):
        """Test record count, order and stable negativities."""
        records = run_sweep(detuning_sweep)
        assert [r.value for r in records] == list(np.linspace(-1.0, 1.0, 5))
        for r in records:
            assert r.error is None
            assert r.residual_norm is not None
            if r.stable:
                assert None not in (r.en_am, r.en_fa, r.en_mf)
                assert r.max_real_eigenvalue < 0

    def test_unstable_points_have_no_negativities(self):
        """Test that points beyond the parametric threshold only report stability."""
        config = make_config(effective={"eta": 0.0, "xi_0": 1e-3, "G": 0.0})
        spec = SweepSpec(variable="delta_f", start=-1.0, stop=1.0, count=3, config=config)
        blue, _, red = run_sweep(spec)
        assert not blue.stable
        assert blue.error is None
        assert blue.en_mf is None
        assert blue.max_real_eigenvalue > 0
        assert red.stable
        assert red.en_mf is not None

    def test_failures_are_recorded(self):
        """Test that a diverging point is captured without aborting the sweep."""
        config = make_config(effective={"eta": 0.0, "xi_0": 1e-3, "G": 0.0})
        spec = SweepSpec(variable="drive", start=1.0, stop=1e14, count=2, config=config)
        ok, diverged = run_sweep(spec)
        assert ok.error is None
        assert diverged.error.startswith("DivergedAmplitudeError")
        assert not diverged.stable
        assert diverged.en_mf is None

    def test_geometric_eta_rejected_up_front(self):
        """Test that run_sweep refuses sweeps the config cannot express."""
        config = load_config(CONFIGS / "geometric_physical.cfg")
        spec = SweepSpec(variable="eta", start=0.01, stop=0.1, count=3, config=config)
        with pytest.raises(ConfigError):
            run_sweep(spec)

    def test_spectrum_output(self, red_config):
        """Test that mode counts are reported when requested."""
        spec = SweepSpec(
            variable="eta",
            start=0.02,
            stop=0.04,
            count=2,
            config=red_config,
            outputs=("stability", "spectrum"),
        )
        for r in run_sweep(spec):
            assert r.stable
            assert r.mode_count is not None and r.mode_count >= 1
            assert r.en_mf is None

    def test_steady_state_output(self, red_config):
        """Test that requested steady-state fields match the drive.alpha configuration."""
        spec = SweepSpec(
            variable="delta_a",
            start=0.5,
            stop=1.5,
            count=3,
            config=red_config,
            outputs=("steady_state",),
        )
        for r in run_sweep(spec):
            assert r.alpha_re == pytest.approx(10.0, rel=1e-8)
            assert r.alpha_im == pytest.approx(0.0, abs=1e-8)
            assert r.delta_f_eff == pytest.approx(1.0)
            assert r.b_re is not None and r.c_im is not None
            assert r.en_mf is None
            assert r.max_real_eigenvalue is None

    def test_steady_state_fields_omitted_by_default(self, detuning_sweep):
        """Test that amplitudes are only filled on request."""
        assert all(r.alpha_re is None and r.delta_f_eff is None for r in run_sweep(detuning_sweep))

    def test_warm_start_matches_cold(self, detuning_sweep):
        """Test that continuing from the previous point gives the same physics as ramping."""
        warm = run_sweep(detuning_sweep)
        cold = run_sweep(detuning_sweep.model_copy(update={"warm_start": False}))
        for w, c in zip(warm, cold):
            assert w.stable == c.stable
            for key in ("en_am", "en_fa", "en_mf", "max_real_eigenvalue"):
                if getattr(c, key) is None:
                    assert getattr(w, key) is None
                else:
                    assert getattr(w, key) == pytest.approx(getattr(c, key), rel=1e-6, abs=1e-12)

    @pytest.mark.slow
    def test_parallel_matches_serial(self, detuning_sweep):
        """Test that a process pool returns the same records as a serial sweep without seeding."""
        cold = detuning_sweep.model_copy(update={"warm_start": False})
        assert run_sweep(detuning_sweep, jobs=2) == run_sweep(cold)

    @pytest.mark.slow
    def test_two_hundred_points_under_a_second(self):
        """Test the single-worker time budget of an entanglement sweep."""
        config = load_config(CONFIGS / "entanglement_sweep.cfg")
        spec = SweepSpec(variable="delta_a", start=-1.5, stop=-0.5, count=200, config=config)
        run_sweep(spec.model_copy(update={"count": 2}))
        started = time.perf_counter()
        records = run_sweep(spec)
        elapsed = time.perf_counter() - started
        assert len(records) == 200
        assert all(r.error is None for r in records)
        assert elapsed < 1.0


@pytest.fixture
def atom_sideband_sweep():
    config = load_config(CONFIGS / "entanglement_sweep.cfg")
    return SweepSpec(variable="delta_a", start=-2.0, stop=0.0, count=21, config=config)


def _sweep_with(spec, variable, value):
    return run_sweep(spec.model_copy(update={"config": apply_override(spec.config, variable, value)}))


def _largest(records, key):
    return max(getattr(r, key) for r in records if r.stable)


class TestEntanglementTrends:
    def test_all_pairs_entangled_together(self, atom_sideband_sweep):
        """Test that every bipartition is entangled at once somewhere on the atomic detuning axis."""
        records = run_sweep(atom_sideband_sweep)
        assert all(r.stable for r in records)
        assert any(min(r.en_am, r.en_fa, r.en_mf) > 1e-3 for r in records)

    def test_mirror_atom_peak_near_squeezing_resonance(self, atom_sideband_sweep):
        """Test that the atom-mirror maximum sits at delta_a = -omega_m."""
        records = run_sweep(atom_sideband_sweep)
        best = max(records, key=lambda r: r.en_am)
        assert best.value == pytest.approx(-1.0)
        assert best.en_am > 0.3
        assert best.en_mf == 0.0

    def test_larger_eta_moves_entanglement_to_the_atom(self, atom_sideband_sweep):
        """Test that doubling eta raises peak atom-mirror and lowers peak mirror-field entanglement."""
        weak = _sweep_with(atom_sideband_sweep, "eta", 0.04)
        strong = _sweep_with(atom_sideband_sweep, "eta", 0.08)
        assert sum(r.stable for r in strong) >= 18
        assert _largest(strong, "en_am") > 1.3 * _largest(weak, "en_am")
        assert _largest(strong, "en_mf") < 0.9 * _largest(weak, "en_mf")

    def test_mirror_field_is_first_to_die_with_temperature(self, atom_sideband_sweep):
        """Test that at 3 K only the mirror-field pair has lost its entanglement."""
        cold = _sweep_with(atom_sideband_sweep, "temperature", 0.4)
        hot = _sweep_with(atom_sideband_sweep, "temperature", 3.0)
        assert _largest(cold, "en_mf") > 0.03
        assert all(r.stable for r in hot)
        assert _largest(hot, "en_mf") == 0.0
        assert all(r.en_am > 0.0 for r in hot)
        assert _largest(hot, "en_fa") > 0.05

    def test_heating_never_adds_entanglement(self, atom_sideband_sweep):
        """Test that each pair's E_N at 1.2 K is at most its 0.4 K value."""
        cold = _sweep_with(atom_sideband_sweep, "temperature", 0.4)
        warm = _sweep_with(atom_sideband_sweep, "temperature", 1.2)
        for c, w in zip(cold, warm):
            for key in ("en_am", "en_fa", "en_mf"):
                assert getattr(w, key) <= getattr(c, key) + 1e-12


class TestOutput:
    def test_csv_is_deterministic(self, detuning_sweep, tmp_path):
        """Test that the same sweep writes byte-identical CSV."""
        first = write_records(run_sweep(detuning_sweep), detuning_sweep, tmp_path / "a.csv")
        second = write_records(run_sweep(detuning_sweep), detuning_sweep, tmp_path / "b.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_csv_layout(self, detuning_sweep, tmp_path):
        """Test the header and full-precision floats."""
        records = run_sweep(detuning_sweep)
        path = write_records(records, detuning_sweep, tmp_path / "sweep.csv")
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == "delta_a,en_am,en_fa,en_mf,stable,max_real_eigenvalue,residual_norm,mode_count,error"
        df = pd.read_csv(path)
        assert len(df) == 5
        assert df.en_mf.iloc[-1] == records[-1].en_mf
        assert df.mode_count.isna().all()

    def test_map_frame_columns(self, red_config):
        """Test that both map variables name their columns."""
        spec = SweepSpec(
            variable="delta_a",
            start=0.5,
            stop=1.0,
            count=2,
            config=red_config,
            second=GridAxis(variable="temperature", start=0.0, stop=1e-3, count=2),
        )
        df = records_to_frame(run_sweep(spec), spec)
        assert list(df.columns[:2]) == ["delta_a", "temperature"]
        assert len(df) == 4

    def test_json_document(self, detuning_sweep, tmp_path):
        """Test the JSON layout of a one-dimensional sweep."""
        path = write_records(run_sweep(detuning_sweep), detuning_sweep, tmp_path / "sweep.json", fmt="json")
        document = json.loads(path.read_text(encoding="utf-8"))
        assert document["variable"] == "delta_a"
        assert document["variable2"] is None
        assert len(document["records"]) == 5
        assert "value2" not in document["records"][0]

    def test_unknown_format(self, detuning_sweep, tmp_path):
        """Test that only csv and json are written."""
        with pytest.raises(ValueError, match="Unsupported output format"):
            write_records([], detuning_sweep, tmp_path / "sweep.xlsx", fmt="xlsx")
