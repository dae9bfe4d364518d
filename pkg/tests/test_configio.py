"""Config parsing and trajectory CSV round-trips."""
import numpy as np
import pytest

import sitctl as s
from sitctl.configio import (
    ConfigError,
    params_from_mapping,
    parse_config_text,
    read_trajectory_csv,
    write_trajectory_csv,
)

GOOD_CONFIG = """\
# nominal study parameters
[params]
beta_E = 10
gamma_s = 1
nu_E = 0.005
nu = 0.49
delta_E = 0.03
delta_M = 0.1
delta_F = 0.04
delta_s = 0.12
k = 212370

[controller]
F_hat_ratio = 1.35
eta = 0.1
rho = 0.5
variant = plus

[sim]
model = reduced
t_end = 100
dt = 0.01
"""


class TestConfigParsing:
    def test_good_config(self):
        sections = parse_config_text(GOOD_CONFIG)
        p = params_from_mapping(sections["params"])
        assert p == s.NOMINAL_PARAMS
        assert sections["controller"]["variant"] == "plus"
        assert float(sections["sim"]["t_end"]) == 100.0

    def test_unknown_key_names_nearest_match(self):
        bad = GOOD_CONFIG.replace("beta_E = 10", "betaE = 10")
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad)
        msg = str(err.value)
        assert "betaE" in msg and "beta_E" in msg and ":3:" in msg

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config_text("[plant]\nbeta_E = 10\n")

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="outside"):
            parse_config_text("beta_E = 10\n")

    def test_missing_equals_carries_line_number(self):
        with pytest.raises(ConfigError, match=":2:"):
            parse_config_text("[params]\nbeta_E 10\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("[params]\nbeta_E = 10\nbeta_E = 11\n")

    def test_missing_params_reported(self):
        with pytest.raises(ConfigError, match="missing"):
            params_from_mapping({"beta_E": "10"})

    def test_non_numeric_value(self):
        from sitctl.model import PARAM_KEYS
        mapping = {k: "1" for k in PARAM_KEYS}
        mapping["k"] = "many"
        with pytest.raises(ConfigError, match="not a number"):
            params_from_mapping(mapping)


class TestParamsText:
    def test_round_trip_identity(self, params):
        text = s.params_to_text(params)
        assert s.params_from_text(text) == params

    def test_round_trip_awkward_floats(self, params):
        p = params.replace(beta_E=10.000000000000002, k=212370.00000000003)
        assert s.params_from_text(s.params_to_text(p)) == p

    def test_unknown_key_suggestion(self):
        with pytest.raises(ConfigError, match="delta_s"):
            s.params_from_text("deltas = 0.12\n")


class TestTrajectoryCsv:
    def test_reduced_round_trip_lossless(self, nominal_plus_run, tmp_path):
        path = tmp_path / "run.csv"
        write_trajectory_csv(nominal_plus_run, path)
        header, rows = read_trajectory_csv(path)
        assert header == ["t", "F", "Ms", "u", "V"]
        assert len(rows) == len(nominal_plus_run.times)
        data = np.array(rows)
        assert np.array_equal(data[:, 0], nominal_plus_run.times)
        assert np.array_equal(data[:, 1], nominal_plus_run.F)
        assert np.array_equal(data[:, 2], nominal_plus_run.Ms)
        assert np.array_equal(data[:, 3], nominal_plus_run.controls)
        assert np.array_equal(data[:, 4], nominal_plus_run.lyapunov)

    def test_full_model_header(self, full_strong_run, tmp_path):
        path = tmp_path / "full.csv"
        write_trajectory_csv(full_strong_run, path)
        header, rows = read_trajectory_csv(path)
        assert header == ["t", "F", "Ms", "E", "M", "u"]
        data = np.array(rows)
        assert np.array_equal(data[:, 1], full_strong_run.F)
        assert np.array_equal(data[:, 4], full_strong_run.states[:, 1])

    def test_row_count_matches_sampling(self, params, cfg, eq, tmp_path):
        law = s.ControlLaw("plus", cfg, params)
        spec = s.SimSpec(model="reduced", law=law, initial=(eq.F_bar, 0.0), t_end=5.0, dt=0.01, record_every=100)
        traj = s.integrate(spec)
        path = tmp_path / "short.csv"
        write_trajectory_csv(traj, path)
        _, rows = read_trajectory_csv(path)
        # header excluded: initial sample + floor(500/100) recorded steps
        assert len(rows) == 1 + 5
