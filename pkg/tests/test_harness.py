"""Harness tests: config parsing, hashing, command runners, CSV artifacts.

Run-level tests execute the real commands into pytest tmp dirs and check
exit codes, provenance headers, column layouts, and determinism. The
config-hash format is checked against hand-built sha256 input.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from massart_halfspace import __version__
from massart_halfspace.cli import main as cli_main
from massart_halfspace.distributions import MarginalSampler
from massart_halfspace.errors import ConfigError
from massart_halfspace.harness import (
    COMMANDS,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_TRIAL_FAILURES,
    SCHEMA_VERSION,
    THREADS_ENV_VAR,
    config_from_mapping,
    config_hash,
    load_config,
    measure_disagreement,
    parse_config_text,
    run,
)
from massart_halfspace.verify import lemma_sigma_cap

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Small learn config used by the run() tests; mirrors the repro fixture
# (4000 capped steps on the 2D disk finish in well under a second).
LEARN_FLAT = {
    "command": "learn",
    "trials": 2,
    "base_seed": 77001,
    "marginal.kind": "uniform_disk_2d",
    "marginal.dim": 2,
    "noise.kind": "constant",
    "noise.eta_bound": 0.3,
    "learn.model": "massart",
    "learn.mode": "practical",
    "learn.eps": 0.1,
    "learn.steps": 4000,
    "learn.step_size": 0.02,
    "learn.sigma": 0.25,
    "learn.selection": 4000,
    "learn.record_every": 400,
    "eval.samples": 2000,
}

VERIFY_FLAT = {
    "command": "verify",
    "base_seed": 412,
    "marginal.kind": "uniform_disk_2d",
    "marginal.dim": 2,
    "noise.kind": "constant",
    "noise.eta_bound": 0.3,
    "verify.surrogate": "sigmoid",
    "verify.sigma": "cap",
    "verify.angles": "1.5707963267948966",
    "verify.strategies": "constant",
    "verify.mc_samples": 262144,
    "verify.confidence_sigmas": 3,
}


def _flat(base: dict, out: Path, **overrides) -> dict:
    merged = dict(base)
    merged.update(overrides)
    merged["out"] = str(out)
    return merged


def _read_artifact(path: Path):
    """Split a result CSV into (provenance lines, header row, data rows)."""
    lines = path.read_text().splitlines()
    meta = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


# --------------------------------------------------------------------------
# parse_config_text


class TestParseConfigText:
    def test_line_syntax_parses_scalars(self):
        text = """
        # leading comment and blank lines are skipped

        command = learn
        trials = 10
        base_seed = -3
        learn.eps = 0.05
        gradcheck.step = 1e-6
        plots = true
        noise.kind = constant
        verify.sigma = cap
        """
        flat = parse_config_text(text)
        assert flat == {
            "command": "learn",
            "trials": 10,
            "base_seed": -3,
            "learn.eps": 0.05,
            "gradcheck.step": 1e-6,
            "plots": True,
            "noise.kind": "constant",
            "verify.sigma": "cap",
        }
        assert isinstance(flat["trials"], int)
        assert isinstance(flat["learn.eps"], float)
        assert flat["plots"] is True

    def test_false_keyword_and_plain_strings(self):
        flat = parse_config_text("plots = false\nmarginal.kind = uniform_disk_2d\n")
        assert flat["plots"] is False
        assert flat["marginal.kind"] == "uniform_disk_2d"

    def test_value_keeps_later_equals_signs(self):
        # Only the first '=' splits; the rest belongs to the value.
        flat = parse_config_text("out = runs/a=b\n")
        assert flat["out"] == "runs/a=b"

    def test_missing_equals_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("a = 1\nnot a pair\n")

    def test_empty_key_rejected(self):
        with pytest.raises(ConfigError, match="empty key"):
            parse_config_text("= 3\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("a = 1\na = 2\n")

    def test_json_object_flattens_to_dotted_keys(self):
        text = json.dumps(
            {
                "command": "learn",
                "marginal": {"kind": "standard_gaussian", "dim": 5},
                "learn": {"eps": 0.1},
            }
        )
        flat = parse_config_text(text)
        assert flat == {
            "command": "learn",
            "marginal.kind": "standard_gaussian",
            "marginal.dim": 5,
            "learn.eps": 0.1,
        }

    def test_json_list_becomes_comma_string(self):
        flat = parse_config_text('{"verify": {"angles": [0.1, 0.25]}}')
        assert flat == {"verify.angles": "0.1,0.25"}

    def test_invalid_json_rejected(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            parse_config_text('{"command": ')

    def test_fixture_twins_parse_identically(self):
        line_flat = parse_config_text((FIXTURES / "learn_massart_gaussian.cfg").read_text())
        json_flat = parse_config_text((FIXTURES / "learn_massart_gaussian.json").read_text())
        assert line_flat == json_flat

    def test_empty_text_gives_empty_mapping(self):
        assert parse_config_text("") == {}
        assert parse_config_text("# only a comment\n") == {}


# --------------------------------------------------------------------------
# config_hash


class TestConfigHash:
    def test_matches_hand_built_sha256(self):
        # Canonical form: sorted key=value lines joined by newlines, with
        # out/threads dropped; first 16 hex digits of the sha256.
        flat = {"command": "bench", "base_seed": 3, "out": "x", "threads": 9}
        expected = hashlib.sha256(b"base_seed=3\ncommand=bench").hexdigest()[:16]
        assert config_hash(flat) == expected
        assert config_hash(flat) == "732ce7438611abdd"

    def test_out_and_threads_are_neutral(self):
        base = {"command": "verify", "base_seed": 1}
        moved = {"command": "verify", "base_seed": 1, "out": "elsewhere", "threads": 7}
        assert config_hash(base) == config_hash(moved)

    def test_every_other_key_is_significant(self):
        base = dict(LEARN_FLAT)
        reference = config_hash(base)
        for key in base:
            mutated = dict(base)
            mutated[key] = "999" if isinstance(base[key], str) else base[key] + 1
            assert config_hash(mutated) != reference, key

    def test_key_order_is_irrelevant(self):
        a = {"b": 2, "a": 1}
        b = {"a": 1, "b": 2}
        assert config_hash(a) == config_hash(b)

    def test_fixture_twins_share_a_hash(self):
        line_cfg = load_config(FIXTURES / "learn_massart_gaussian.cfg")
        json_cfg = load_config(FIXTURES / "learn_massart_gaussian.json")
        assert line_cfg.hash == json_cfg.hash


# --------------------------------------------------------------------------
# config_from_mapping


class TestConfigFromMapping:
    def test_defaults(self):
        cfg = config_from_mapping({"command": "bench"})
        assert cfg.command == "bench"
        assert cfg.trials == 1
        assert cfg.base_seed == 0
        assert cfg.threads == 1
        assert cfg.plots is False
        assert cfg.out_dir == "runs"
        assert cfg.marginal_kind == "standard_gaussian"
        assert cfg.dim == 10
        assert cfg.profile_name == "gaussian_analytic"
        assert cfg.noise.kind == "none"
        assert cfg.model == "massart"
        assert cfg.mode == "practical"
        assert cfg.eps == 0.1
        assert cfg.delta == 0.1
        assert cfg.budget is None
        assert cfg.record_every == 0
        assert cfg.steps_override is None
        assert cfg.eval_samples == 100_000
        assert cfg.min_pass == 1
        assert cfg.verify_surrogate == "sigmoid"
        assert cfg.verify_sigma == "cap"
        assert cfg.verify_angles == (0.7853981633974483,)
        assert cfg.verify_strategies == ("none",)
        assert cfg.verify_mc_samples == 1 << 15
        assert cfg.verify_confidence == 3.0
        assert cfg.gradcheck_cases == 200
        assert cfg.gradcheck_step == 1e-6
        assert cfg.gradcheck_tol == 1e-5
        assert cfg.bench_samples == 200_000

    def test_unknown_field_rejected_by_name(self):
        with pytest.raises(ConfigError, match="learn.epsx"):
            config_from_mapping({"command": "learn", "learn.epsx": 0.1})

    def test_command_must_be_known(self):
        with pytest.raises(ConfigError, match="command"):
            config_from_mapping({})
        with pytest.raises(ConfigError, match="command"):
            config_from_mapping({"command": "train"})
        assert COMMANDS == ("learn", "verify", "gradcheck", "bench")

    def test_trials_and_threads_validation(self):
        with pytest.raises(ConfigError, match="trials"):
            config_from_mapping({"command": "learn", "trials": 0})
        with pytest.raises(ConfigError, match="trials"):
            config_from_mapping({"command": "learn", "trials": 2.0})
        with pytest.raises(ConfigError, match="threads"):
            config_from_mapping({"command": "learn", "threads": 0})

    def test_auto_profile_tracks_marginal(self):
        pairs = {
            "uniform_disk_2d": "disk_exact",
            "standard_gaussian": "gaussian_analytic",
            "uniform_ball_isotropic": "logconcave",
        }
        for kind, profile in pairs.items():
            cfg = config_from_mapping(
                {"command": "bench", "marginal.kind": kind, "marginal.dim": 2}
            )
            assert cfg.profile_name == profile

    def test_scaled_sphere_needs_explicit_profile(self):
        base = {"command": "bench", "marginal.kind": "uniform_sphere_scaled"}
        with pytest.raises(ConfigError, match="no automatic profile"):
            config_from_mapping(base)
        cfg = config_from_mapping({**base, "profile": "logconcave"})
        assert cfg.profile_name == "logconcave"

    def test_unknown_profile_rejected(self):
        with pytest.raises(ConfigError, match="profile"):
            config_from_mapping({"command": "bench", "profile": "bespoke"})

    def test_noise_kind_and_section_errors(self):
        with pytest.raises(ConfigError, match="noise.kind"):
            config_from_mapping({"command": "learn", "noise.kind": "adversarial"})
        with pytest.raises(ConfigError, match="noise section"):
            config_from_mapping(
                {"command": "learn", "noise.kind": "constant", "noise.eta_bound": 0.6}
            )

    def test_model_auto_follows_noise_kind(self):
        strong = config_from_mapping(
            {
                "command": "learn",
                "noise.kind": "strong_massart_max",
                "noise.c_strong": 0.5,
            }
        )
        assert strong.model == "strong_massart"
        bounded = config_from_mapping(
            {"command": "learn", "noise.kind": "constant", "noise.eta_bound": 0.2}
        )
        assert bounded.model == "massart"
        with pytest.raises(ConfigError, match="learn.model"):
            config_from_mapping({"command": "learn", "learn.model": "agnostic"})

    def test_min_pass_defaults_to_ninety_percent_ceiling(self):
        assert config_from_mapping({"command": "learn", "trials": 10}).min_pass == 9
        assert config_from_mapping({"command": "learn", "trials": 4}).min_pass == 4
        cfg = config_from_mapping({"command": "learn", "trials": 10, "eval.min_pass": 7})
        assert cfg.min_pass == 7

    def test_verify_sigma_accepts_cap_or_number(self):
        assert config_from_mapping({"command": "verify"}).verify_sigma == "cap"
        cfg = config_from_mapping({"command": "verify", "verify.sigma": 0.01})
        assert cfg.verify_sigma == 0.01
        with pytest.raises(ConfigError, match="verify.sigma"):
            config_from_mapping({"command": "verify", "verify.sigma": "big"})

    def test_verify_angles_single_and_list(self):
        single = config_from_mapping({"command": "verify", "verify.angles": 0.5})
        assert single.verify_angles == (0.5,)
        many = config_from_mapping({"command": "verify", "verify.angles": "0.5, 1.0 ,1.5"})
        assert many.verify_angles == (0.5, 1.0, 1.5)
        with pytest.raises(ConfigError, match="verify.angles"):
            config_from_mapping({"command": "verify", "verify.angles": "0.5,wide"})

    def test_hash_property_matches_free_function(self):
        flat = dict(LEARN_FLAT)
        cfg = config_from_mapping(flat)
        assert cfg.hash == config_hash(flat)

    def test_certified_profile_is_constructed(self):
        cfg = config_from_mapping({"command": "bench", "marginal.kind": "uniform_disk_2d", "marginal.dim": 2})
        certified = cfg.certified_profile()
        assert certified.profile.density_bound == pytest.approx(4.0 * math.pi)
        assert certified.provenance == "analytic"


class TestLoadConfig:
    def test_missing_file_is_a_config_error(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_config(tmp_path / "absent.cfg")

    def test_loads_line_fixture(self):
        cfg = load_config(FIXTURES / "learn_massart_gaussian.cfg")
        assert cfg.command == "learn"
        assert cfg.trials == 10
        assert cfg.dim == 10
        assert cfg.noise.kind == "boundary_concentrated"
        assert cfg.noise.eta_bound == 0.4
        assert cfg.model == "massart"
        assert cfg.min_pass == 9


# --------------------------------------------------------------------------
# measure_disagreement


class TestMeasureDisagreement:
    def test_needs_a_thousand_samples(self):
        marginal = MarginalSampler(kind="standard_gaussian", dim=3, seed=0)
        h = np.array([1.0, 0.0, 0.0])
        with pytest.raises(ValueError, match="1000"):
            measure_disagreement(h, h, marginal, 999)

    def test_identical_vectors_give_exact_zero(self):
        marginal = MarginalSampler(kind="standard_gaussian", dim=4, seed=7)
        h = np.array([0.5, 0.5, 0.5, 0.5])
        estimate, stderr = measure_disagreement(h, h.copy(), marginal, 1000)
        assert estimate == 0.0
        assert stderr == 0.0

    def test_opposite_vectors_give_one(self):
        marginal = MarginalSampler(kind="standard_gaussian", dim=4, seed=8)
        h = np.array([0.5, 0.5, 0.5, 0.5])
        estimate, _ = measure_disagreement(h, -h, marginal, 2000)
        assert estimate == 1.0

    def test_disk_angle_gives_theta_over_pi(self):
        # On the uniform disk the disagreement wedge has mass theta/pi.
        theta = math.pi / 4
        marginal = MarginalSampler(kind="uniform_disk_2d", dim=2, seed=11)
        h = np.array([1.0, 0.0])
        target = np.array([math.cos(theta), math.sin(theta)])
        n = 200_000
        estimate, stderr = measure_disagreement(h, target, marginal, n)
        assert abs(estimate - 0.25) <= 5.0 * math.sqrt(0.25 * 0.75 / n)
        assert stderr == pytest.approx(math.sqrt(estimate * (1 - estimate) / n))

    def test_non_unit_vectors_rejected(self):
        marginal = MarginalSampler(kind="standard_gaussian", dim=2, seed=0)
        unit = np.array([1.0, 0.0])
        with pytest.raises(ValueError):
            measure_disagreement(2.0 * unit, unit, marginal, 1000)
        with pytest.raises(ValueError):
            measure_disagreement(unit, 2.0 * unit, marginal, 1000)


# --------------------------------------------------------------------------
# run(): learn


class TestRunLearn:
    def test_learn_artifacts_and_exit(self, tmp_path):
        cfg = config_from_mapping(_flat(LEARN_FLAT, tmp_path))
        assert run(cfg) == EXIT_OK
        meta, header, rows = _read_artifact(tmp_path / "learn.csv")
        assert meta == [
            f"# schema_version = {SCHEMA_VERSION}",
            f"# artifact = massart-halfspace {__version__}",
            f"# config_hash = {cfg.hash}",
            "# command = learn",
        ]
        assert header == [
            "trial", "seed", "disagreement", "disagreement_stderr", "noisy_error",
            "opt_estimate", "opt_stderr", "excess_error", "samples_used", "steps",
            "step_size", "sigma", "selection_samples", "candidate_count",
            "chosen_step", "chosen_sign", "verdict", "wall_time_s",
        ]
        assert len(rows) == 2
        for row in rows:
            assert len(row) == len(header)
            assert row[16] == "pass"
            # samples_used = optimization draws + selection draws
            assert int(row[8]) == int(row[9]) + int(row[12])
            assert int(row[15]) in (1, -1)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["command"] == "learn"
        assert summary["config_hash"] == cfg.hash
        assert summary["trials"] == 2
        assert summary["passes"] == 2
        assert summary["failures"] == 0
        assert summary["aborts"] == 0
        assert summary["completed"] == 2
        assert summary["min_pass"] == 2
        assert 0.0 <= summary["median_disagreement"] <= 0.1

    def test_rerun_is_identical_apart_from_wall_time(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        run(config_from_mapping(_flat(LEARN_FLAT, first)))
        run(config_from_mapping(_flat(LEARN_FLAT, second)))
        meta_a, header_a, rows_a = _read_artifact(first / "learn.csv")
        meta_b, header_b, rows_b = _read_artifact(second / "learn.csv")
        assert meta_a == meta_b
        assert header_a == header_b
        wall = header_a.index("wall_time_s")
        for row_a, row_b in zip(rows_a, rows_b):
            assert row_a[:wall] == row_b[:wall]

    def test_plots_emit_selection_curves(self, tmp_path):
        cfg = config_from_mapping(_flat(LEARN_FLAT, tmp_path, plots=True))
        assert run(cfg) == EXIT_OK
        _, header, rows = _read_artifact(tmp_path / "learn_curves.csv")
        assert header == ["trial", "step", "sign", "selection_error"]
        _, _, learn_rows = _read_artifact(tmp_path / "learn.csv")
        candidates = int(learn_rows[0][13])
        assert len(rows) == 2 * candidates
        for row in rows:
            assert int(row[0]) in (0, 1)
            assert int(row[1]) % 400 == 0
            assert int(row[2]) in (1, -1)
            assert 0.0 <= float(row[3]) <= 1.0

    def test_trial_abort_is_recorded_not_raised(self, tmp_path):
        # A bounded-noise learner pointed at the strong-noise adversary
        # fails inside each trial; the run records aborts and exits 2.
        flat = _flat(
            LEARN_FLAT,
            tmp_path,
            **{
                "noise.kind": "strong_massart_max",
                "noise.c_strong": 0.5,
                "learn.model": "massart",
            },
        )
        del flat["noise.eta_bound"]
        cfg = config_from_mapping(flat)
        assert run(cfg) == EXIT_TRIAL_FAILURES
        _, header, rows = _read_artifact(tmp_path / "learn.csv")
        assert len(rows) == 2
        for row in rows:
            assert len(row) == len(header)
            assert row[16] == "abort:ValueError"
            assert row[2] == "nan"
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["aborts"] == 2
        assert summary["completed"] == 0
        assert summary["median_disagreement"] is None

    def test_min_pass_gate_controls_exit_code(self, tmp_path):
        flat = _flat(LEARN_FLAT, tmp_path, **{"eval.min_pass": 3})
        assert run(config_from_mapping(flat)) == EXIT_TRIAL_FAILURES
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["passes"] == 2
        assert summary["min_pass"] == 3

    def test_strong_model_reports_excess_error(self, tmp_path):
        flat = _flat(
            LEARN_FLAT,
            tmp_path,
            base_seed=77002,
            **{
                "noise.kind": "strong_massart_max",
                "noise.c_strong": 0.5,
                "learn.model": "strong_massart",
            },
        )
        del flat["noise.eta_bound"]
        cfg = config_from_mapping(flat)
        assert run(cfg) == EXIT_OK
        _, header, rows = _read_artifact(tmp_path / "learn.csv")
        for row in rows:
            noisy = float(row[header.index("noisy_error")])
            opt = float(row[header.index("opt_estimate")])
            excess = float(row[header.index("excess_error")])
            assert excess == pytest.approx(noisy - opt, abs=1e-12)
            assert row[header.index("verdict")] == "pass"


# --------------------------------------------------------------------------
# run(): verify


class TestRunVerify:
    def test_verify_artifacts_and_exit(self, tmp_path):
        cfg = config_from_mapping(_flat(VERIFY_FLAT, tmp_path))
        assert run(cfg) == EXIT_OK
        meta, header, rows = _read_artifact(tmp_path / "verify.csv")
        assert meta[3] == "# command = verify"
        assert header == [
            "strategy", "lemma", "theta", "sigma", "floor", "estimate", "stderr",
            "samples", "good_mass", "bad_mass", "verdict",
        ]
        assert len(rows) == 1
        row = rows[0]
        assert row[0] == "constant"
        assert row[1] == "sigmoid"
        # sigma resolves to the cap at the window edge (the lone angle).
        expected_sigma = lemma_sigma_cap(
            "sigmoid", cfg.certified_profile().profile, 0.3, math.pi / 2
        )
        assert float(row[3]) == expected_sigma
        assert float(row[5]) >= float(row[4])  # estimate clears the floor
        assert float(row[8]) - float(row[9]) == pytest.approx(float(row[5]), abs=1e-12)
        assert row[10] == "pass"
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary == {
            "command": "verify",
            "config_hash": cfg.hash,
            "rows": 1,
            "failures": 0,
            "aborts": 0,
            "passes": 1,
        }

    def test_row_per_strategy_angle_pair(self, tmp_path):
        flat = _flat(
            VERIFY_FLAT,
            tmp_path,
            **{
                "verify.angles": "0.0,1.5707963267948966",
                "verify.strategies": "none,constant",
            },
        )
        assert run(config_from_mapping(flat)) == EXIT_OK
        _, header, rows = _read_artifact(tmp_path / "verify.csv")
        assert len(rows) == 4
        pairs = {(row[0], float(row[2])) for row in rows}
        assert pairs == {
            ("none", 0.0),
            ("none", math.pi / 2),
            ("constant", 0.0),
            ("constant", math.pi / 2),
        }
        assert all(row[10] == "pass" for row in rows)

    def test_oversized_sigma_aborts_with_exit_two(self, tmp_path):
        flat = _flat(VERIFY_FLAT, tmp_path, **{"verify.sigma": 0.5})
        assert run(config_from_mapping(flat)) == EXIT_TRIAL_FAILURES
        _, _, rows = _read_artifact(tmp_path / "verify.csv")
        assert len(rows) == 1
        assert rows[0][10] == "abort:ValueError"
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["aborts"] == 1
        assert summary["failures"] == 0

    def test_verify_csv_is_bitwise_reproducible(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        run(config_from_mapping(_flat(VERIFY_FLAT, first)))
        run(config_from_mapping(_flat(VERIFY_FLAT, second)))
        assert (first / "verify.csv").read_bytes() == (second / "verify.csv").read_bytes()


# --------------------------------------------------------------------------
# run(): gradcheck and bench


class TestRunGradcheck:
    def test_gradcheck_passes_and_reports(self, tmp_path):
        flat = {
            "command": "gradcheck",
            "base_seed": 90210,
            "gradcheck.cases": 25,
            "out": str(tmp_path),
        }
        cfg = config_from_mapping(flat)
        assert run(cfg) == EXIT_OK
        _, header, rows = _read_artifact(tmp_path / "gradcheck.csv")
        assert header == ["case", "dim", "sigma", "grad_norm", "abs_error", "rel_error", "verdict"]
        assert len(rows) == 25
        assert all(row[6] == "pass" for row in rows)
        dims = {int(row[1]) for row in rows}
        assert dims <= set(range(2, 21))
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["cases"] == 25
        assert summary["failures"] == 0
        assert summary["max_rel_error"] <= summary["tolerance"]

    def test_unreachable_tolerance_exits_two(self, tmp_path):
        flat = {
            "command": "gradcheck",
            "base_seed": 90210,
            "gradcheck.cases": 10,
            "gradcheck.tol": 1e-15,
            "out": str(tmp_path),
        }
        assert run(config_from_mapping(flat)) == EXIT_TRIAL_FAILURES
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["failures"] > 0

    def test_gradcheck_csv_is_bitwise_reproducible(self, tmp_path):
        flat = {"command": "gradcheck", "base_seed": 5, "gradcheck.cases": 25}
        run(config_from_mapping({**flat, "out": str(tmp_path / "a")}))
        run(config_from_mapping({**flat, "out": str(tmp_path / "b")}))
        assert (tmp_path / "a" / "gradcheck.csv").read_bytes() == (
            tmp_path / "b" / "gradcheck.csv"
        ).read_bytes()


class TestRunBench:
    def test_bench_components_and_exit(self, tmp_path):
        flat = {
            "command": "bench",
            "base_seed": 5150,
            "marginal.kind": "standard_gaussian",
            "marginal.dim": 10,
            "noise.kind": "constant",
            "noise.eta_bound": 0.3,
            "bench.samples": 20000,
            "out": str(tmp_path),
        }
        cfg = config_from_mapping(flat)
        assert run(cfg) == EXIT_OK
        _, header, rows = _read_artifact(tmp_path / "bench.csv")
        assert header == ["component", "count", "wall_time_s", "ns_per_op"]
        assert [row[0] for row in rows] == ["marginal_sample", "oracle_draw", "sample_gradients"]
        assert int(rows[0][1]) == 20000
        assert int(rows[1][1]) == 20000
        assert int(rows[2][1]) == 20000  # below the gradient batch cap
        assert all(float(row[2]) >= 0.0 for row in rows)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["components"] == ["marginal_sample", "oracle_draw", "sample_gradients"]


# --------------------------------------------------------------------------
# command-line front end


def _write_config(path: Path, flat: dict) -> Path:
    lines = [f"{key} = {value}" for key, value in flat.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestCli:
    def test_bench_roundtrip(self, tmp_path):
        cfg_path = _write_config(
            tmp_path / "bench.cfg",
            {"command": "bench", "bench.samples": 5000, "marginal.dim": 4},
        )
        out = tmp_path / "out"
        code = cli_main(["bench", "--config", str(cfg_path), "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "bench.csv").exists()

    def test_declared_command_must_match_positional(self, tmp_path, capsys):
        cfg_path = _write_config(tmp_path / "c.cfg", {"command": "learn"})
        code = cli_main(["bench", "--config", str(cfg_path)])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = cli_main(["bench", "--config", str(tmp_path / "absent.cfg")])
        assert code == EXIT_CONFIG
        assert "cannot read config" in capsys.readouterr().err

    def test_bad_command_choice(self, tmp_path, capsys):
        cfg_path = _write_config(tmp_path / "c.cfg", {"command": "bench"})
        code = cli_main(["train", "--config", str(cfg_path)])
        assert code == EXIT_CONFIG
        capsys.readouterr()

    def test_missing_config_flag(self, capsys):
        assert cli_main(["bench"]) == EXIT_CONFIG
        capsys.readouterr()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg_path = _write_config(
            tmp_path / "g.cfg",
            {"command": "gradcheck", "gradcheck.cases": 5, "base_seed": 1},
        )
        out_a, out_b, out_c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert cli_main(["gradcheck", "--config", str(cfg_path), "--out", str(out_a)]) == EXIT_OK
        assert cli_main(
            ["gradcheck", "--config", str(cfg_path), "--out", str(out_b), "--seed", "1"]
        ) == EXIT_OK
        assert cli_main(
            ["gradcheck", "--config", str(cfg_path), "--out", str(out_c), "--seed", "2"]
        ) == EXIT_OK
        rows_a = _read_artifact(out_a / "gradcheck.csv")[2]
        rows_b = _read_artifact(out_b / "gradcheck.csv")[2]
        rows_c = _read_artifact(out_c / "gradcheck.csv")[2]
        assert rows_a == rows_b  # flag equal to the config value changes nothing
        assert rows_a != rows_c

    def test_seed_flag_range_checked(self, tmp_path, capsys):
        cfg_path = _write_config(tmp_path / "c.cfg", {"command": "bench"})
        code = cli_main(["bench", "--config", str(cfg_path), "--seed", str(2**64)])
        assert code == EXIT_CONFIG
        assert "64-bit" in capsys.readouterr().err

    def test_threads_are_hash_neutral(self, tmp_path, monkeypatch):
        cfg_path = _write_config(
            tmp_path / "b.cfg", {"command": "bench", "bench.samples": 2000}
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli_main(["bench", "--config", str(cfg_path), "--out", str(out_a)]) == EXIT_OK
        monkeypatch.setenv(THREADS_ENV_VAR, "4")
        assert cli_main(["bench", "--config", str(cfg_path), "--out", str(out_b)]) == EXIT_OK
        hash_line_a = _read_artifact(out_a / "bench.csv")[0][2]
        hash_line_b = _read_artifact(out_b / "bench.csv")[0][2]
        assert hash_line_a == hash_line_b

    def test_threads_env_must_be_integer(self, tmp_path, monkeypatch, capsys):
        cfg_path = _write_config(tmp_path / "b.cfg", {"command": "bench"})
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        assert cli_main(["bench", "--config", str(cfg_path)]) == EXIT_CONFIG
        assert THREADS_ENV_VAR in capsys.readouterr().err

    def test_threads_flag_validated(self, tmp_path, capsys):
        cfg_path = _write_config(tmp_path / "b.cfg", {"command": "bench"})
        code = cli_main(["bench", "--config", str(cfg_path), "--threads", "0"])
        assert code == EXIT_CONFIG
        capsys.readouterr()

    def test_console_script_runs(self, tmp_path):
        exe = shutil.which("massart-halfspace")
        assert exe is not None, "console script should be installed"
        cfg_path = _write_config(
            tmp_path / "g.cfg", {"command": "gradcheck", "gradcheck.cases": 5}
        )
        proc = subprocess.run(
            [exe, "gradcheck", "--config", str(cfg_path), "--out", str(tmp_path / "out")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == EXIT_OK
        assert (tmp_path / "out" / "gradcheck.csv").exists()


class TestExitCodes:
    def test_code_values_are_stable(self):
        assert EXIT_OK == 0
        assert EXIT_CONFIG == 1
        assert EXIT_TRIAL_FAILURES == 2
