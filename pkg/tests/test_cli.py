"""Command line front end: subcommands, config loading, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from permsym.cli import (
    NAMED_STATES,
    evaluate_verify,
    load_experiment,
    main,
    state_from_spec,
)
from permsym.states import StateVector, singlet_qutrits, wedge_state_from_labels


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def run_cli(*args, cwd=None):
    cmd = [sys.executable, "-m", "permsym.cli", *args]
    return subprocess.run(cmd, capture_output=True, text=True, cwd=cwd)


def quick_config(**overrides):
    config = {
        "system": {"n": 3, "d": 2},
        "seed": 3,
        "initial_state": {"basis_digits": [0, 1, 0]},
        "probes": ["fsgn", "norm", "energy"],
        "integrator": {"mode": "exact_step", "dt": 0.1, "record_stride": 2},
        "output": "quick.csv",
        "hamiltonian_phases": [
            {
                "t_start": 0.0,
                "t_end": 1.0,
                "terms": [{"type": "random_all_pairs", "stream": 0}],
            },
            {
                "t_start": 1.0,
                "t_end": 2.0,
                "terms": [{"type": "nearest_neighbor_chain", "coefficient": 0.5}],
            },
        ],
        "verify": [
            {"probe": "fsgn", "phase": 0, "within": 1e-9},
            {"probe": "norm", "phase": 1, "within": 1e-12},
        ],
    }
    config.update(overrides)
    return config


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


class TestSubcommands:
    def test_sectors_six_qutrits(self):
        result = invoke("sectors", "--n", "6", "--d", "3")
        assert result.exit_code == 0
        table = json.loads(result.output)
        assert len(table["sectors"]) == 7
        total = sum(s["multiplicity"] * s["dimension"] for s in table["sectors"])
        assert total == 3**6

    def test_sectors_two_qubits(self):
        result = invoke("sectors", "--n", "2", "--d", "2")
        table = json.loads(result.output)
        parts = [tuple(s["partition"]) for s in table["sectors"]]
        assert parts == [(2,), (1, 1)]

    def test_fsgn_named_state_vanishes(self):
        result = invoke("fsgn", "--state", "singlet3x0")
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["n"] == 6 and payload["d"] == 3
        assert abs(payload["fsgn"]) < 1e-12

    def test_fsgn_two_site_string(self):
        result = invoke("fsgn", "--digits", "0,1", "--d", "2")
        payload = json.loads(result.output)
        assert payload["fsgn"] == pytest.approx(0.5, abs=1e-12)

    def test_omega_distinct_labels(self):
        # |0,1,2> overlaps the occupied-{2,3} wedge with weight 1/2, so
        # the projected single-particle matrix is diag(0, 1/2, 1/2)
        result = invoke("omega", "--digits", "0,1,2", "--d", "3")
        payload = json.loads(result.output)
        matrix = np.array([[complex(re, im) for re, im in row] for row in payload["matrix"]])
        assert np.allclose(matrix, np.diag([0.0, 0.5, 0.5]), atol=1e-12)

    def test_omega_backends_agree(self):
        results = [
            json.loads(invoke("omega", "--digits", "0,2,1,0", "--d", "3",
                              "--backend", backend).output)
            for backend in ("qudit", "fermion")
        ]
        assert np.allclose(results[0]["matrix"], results[1]["matrix"], atol=1e-10)

    def test_lie_dim_single_particle(self):
        for n, expected in ((3, 4), (4, 9)):
            payload = json.loads(
                invoke("lie-dim", "--single-particle", "--n", str(n)).output
            )
            assert payload["dimension"] == expected

    def test_lie_dim_requires_mode_flag(self):
        result = invoke("lie-dim", "--n", "4")
        assert result.exit_code != 0

    def test_one_design_report(self):
        result = invoke(
            "design-test", "--kind", "one", "--n", "3", "--d", "2",
            "--samples", "120", "--depth", "40", "--seed", "1",
        )
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["test"] == "one_design"
        assert report["verdicts"]["first_moment_matches"] is True
        assert report["values"]["distance"] <= report["thresholds"]["distance"]


class TestStateSpecs:
    def test_named_states_shapes(self):
        fig2 = NAMED_STATES["singlet3x0"]()
        fig3 = NAMED_STATES["singlet3x000"]()
        assert (fig2.n, fig2.d) == (6, 3) and (fig3.n, fig3.d) == (6, 3)
        expected2 = singlet_qutrits().tensor(wedge_state_from_labels(3, [0, 1], tail=1))
        expected3 = singlet_qutrits().tensor(StateVector.basis_string(3, [0, 0, 0]))
        assert abs(abs(fig2.inner(expected2)) - 1.0) < 1e-12
        assert abs(abs(fig3.inner(expected3)) - 1.0) < 1e-12

    def test_wedge_blocks(self):
        state = state_from_spec({"wedge_blocks": [[0, 1], [0]]}, 3, 3)
        expected = wedge_state_from_labels(3, [0, 1], tail=1)
        assert abs(abs(state.inner(expected)) - 1.0) < 1e-12

    def test_inline_amps_roundtrip(self):
        spec = {"amps": [[0.6, 0.0], [0.0, 0.8]]}
        state = state_from_spec(spec, 1, 2)
        assert np.allclose(state.amps, [0.6, 0.8j])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="config says"):
            state_from_spec("singlet3x0", 3, 3)

    def test_unknown_spec_rejected(self):
        with pytest.raises(ValueError, match="one of"):
            state_from_spec({}, 2, 2)


class TestConfigValidation:
    def test_gap_between_phases(self, tmp_path):
        config = quick_config()
        config["hamiltonian_phases"][1]["t_start"] = 1.5
        result = run_cli("evolve", "--config", write_config(tmp_path, config))
        assert result.returncode == 2
        error = json.loads(result.stderr)
        assert "contiguous" in error["message"]

    def test_zero_length_phase(self, tmp_path):
        config = quick_config()
        config["hamiltonian_phases"][0]["t_end"] = 0.0
        config["hamiltonian_phases"][1]["t_start"] = 0.0
        result = run_cli("evolve", "--config", write_config(tmp_path, config))
        assert result.returncode == 2
        assert "positive length" in json.loads(result.stderr)["message"]

    def test_unknown_probe(self, tmp_path):
        config = quick_config(probes=["entropy"])
        result = run_cli("evolve", "--config", write_config(tmp_path, config))
        assert result.returncode == 2

    def test_unknown_term_type(self, tmp_path):
        config = quick_config()
        config["hamiltonian_phases"][0]["terms"] = [{"type": "dipole"}]
        result = run_cli("evolve", "--config", write_config(tmp_path, config))
        assert result.returncode == 2
        assert "dipole" in json.loads(result.stderr)["message"]

    def test_verify_rule_unrecorded_probe(self, tmp_path):
        config = quick_config()
        config["verify"] = [{"probe": "purity", "phase": 0, "within": 1e-6}]
        result = run_cli("evolve", "--config", write_config(tmp_path, config))
        assert result.returncode == 2
        assert "unrecorded" in json.loads(result.stderr)["message"]

    def test_missing_config_lists_bundled(self, tmp_path):
        result = run_cli("evolve", "--config", str(tmp_path / "absent.json"))
        assert result.returncode == 2
        assert "fig2.json" in json.loads(result.stderr)["message"]

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        result = run_cli("evolve", "--config", str(path))
        assert result.returncode == 2

    def test_bundled_configs_load(self):
        from permsym.cli import _read_config

        for name in ("fig2", "fig2_chain", "fig3", "fig3_chain"):
            experiment = load_experiment(_read_config(name))
            assert (experiment.n, experiment.d) == (6, 3)
            assert [p[:2] for p in experiment.phases] == [
                (0.0, 100.0), (100.0, 300.0), (300.0, 400.0),
            ]
            assert experiment.evolution.t_final == 400.0
            assert experiment.verify_rules


class TestEvolveCommand:
    def test_quick_run_writes_csv(self, tmp_path):
        config = write_config(tmp_path, quick_config())
        out = tmp_path / "series.csv"
        result = run_cli("evolve", "--config", config, "--out", str(out), "--verify")
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["records"] == 11
        assert payload["switch_times"] == [1.0]
        assert all(rule["ok"] for rule in payload["verify"])
        content = out.read_bytes()
        assert b"\r" not in content
        header = content.decode().splitlines()[0]
        assert header == "t,fsgn,norm,energy"
        assert len(content.decode().splitlines()) == 12

    def test_same_seed_byte_identical(self, tmp_path):
        config = write_config(tmp_path, quick_config())
        outs = [tmp_path / f"run{k}.csv" for k in (1, 2)]
        for out in outs:
            run_cli("evolve", "--config", config, "--out", str(out), "--threads", "1")
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_seed_override_changes_couplings(self, tmp_path):
        config = write_config(tmp_path, quick_config())
        outs = [tmp_path / f"seed{k}.csv" for k in (3, 5)]
        for seed, out in zip((3, 5), outs):
            run_cli("evolve", "--config", config, "--out", str(out), "--seed", str(seed))
        energies = [
            np.genfromtxt(out, delimiter=",", names=True)["energy"] for out in outs
        ]
        assert np.max(np.abs(energies[0] - energies[1])) > 1e-3

    def test_empty_phase_leaves_probes_constant(self, tmp_path):
        config = quick_config()
        for phase in config["hamiltonian_phases"]:
            phase["terms"] = []
        out = tmp_path / "flat.csv"
        result = run_cli(
            "evolve", "--config", write_config(tmp_path, config), "--out", str(out)
        )
        assert result.returncode == 0
        rows = np.genfromtxt(out, delimiter=",", names=True)
        for column in ("fsgn", "norm", "energy"):
            assert np.ptp(rows[column]) == 0.0

    def test_verify_failure_exits_one(self, tmp_path):
        # rk4 norm drift is tiny but nonzero, so an absurd tolerance trips
        config = quick_config(
            integrator={"mode": "rk4", "dt": 0.1, "record_stride": 2},
            verify=[{"probe": "norm", "phase": 0, "within": 1e-15}],
        )
        out = tmp_path / "drift.csv"
        result = run_cli(
            "evolve", "--config", write_config(tmp_path, config),
            "--out", str(out), "--verify",
        )
        assert result.returncode == 1
        payload = json.loads(result.stdout)
        assert any(not rule["ok"] for rule in payload["verify"])
        assert out.exists()

    def test_console_script_help(self):
        result = subprocess.run(
            ["permsym", "--help"], capture_output=True, text=True
        )
        assert result.returncode == 0
        for command in ("evolve", "fsgn", "omega", "sectors", "design-test", "lie-dim"):
            assert command in result.stdout


class TestVerifyMasks:
    def test_boundary_record_belongs_to_earlier_phase(self):
        class Series:
            times = [0.0, 0.5, 1.0, 1.5, 2.0]
            columns = {"p": np.array([1.0, 1.0, 1.0, 4.0, 4.0])}

        phases = [(0.0, 1.0), (1.0, 2.0)]
        results = evaluate_verify(
            Series(), phases,
            [
                {"probe": "p", "phase": 0, "within": 1e-12},
                {"probe": "p", "phase": 1, "within": 1e-12},
            ],
        )
        # the jump sits exactly on the phase switch, so both windows are flat
        assert results[0]["ok"] and results[0]["max_deviation"] == 0.0
        assert results[1]["ok"] and results[1]["max_deviation"] == 0.0

    def test_in_phase_drift_detected(self):
        class Series:
            times = [0.0, 0.5, 1.0]
            columns = {"p": np.array([1.0, 1.2, 1.0])}

        results = evaluate_verify(
            Series(), [(0.0, 1.0)], [{"probe": "p", "phase": 0, "within": 0.1}]
        )
        assert not results[0]["ok"]
        assert results[0]["max_deviation"] == pytest.approx(0.2)


def moved_sites(word):
    return tuple(i for i in range(1, word.n + 1) if word(i) != i)


def active_couplings(experiment, t):
    return {
        moved_sites(term.word): term.schedule.value_at(t)
        for term in experiment.hamiltonian.terms
        if term.schedule.value_at(t) != 0.0
    }


class TestExperimentLoading:
    def test_shared_stream_reuses_couplings(self):
        config = quick_config()
        config["hamiltonian_phases"][1]["terms"] = [
            {"type": "random_all_pairs", "stream": 0}
        ]
        experiment = load_experiment(config)
        early = active_couplings(experiment, 0.5)
        late = active_couplings(experiment, 1.5)
        assert early and early == late

    def test_distinct_streams_differ(self):
        config = quick_config()
        config["hamiltonian_phases"][1]["terms"] = [
            {"type": "random_all_pairs", "stream": 1}
        ]
        experiment = load_experiment(config)
        early = active_couplings(experiment, 0.5)
        late = active_couplings(experiment, 1.5)
        assert set(early) == set(late)
        assert any(abs(early[p] - late[p]) > 1e-6 for p in early)

    def test_seed_parameter_overrides_config(self):
        base = load_experiment(quick_config())
        other = load_experiment(quick_config(), seed=99)
        assert base.seed == 3 and other.seed == 99
        assert active_couplings(base, 0.5) != active_couplings(other, 0.5)

    def test_chain_includes_wraparound(self):
        config = quick_config()
        config["hamiltonian_phases"][0]["terms"] = [
            {"type": "nearest_neighbor_chain", "coefficient": 2.0}
        ]
        experiment = load_experiment(config)
        couplings = active_couplings(experiment, 0.5)
        assert couplings == {(1, 2): 2.0, (1, 3): 2.0, (2, 3): 2.0}

    def test_pairs_and_cycles_terms(self):
        # a cycle word needs its reverse alongside to keep H Hermitian
        config = quick_config()
        config["hamiltonian_phases"][0]["terms"] = [
            {"type": "pairs", "couplings": [[1, 3, 0.25]]},
            {"type": "cycles", "cycles": [[1, 2], [2, 3]], "coefficient": 0.5},
            {"type": "cycles", "cycles": [[2, 3], [1, 2]], "coefficient": 0.5},
        ]
        experiment = load_experiment(config)
        active = [
            term for term in experiment.hamiltonian.terms
            if term.schedule.value_at(0.5) != 0.0
        ]
        assert len(active) == 3
        values = sorted(term.schedule.value_at(0.5) for term in active)
        assert values == [0.25, 0.5, 0.5]
        cycle_words = {t.word.images for t in active if t.schedule.value_at(0.5) == 0.5}
        # leftmost factor acts last: P12 P23 sends 1 -> 2, its reverse 2 -> 1
        assert cycle_words == {(2, 3, 1), (3, 1, 2)}

    def test_lone_cycle_term_rejected(self):
        config = quick_config()
        config["hamiltonian_phases"][0]["terms"] = [
            {"type": "cycles", "cycles": [[1, 2], [2, 3]], "coefficient": 0.5}
        ]
        with pytest.raises(ValueError, match="conj"):
            load_experiment(config)

    def test_evolution_settings_forwarded(self):
        config = quick_config(
            integrator={"mode": "rk4", "dt": 0.25, "record_stride": 4,
                        "renormalize": True},
        )
        experiment = load_experiment(config)
        assert experiment.evolution.integrator == "rk4"
        assert experiment.evolution.dt == 0.25
        assert experiment.evolution.record_stride == 4
        assert experiment.evolution.renormalize is True
        assert experiment.evolution.t_final == 2.0
