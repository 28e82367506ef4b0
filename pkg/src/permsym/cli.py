"""Config-driven command line front end.

`evolve` reads a JSON experiment description (system size, initial state,
piecewise Hamiltonian phases, probes) and writes the sampled probe time
series as CSV; the other subcommands wrap one library operation each and
print JSON to stdout.  Exit codes: 0 success, 1 a --verify assertion
failed, 2 bad usage or config (JSON error object on stderr).
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass
from importlib import resources

import click
import numpy as np

from .dynamics import (
    EvolutionConfig,
    HamiltonianTerm,
    Schedule,
    SymmetricHamiltonian,
    evolve,
)
from .ensembles import EnsembleSpec, one_design_test, two_design_violation_test
from .fermions import lie_closure_dimension, omega_map, single_particle_swap
from .probes import build_probes
from .sectors import SectorTable
from .states import (
    PermutationWord,
    StateVector,
    singlet_qutrits,
    wedge_state_from_labels,
)
from .z2 import f_sgn

_COUPLING_STREAM = 90


def _fig2_state() -> StateVector:
    return singlet_qutrits().tensor(wedge_state_from_labels(3, [0, 1], tail=1))


def _fig3_state() -> StateVector:
    return singlet_qutrits().tensor(StateVector.basis_string(3, [0, 0, 0]))


NAMED_STATES = {
    "singlet3x0": _fig2_state,  # (|0>^|1>^|2>) x (|0>^|1>) x |0>
    "singlet3x000": _fig3_state,  # (|0>^|1>^|2>) x |0>x3
}


def state_from_spec(spec, n: int, d: int) -> StateVector:
    if isinstance(spec, str):
        spec = {"named": spec}
    if "named" in spec:
        name = spec["named"]
        if name not in NAMED_STATES:
            known = ", ".join(sorted(NAMED_STATES))
            raise ValueError(f"unknown state {name!r}; named states: {known}")
        state = NAMED_STATES[name]()
    elif "wedge_blocks" in spec:
        state = None
        for block in spec["wedge_blocks"]:
            factor = wedge_state_from_labels(d, [int(x) for x in block])
            state = factor if state is None else state.tensor(factor)
        if state is None:
            raise ValueError("wedge_blocks must name at least one block")
    elif "basis_digits" in spec:
        state = StateVector.basis_string(d, [int(x) for x in spec["basis_digits"]])
    elif "amps" in spec:
        amps = np.array([complex(re, im) for re, im in spec["amps"]])
        state = StateVector(n, d, amps)
    else:
        raise ValueError(
            "initial_state needs one of: named, wedge_blocks, basis_digits, amps"
        )
    if state.n != n or state.d != d:
        raise ValueError(
            f"initial state is {state.n} sites of dimension {state.d}, "
            f"config says n={n}, d={d}"
        )
    return state


def _build_terms(spec: dict, n: int, d: int, seed: int, t0: float, t1: float, cache: dict):
    kind = spec.get("type")
    scale = float(spec.get("coefficient", 1.0))
    if kind == "random_all_pairs":
        low = float(spec.get("low", -1.0))
        high = float(spec.get("high", 1.0))
        stream = int(spec.get("stream", 0))
        key = (kind, stream, low, high)
        if key not in cache:
            rng = np.random.default_rng(
                np.random.SeedSequence([seed, _COUPLING_STREAM, stream])
            )
            cache[key] = {
                (i, j): float(rng.uniform(low, high))
                for i in range(1, n + 1)
                for j in range(i + 1, n + 1)
            }
        couplings = cache[key]
    elif kind == "nearest_neighbor_chain":
        couplings = {(i, i + 1): scale for i in range(1, n)}
        couplings[(1, n)] = scale
        scale = 1.0
    elif kind == "pairs":
        couplings = {
            (int(i), int(j)): float(h) for i, j, h in spec["couplings"]
        }
    elif kind == "cycles":
        word = PermutationWord.from_cycles(n, spec["cycles"])
        return [HamiltonianTerm(Schedule.window(t0, t1, scale), word)]
    else:
        raise ValueError(f"unknown hamiltonian term type {kind!r}")
    return [
        HamiltonianTerm(
            Schedule.window(t0, t1, scale * h),
            PermutationWord.transposition(n, i, j),
        )
        for (i, j), h in sorted(couplings.items())
    ]


@dataclass
class Experiment:
    n: int
    d: int
    seed: int
    state: StateVector
    hamiltonian: SymmetricHamiltonian
    probe_names: list
    probe_pairs: list
    evolution: EvolutionConfig
    output: str
    phases: list
    verify_rules: list


def load_experiment(config: dict, out=None, seed=None) -> Experiment:
    system = config["system"]
    n, d = int(system["n"]), int(system["d"])
    seed = int(config.get("seed", 0)) if seed is None else int(seed)

    raw_phases = config["hamiltonian_phases"]
    if not raw_phases:
        raise ValueError("hamiltonian_phases must not be empty")
    phases = []
    cursor = 0.0
    for phase in raw_phases:
        t0, t1 = float(phase["t_start"]), float(phase["t_end"])
        if abs(t0 - cursor) > 1e-12:
            raise ValueError(
                f"phases must be contiguous: expected t_start {cursor}, got {t0}"
            )
        if t1 <= t0:
            raise ValueError(f"phase [{t0}, {t1}] must have positive length")
        phases.append((t0, t1))
        cursor = t1

    cache: dict = {}
    terms = []
    for (t0, t1), phase in zip(phases, raw_phases):
        for term_spec in phase.get("terms", ()):
            terms.extend(_build_terms(term_spec, n, d, seed, t0, t1, cache))
    hamiltonian = SymmetricHamiltonian(n, d, terms)

    state = state_from_spec(config["initial_state"], n, d)

    integrator = config.get("integrator", {})
    evolution = EvolutionConfig(
        integrator=integrator.get("mode", "exact_step"),
        dt=float(integrator.get("dt", 1e-3)),
        t_final=phases[-1][1],
        record_stride=int(integrator.get("record_stride", 1)),
        renormalize=bool(integrator.get("renormalize", False)),
    )

    probe_names = list(config.get("probes", ["norm"]))
    probe_pairs = build_probes(probe_names, hamiltonian=hamiltonian)
    resolved = [name for name, _ in probe_pairs]

    verify_rules = []
    for rule in config.get("verify", ()):
        probe = rule["probe"]
        phase_index = int(rule["phase"])
        if probe not in resolved:
            raise ValueError(f"verify rule names unrecorded probe {probe!r}")
        if not 0 <= phase_index < len(phases):
            raise ValueError(f"verify rule names unknown phase {phase_index}")
        verify_rules.append(
            {"probe": probe, "phase": phase_index, "within": float(rule["within"])}
        )

    return Experiment(
        n=n,
        d=d,
        seed=seed,
        state=state,
        hamiltonian=hamiltonian,
        probe_names=resolved,
        probe_pairs=probe_pairs,
        evolution=evolution,
        output=str(out if out is not None else config.get("output", "series.csv")),
        phases=phases,
        verify_rules=verify_rules,
    )


def evaluate_verify(series, phases, rules) -> list:
    """Constancy of expected-conserved probe columns, phase by phase.

    A record on a phase boundary belongs to the earlier phase (the state
    there was produced by the earlier piece), so later phases compare
    against their first strictly interior record.
    """
    times = np.asarray(series.times)
    results = []
    for rule in rules:
        t0, t1 = phases[rule["phase"]]
        if rule["phase"] == 0:
            mask = (times >= t0 - 1e-9) & (times <= t1 + 1e-9)
        else:
            mask = (times > t0 + 1e-9) & (times <= t1 + 1e-9)
        column = np.asarray(series.columns[rule["probe"]])[mask]
        deviation = float(np.max(np.abs(column - column[0]))) if column.size else 0.0
        results.append({**rule, "max_deviation": deviation, "ok": deviation <= rule["within"]})
    return results


def _read_config(path: str) -> dict:
    candidate = path if path.endswith(".json") else path + ".json"
    try:
        with open(candidate) as fh:
            return json.load(fh)
    except FileNotFoundError:
        pass
    bundled = resources.files("permsym.configs").joinpath(candidate)
    if bundled.is_file():
        return json.loads(bundled.read_text())
    names = sorted(
        entry.name for entry in resources.files("permsym.configs").iterdir()
    )
    raise ValueError(
        f"config {path!r} is neither a file nor a bundled name ({', '.join(names)})"
    )


def _apply_threads(threads) -> None:
    if threads is None:
        return
    if threads < 1:
        raise ValueError("--threads must be at least 1")
    from threadpoolctl import threadpool_limits

    threadpool_limits(limits=threads)


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _json_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, KeyError, TypeError, OSError) as exc:
            click.echo(
                json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                err=True,
            )
            sys.exit(2)

    return wrapper


def _threads_option(fn):
    return click.option(
        "--threads", type=int, default=None, help="cap BLAS thread pools"
    )(fn)


@click.group()
def main():
    """Exact qudit dynamics under permutation Hamiltonians."""


@main.command("evolve")
@click.option("--config", "config_path", required=True, help="path or bundled name")
@click.option("--out", default=None, help="override the config's CSV path")
@click.option("--seed", type=int, default=None, help="override the config's seed")
@click.option("--verify", is_flag=True, help="assert expected-conserved probes")
@_threads_option
@_json_errors
def evolve_cmd(config_path, out, seed, verify, threads):
    """Integrate a configured experiment and write the probe CSV."""
    _apply_threads(threads)
    experiment = load_experiment(_read_config(config_path), out=out, seed=seed)
    series = evolve(
        experiment.state,
        experiment.hamiltonian,
        experiment.evolution,
        probes=experiment.probe_pairs,
    )
    series.to_csv(experiment.output)
    payload = {
        "output": experiment.output,
        "records": int(len(series.times)),
        "probes": experiment.probe_names,
        "switch_times": [t for t, _ in experiment.phases[1:]],
        "seed": experiment.seed,
    }
    if verify:
        results = evaluate_verify(series, experiment.phases, experiment.verify_rules)
        payload["verify"] = results
        _emit(payload)
        if not all(r["ok"] for r in results):
            sys.exit(1)
        return
    _emit(payload)


def _state_from_flags(name, digits, d) -> StateVector:
    if (name is None) == (digits is None):
        raise ValueError("pass exactly one of --state or --digits")
    if name is not None:
        return state_from_spec({"named": name}, *_named_shape(name))
    if d is None:
        raise ValueError("--digits needs --d")
    labels = [int(x) for x in digits.split(",")]
    return StateVector.basis_string(d, labels)


def _named_shape(name):
    if name not in NAMED_STATES:
        known = ", ".join(sorted(NAMED_STATES))
        raise ValueError(f"unknown state {name!r}; named states: {known}")
    probe = NAMED_STATES[name]()
    return probe.n, probe.d


@main.command("fsgn")
@click.option("--state", "state_name", default=None, help="named state")
@click.option("--digits", default=None, help="comma separated basis labels")
@click.option("--d", type=int, default=None, help="local dimension for --digits")
@_threads_option
@_json_errors
def fsgn_cmd(state_name, digits, d, threads):
    """The sign-projector overlap of a state with itself."""
    _apply_threads(threads)
    state = _state_from_flags(state_name, digits, d)
    _emit({"n": state.n, "d": state.d, "fsgn": f_sgn(state)})


@main.command("omega")
@click.option("--state", "state_name", default=None, help="named state")
@click.option("--digits", default=None, help="comma separated basis labels")
@click.option("--d", type=int, default=None, help="local dimension for --digits")
@click.option(
    "--backend",
    type=click.Choice(["qudit", "fermion"]),
    default="qudit",
    show_default=True,
)
@_threads_option
@_json_errors
def omega_cmd(state_name, digits, d, backend, threads):
    """The single-particle matrix of a state."""
    _apply_threads(threads)
    state = _state_from_flags(state_name, digits, d)
    omega = omega_map(state, state.n, state.d, backend=backend)
    _emit(omega.to_json_dict())


@main.command("sectors")
@click.option("--n", type=int, required=True)
@click.option("--d", type=int, required=True)
@_threads_option
@_json_errors
def sectors_cmd(n, d, threads):
    """Young diagrams, dimensions, and phase coefficients for (n, d)."""
    _apply_threads(threads)
    _emit(SectorTable(n, d).to_json_dict())


@main.command("design-test")
@click.option("--kind", type=click.Choice(["one", "two"]), required=True)
@click.option("--n", type=int, required=True)
@click.option("--d", type=int, required=True)
@click.option("--samples", type=int, default=1000, show_default=True)
@click.option("--depth", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--ensemble",
    type=click.Choice(["two_local_circuits", "haar_invariant", "permutation_twirl"]),
    default="two_local_circuits",
    show_default=True,
)
@click.option("--w-count", type=int, default=20, show_default=True)
@_threads_option
@_json_errors
def design_test_cmd(kind, n, d, samples, depth, seed, ensemble, w_count, threads):
    """Moment comparison of random circuits against exact references."""
    _apply_threads(threads)
    spec = EnsembleSpec(
        ensemble=ensemble, circuit_depth=depth, sample_count=samples, seed=seed
    )
    if kind == "one":
        a = np.zeros((d**n, d**n), dtype=np.complex128)
        a[0, 1] = 1.0
        a += a.conj().T
        report = one_design_test(n, d, a, spec)
    else:
        report = two_design_violation_test(n, d, spec, w_count=w_count)
    _emit(report.to_json_dict())


@main.command("lie-dim")
@click.option("--single-particle", is_flag=True, required=True)
@click.option("--n", type=int, required=True)
@_threads_option
@_json_errors
def lie_dim_cmd(single_particle, n, threads):
    """Dimension of the Lie algebra generated by traceless mode exchanges."""
    _apply_threads(threads)
    if not single_particle:
        raise ValueError("only --single-particle closures are supported")
    eye = np.eye(n)
    generators = [
        1j * (single_particle_swap(n, a, b) - eye)
        for a in range(1, n + 1)
        for b in range(a + 1, n + 1)
    ]
    _emit({"n": n, "dimension": lie_closure_dimension(generators)})


if __name__ == "__main__":
    main()
