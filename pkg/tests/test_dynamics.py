"""Evolution, circuits, schedules, and the Hamiltonian dense/JSON forms."""

import numpy as np
import pytest

from permsym.dynamics import (
    EvolutionConfig,
    HamiltonianTerm,
    ModeError,
    Schedule,
    SymmetricHamiltonian,
    evolve,
    hamiltonian_from_json_dict,
    hamiltonian_matrix,
    hamiltonian_to_json_dict,
    run_circuit,
)
from permsym.states import (
    DimensionError,
    PermutationWord,
    ResourceError,
    StateVector,
    apply_local_unitary_everywhere,
    apply_permutation,
    apply_swap_exponential,
    singlet_qutrits,
    wedge_state,
)

from conftest import random_special_unitary, random_state


def energy_probe(h):
    return lambda t, s: s.inner(h.apply_at(t, s)).real


def norm_probe(t, s):
    return s.norm()


def fig_initial_state():
    """(|0> ^ |1> ^ |2>) x (|1> ^ |2>) x |0> on six qutrits."""
    return singlet_qutrits().tensor(wedge_state(3, 2)).tensor(
        StateVector.basis_string(3, [0])
    )


class TestSchedule:
    def test_constant(self):
        s = Schedule.constant(2.5)
        assert s.value_at(0.0) == 2.5
        assert s.value_at(1e6) == 2.5

    def test_window_and_zero_before_start(self):
        s = Schedule.window(1.0, 3.0, -0.5)
        assert s.value_at(0.5) == 0.0
        assert s.value_at(1.0) == -0.5
        assert s.value_at(2.999) == -0.5
        assert s.value_at(3.0) == 0.0

    def test_breakpoints_must_increase(self):
        with pytest.raises(ValueError):
            Schedule(((1.0, 1.0), (1.0, 2.0)))
        with pytest.raises(ValueError):
            Schedule(((2.0, 1.0), (1.0, 2.0)))


class TestHamiltonianStructure:
    def test_identity_term_rejected(self):
        term = HamiltonianTerm(Schedule.constant(1.0), PermutationWord.identity(3))
        with pytest.raises(ValueError):
            SymmetricHamiltonian(3, 2, [term])

    def test_non_hermitian_rejected(self):
        term = HamiltonianTerm(
            Schedule.constant(1.0j), PermutationWord.transposition(2, 1, 2)
        )
        with pytest.raises(ModeError):
            SymmetricHamiltonian(2, 2, [term])

    def test_complex_coefficients_in_inverse_pairs_accepted(self):
        cyc = PermutationWord.from_cycles(3, [[1, 2, 3]])
        terms = [
            HamiltonianTerm(Schedule.constant(0.5 + 0.25j), cyc),
            HamiltonianTerm(Schedule.constant(0.5 - 0.25j), cyc.inverse()),
        ]
        h = SymmetricHamiltonian(3, 2, terms)
        m = hamiltonian_matrix(h, 0.0)
        assert np.linalg.norm(m - m.conj().T) < 1e-12

    def test_single_swap_term_matrix(self):
        h = SymmetricHamiltonian(
            2, 2, [HamiltonianTerm(Schedule.constant(1.0), PermutationWord.transposition(2, 1, 2))]
        )
        swap = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
        )
        assert np.allclose(hamiltonian_matrix(h, 0.0), swap)

    def test_both_ordered_pairs_give_twice_swap(self):
        # P_rs summed over ordered pairs r != s counts each swap twice
        t12 = PermutationWord.transposition(2, 1, 2)
        h = SymmetricHamiltonian(
            2,
            2,
            [
                HamiltonianTerm(Schedule.constant(1.0), t12),
                HamiltonianTerm(Schedule.constant(1.0), t12),
            ],
        )
        swap = hamiltonian_matrix(
            SymmetricHamiltonian(2, 2, [HamiltonianTerm(Schedule.constant(1.0), t12)]), 0.0
        )
        assert np.allclose(hamiltonian_matrix(h, 0.0), 2 * swap)

    def test_random_coefficients_match_column_oracle(self, rng):
        n, d = 3, 3
        words = [
            PermutationWord.transposition(n, 1, 2),
            PermutationWord.from_cycles(n, [[1, 2, 3]]),
            PermutationWord.from_cycles(n, [[1, 3, 2]]),
        ]
        coeffs = [rng.uniform(-1, 1), 0.3 + 0.1j, 0.3 - 0.1j]
        h = SymmetricHamiltonian(
            n, d, [HamiltonianTerm(Schedule.constant(c), w) for c, w in zip(coeffs, words)]
        )
        m = hamiltonian_matrix(h, 0.0)
        dim = d**n
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = 1.0
            col = sum(
                c * apply_permutation(StateVector(n, d, e), w).amps
                for c, w in zip(coeffs, words)
            )
            assert np.allclose(m[:, k], col, atol=1e-12)

    def test_schedule_switching_changes_matrix(self):
        t12 = PermutationWord.transposition(2, 1, 2)
        h = SymmetricHamiltonian(
            2, 2, [HamiltonianTerm(Schedule.window(1.0, 2.0, 1.0), t12)]
        )
        assert np.allclose(hamiltonian_matrix(h, 0.5), 0.0)
        assert not np.allclose(hamiltonian_matrix(h, 1.5), 0.0)
        assert np.allclose(hamiltonian_matrix(h, 2.5), 0.0)

    def test_json_round_trip(self):
        n = 4
        terms = [
            HamiltonianTerm(Schedule.window(0.0, 2.0, -0.7), PermutationWord.transposition(n, 1, 3)),
            HamiltonianTerm(Schedule.constant(0.2 + 0.1j), PermutationWord.from_cycles(n, [[1, 2, 3, 4]])),
            HamiltonianTerm(Schedule.constant(0.2 - 0.1j), PermutationWord.from_cycles(n, [[4, 3, 2, 1]])),
        ]
        h = SymmetricHamiltonian(n, 2, terms)
        h2 = hamiltonian_from_json_dict(hamiltonian_to_json_dict(h))
        assert h2.n == h.n and h2.d == h.d
        for t in (0.0, 1.0, 3.0):
            assert np.allclose(hamiltonian_matrix(h2, t), hamiltonian_matrix(h, t))


class TestEvolveBasics:
    def test_zero_hamiltonian_leaves_state_alone(self, rng):
        state = random_state(3, 2, rng)
        h = SymmetricHamiltonian(3, 2, [])
        cfg = EvolutionConfig(integrator="exact_step", dt=0.1, t_final=1.0)
        series = evolve(state, h, cfg, probes=[("norm", norm_probe)])
        assert np.allclose(series.column("norm"), 1.0, atol=1e-12)
        assert np.allclose(series.final_state.amps, state.amps, atol=1e-12)

    @pytest.mark.parametrize("integrator", ["exact_step", "rk4"])
    def test_swap_hamiltonian_at_t_pi_gives_minus_state(self, integrator):
        # P squares to the identity, so exp(-i pi P) = -1 on everything
        state = StateVector.basis_string(2, [0, 1])
        h = SymmetricHamiltonian(
            2, 2, [HamiltonianTerm(Schedule.constant(1.0), PermutationWord.transposition(2, 1, 2))]
        )
        cfg = EvolutionConfig(integrator=integrator, dt=1e-3, t_final=np.pi)
        series = evolve(state, h, cfg, probes=[("norm", norm_probe)])
        assert np.allclose(series.final_state.amps, -state.amps, atol=1e-8)
        assert np.allclose(series.column("norm"), 1.0, atol=1e-9)

    def test_window_switches_evolution_off(self):
        # on-window of length pi gives the -1 propagator, then nothing happens
        state = StateVector.basis_string(2, [0, 1])
        h = SymmetricHamiltonian(
            2,
            2,
            [HamiltonianTerm(Schedule.window(0.0, np.pi, 1.0), PermutationWord.transposition(2, 1, 2))],
        )
        cfg = EvolutionConfig(integrator="exact_step", dt=0.01, t_final=2 * np.pi)
        series = evolve(state, h, cfg)
        assert np.allclose(series.final_state.amps, -state.amps, atol=1e-9)

    def test_record_grid_and_csv(self, rng, tmp_path):
        state = random_state(2, 2, rng)
        h = SymmetricHamiltonian(
            2, 2, [HamiltonianTerm(Schedule.constant(0.3), PermutationWord.transposition(2, 1, 2))]
        )
        cfg = EvolutionConfig(integrator="exact_step", dt=0.125, t_final=1.0, record_stride=2)
        series = evolve(state, h, cfg, probes=[("norm", norm_probe), ("energy", energy_probe(h))])
        assert series.times[0] == 0.0
        assert series.times[-1] == 1.0
        assert np.allclose(np.diff(series.times), 0.25)

        path = tmp_path / "series.csv"
        series.to_csv(path)
        text = path.read_text()
        lines = text.split("\n")
        assert lines[0] == "t,norm,energy"
        assert "\r" not in text
        for k, line in enumerate(lines[1:-1]):
            cells = line.split(",")
            assert float(cells[0]) == series.times[k]
            assert float(cells[1]) == series.column("norm")[k]
            assert float(cells[2]) == series.column("energy")[k]

    def test_register_mismatch(self, rng):
        state = random_state(3, 2, rng)
        h = SymmetricHamiltonian(2, 2, [])
        with pytest.raises(DimensionError):
            evolve(state, h, EvolutionConfig(t_final=0.1))

    def test_exact_step_beyond_cap_raises(self, rng):
        n, d = 9, 3
        h = SymmetricHamiltonian.nearest_neighbor_chain(n, d)
        state = wedge_state(d, 3, tail=6)
        with pytest.raises(ResourceError):
            evolve(state, h, EvolutionConfig(integrator="exact_step", dt=0.1, t_final=0.2))

    def test_rk4_works_beyond_dense_cap(self):
        n, d = 9, 3
        h = SymmetricHamiltonian.nearest_neighbor_chain(n, d)
        state = wedge_state(d, 3, tail=6)
        cfg = EvolutionConfig(integrator="rk4", dt=1e-2, t_final=0.1)
        series = evolve(state, h, cfg, probes=[("energy", energy_probe(h)), ("norm", norm_probe)])
        energies = series.column("energy")
        assert np.allclose(energies, energies[0], atol=1e-8)
        assert np.allclose(series.column("norm"), 1.0, atol=1e-10)


class TestCircuits:
    def test_empty_circuit(self, rng):
        state = random_state(3, 3, rng)
        out = run_circuit(state, [])
        assert np.allclose(out.amps, state.amps)

    def test_swap_network_moves_wedge_with_cubed_phase(self):
        # three theta = pi/2 gates contribute i each; the permutation part
        # carries the antisymmetric block from sites 1-3 to sites 4-6
        state = singlet_qutrits(tail=3)
        out = run_circuit(state, [(1, 4, np.pi / 2), (2, 5, np.pi / 2), (3, 6, np.pi / 2)])
        target = StateVector.basis_string(3, [0, 0, 0]).tensor(singlet_qutrits())
        assert np.allclose(out.amps, 1j**3 * target.amps, atol=1e-12)

    def test_reversed_conjugate_circuit_inverts(self, rng):
        state = random_state(4, 3, rng)
        gates = [
            (int(a), int(b), float(rng.uniform(-np.pi, np.pi)))
            for a, b in rng.integers(1, 5, size=(20, 2))
            if a != b
        ]
        forward = run_circuit(state, gates)
        back = run_circuit(forward, [(a, b, -t) for a, b, t in reversed(gates)])
        assert np.linalg.norm(back.amps - state.amps) < 1e-10

    def test_site_out_of_range(self, rng):
        state = random_state(3, 2, rng)
        with pytest.raises(DimensionError):
            run_circuit(state, [(1, 7, 0.3)])


class TestConservation:
    @pytest.mark.parametrize("integrator", ["exact_step", "rk4"])
    def test_energy_constant_for_time_independent_h(self, integrator, rng):
        n, d = 4, 3
        h = SymmetricHamiltonian.random_all_pairs(n, d, rng)
        state = random_state(n, d, rng)
        cfg = EvolutionConfig(integrator=integrator, dt=1e-3, t_final=1.0, record_stride=100)
        series = evolve(state, h, cfg, probes=[("energy", energy_probe(h))])
        energies = series.column("energy")
        assert np.max(np.abs(energies - energies[0])) < 1e-8

    def test_collective_rotation_overlaps_conserved(self, rng):
        # <psi| U^(x n) |psi> is a constant of motion for every U at once
        n, d = 4, 3
        h = SymmetricHamiltonian.random_all_pairs(n, d, rng)
        state = random_state(n, d, rng)
        unitaries = [random_special_unitary(d, rng) for _ in range(20)]
        before = [state.inner(apply_local_unitary_everywhere(state, u)) for u in unitaries]
        cfg = EvolutionConfig(integrator="exact_step", dt=0.05, t_final=2.0)
        final = evolve(state, h, cfg).final_state
        after = [final.inner(apply_local_unitary_everywhere(final, u)) for u in unitaries]
        assert max(abs(a - b) for a, b in zip(before, after)) < 1e-7

    def test_integrators_agree_on_six_qutrit_benchmark(self, rng):
        h = SymmetricHamiltonian.random_all_pairs(6, 3, rng)
        state = fig_initial_state()
        exact = evolve(state, h, EvolutionConfig("exact_step", dt=0.05, t_final=1.0)).final_state
        stepped = evolve(state, h, EvolutionConfig("rk4", dt=1e-3, t_final=1.0)).final_state
        assert np.linalg.norm(exact.amps - stepped.amps) < 1e-6

    def test_first_order_trotter_matches_evolution(self, rng):
        n, d, dt, t_final = 6, 3, 1e-3, 0.1
        couplings = {
            (i, j): float(rng.uniform(-0.5, 0.5))
            for i in range(1, n + 1)
            for j in range(i + 1, n + 1)
        }
        h = SymmetricHamiltonian.two_local(n, d, couplings)
        state = fig_initial_state()
        exact = evolve(state, h, EvolutionConfig("exact_step", dt=dt, t_final=t_final)).final_state

        # exp(-i h dt P) = swap exponential at theta = -h dt
        step_gates = [(i, j, -couplings[(i, j)] * dt) for (i, j) in sorted(couplings)]
        trotter = state
        for _ in range(round(t_final / dt)):
            trotter = run_circuit(trotter, step_gates)
        assert np.linalg.norm(exact.amps - trotter.amps) < 1e-4
