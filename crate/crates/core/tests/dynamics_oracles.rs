use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use rydberg_fusion::dynamics::{
    default_steps, evolve_lindblad, evolve_pure, fidelity_at_times, fidelity_trace,
    jump_operators, EvolutionSpec, HamiltonianSource,
};
use rydberg_fusion::hamiltonian::{
    closed_form_coeffs, effective_basis, effective_hamiltonian, full_hamiltonian,
    ideal_gate_target, pair_layout, AtomParams, Subspace,
};
use rydberg_fusion::quantum::{fidelity, Basis, DensityMatrix, StateVector};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn expm_hermitian(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let e = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        e.eigenvalues.len(),
        e.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, -t * l)),
    );
    &e.eigenvectors * DMatrix::from_diagonal(&phases) * e.eigenvectors.adjoint()
}

fn basis_state(basis: &Basis, label: &str) -> StateVector {
    StateVector::basis_state(basis.clone(), &label.parse().unwrap()).unwrap()
}

#[test]
fn effective_rk4_matches_matrix_exponential() {
    let p = AtomParams::symmetric(1.0, 40.0, 80.0, 0.0).unwrap();
    let h = effective_hamiltonian(&p, Subspace::Full5).unwrap();
    let basis = effective_basis();
    for (input, frac) in [("00", 0.37), ("01", 1.0), ("11", 2.6)] {
        let t = frac * p.optimal_time();
        let psi = basis_state(&basis, input);
        let want = expm_hermitian(h.matrix(), t) * psi.amplitudes();
        let spec = EvolutionSpec::new(HamiltonianSource::Effective, p, t);
        let coarse = evolve_pure(&spec, &psi).unwrap();
        assert!((coarse.last().amplitudes() - &want).camax() < 1e-6, "{input} at {frac} t0");
        let fine = evolve_pure(&spec.with_steps(20_000), &psi).unwrap();
        assert!((fine.last().amplitudes() - &want).camax() < 1e-11, "{input} at {frac} t0");
    }
}

#[test]
fn closed_form_source_matches_effective_rk4() {
    let p = AtomParams::symmetric(1.0, 40.0, 80.0, 0.0).unwrap();
    let basis = effective_basis();
    let psi = basis_state(&basis, "10");
    let ideal = ideal_gate_target(&basis, "10").unwrap();
    let times: Vec<f64> = (0..=8).map(|k| k as f64 * p.optimal_time() / 4.0).collect();
    let rk = fidelity_at_times(HamiltonianSource::Effective, &p, &psi, &ideal, &times, Some(20_000))
        .unwrap();
    let cf = fidelity_at_times(HamiltonianSource::ClosedForm, &p, &psi, &ideal, &times, None).unwrap();
    for (a, b) in rk.iter().zip(&cf) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn extended_model_contains_the_five_state_block() {
    let p = AtomParams::fig2().with_gamma(0.0);
    let five = effective_hamiltonian(&p, Subspace::Full5).unwrap();
    let nine = effective_hamiltonian(&p, Subspace::Extended9).unwrap();
    assert_eq!(nine.dim(), 9);
    assert!(nine.hermiticity_residual() < 1e-15);
    let labels = ["00", "01", "10", "11", "rr"];
    for r in labels {
        for col in labels {
            let diff = five.element(r, col).unwrap() - nine.element(r, col).unwrap();
            assert!(diff.norm() < 1e-15, "{r},{col}");
        }
    }
    // no coupling between the ground/rr block and single excitations
    for g in labels {
        for s in ["0r", "1r", "r0", "r1"] {
            assert_eq!(nine.element(g, s).unwrap(), c(0.0, 0.0));
        }
    }
}

#[test]
fn effective_model_rejects_imbalanced_lasers() {
    let p = AtomParams::fig2().with_delta_omega(0.05);
    assert!(effective_hamiltonian(&p, Subspace::Full5).is_err());
    let psi = basis_state(&effective_basis(), "00");
    let spec = EvolutionSpec::new(HamiltonianSource::Effective, p.with_gamma(0.0), 10.0);
    assert!(evolve_pure(&spec, &psi).is_err());
}

#[test]
fn full_model_converges_under_step_doubling() {
    let p = AtomParams::fig2().with_gamma(0.0);
    let t0 = p.optimal_time();
    let n = default_steps(HamiltonianSource::Full, &p, t0);
    let basis: Basis = pair_layout().into();
    let psi = basis_state(&basis, "01");
    let coarse = evolve_pure(
        &EvolutionSpec::new(HamiltonianSource::Full, p, t0).with_steps(n),
        &psi,
    )
    .unwrap();
    let fine = evolve_pure(
        &EvolutionSpec::new(HamiltonianSource::Full, p, t0).with_steps(2 * n),
        &psi,
    )
    .unwrap();
    let gap = (coarse.last().amplitudes() - fine.last().amplitudes()).camax();
    assert!(gap < 1e-8, "gap {gap:e}");
}

#[test]
fn pure_full_evolution_is_unitary() {
    let p = AtomParams::new(1.1, 0.9, 38.0, 42.0, 80.0, 0.0).unwrap();
    let basis: Basis = pair_layout().into();
    let psi = StateVector::superposition(
        basis.clone(),
        &[(c(1.0, 0.0), "00"), (c(0.0, 1.0), "11"), (c(0.5, 0.5), "01")],
    )
    .unwrap();
    let spec = EvolutionSpec::new(HamiltonianSource::Full, p, 50.0).with_samples(10);
    let traj = evolve_pure(&spec, &psi).unwrap();
    for s in &traj.states {
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn decay_lowers_gate_fidelity() {
    let basis: Basis = pair_layout().into();
    let psi = basis_state(&basis, "00");
    let ideal = ideal_gate_target(&basis, "00").unwrap();
    let base = AtomParams::fig2();
    let t0 = base.optimal_time();
    let mut prev = f64::INFINITY;
    for g in [0.0, 2.5e-4, 5e-4, 1e-3, 2e-3] {
        let f = fidelity_at_times(
            HamiltonianSource::Full,
            &base.with_gamma(g),
            &psi,
            &ideal,
            &[t0],
            Some(40_000),
        )
        .unwrap()[0];
        assert!(f < prev, "gamma {g}: {f} not below {prev}");
        prev = f;
    }
}

#[test]
fn sampled_times_agree_with_trace() {
    let p = AtomParams::fig2();
    let t0 = p.optimal_time();
    let basis: Basis = pair_layout().into();
    let psi = basis_state(&basis, "11");
    let ideal = ideal_gate_target(&basis, "11").unwrap();
    let spec = EvolutionSpec::new(HamiltonianSource::Full, p, t0)
        .with_steps(40_000)
        .with_samples(8);
    let trace = fidelity_trace(&spec, &psi, &ideal).unwrap();
    let direct = fidelity_at_times(
        HamiltonianSource::Full,
        &p,
        &psi,
        &ideal,
        &trace.times,
        Some(40_000),
    )
    .unwrap();
    for (a, b) in trace.fidelities.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-9);
    }
    let (t_peak, f_peak) = trace.peak();
    assert!((t_peak - t0).abs() < 1e-12);
    assert_eq!(f_peak, *trace.fidelities.last().unwrap());
}

#[test]
fn decay_channels_sum_to_rydberg_projector() {
    let gamma = 0.3;
    let ops = jump_operators(gamma);
    assert_eq!(ops.len(), 4);
    let mut sum = DMatrix::<Complex64>::zeros(9, 9);
    for l in &ops {
        sum += l.matrix().adjoint() * l.matrix();
    }
    let layout = pair_layout();
    for i in 0..9 {
        let label = layout.label_of(i).to_string();
        let excited = label.chars().filter(|&ch| ch == 'r').count() as f64;
        for j in 0..9 {
            let want = if i == j { gamma * excited } else { 0.0 };
            assert!((sum[(i, j)] - c(want, 0.0)).norm() < 1e-15, "{label}");
        }
    }
}

#[test]
fn decay_empties_rydberg_population() {
    // with lasers off, |rr⟩ decays at rate 2γ and feeds the ground states
    let p = AtomParams::new(0.0, 0.0, 40.0, 40.0, 80.0, 0.05).unwrap();
    let basis: Basis = pair_layout().into();
    let rho0 = DensityMatrix::from_pure(&basis_state(&basis, "rr"));
    let t = 7.0;
    let spec = EvolutionSpec::new(HamiltonianSource::Full, p, t).with_steps(20_000);
    let rho = evolve_lindblad(&spec, &rho0).unwrap();
    let pop = rho.last().population("rr").unwrap();
    assert!((pop - (-2.0 * 0.05 * t).exp()).abs() < 1e-9);
    assert!((rho.last().trace() - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn full_hamiltonian_matches_hand_built_entries() {
    let p = AtomParams::new(1.3, 0.7, 35.0, 45.0, 80.0, 0.0).unwrap();
    let t = 0.77;
    let h = full_hamiltonian(&p, t);
    // laser a drives 0 <-> r and laser b drives 1 <-> r on either atom
    let ga = Complex64::from_polar(p.omega_a / 2.0, p.delta_a * t);
    let gb = Complex64::from_polar(p.omega_b / 2.0, p.delta_b * t);
    let rr = Complex64::from_polar(1.0, -p.delta_rr * t);
    let checks = [
        ("00", "r0", ga),
        ("01", "r1", ga),
        ("00", "0r", ga),
        ("01", "0r", gb),
        ("11", "1r", gb),
        ("10", "r0", gb),
        ("r0", "rr", ga * rr),
        ("r1", "rr", gb * rr),
        ("1r", "rr", gb * rr),
        ("00", "11", c(0.0, 0.0)),
        ("rr", "rr", c(0.0, 0.0)),
    ];
    for (r, col, want) in checks {
        assert!((h.element(r, col).unwrap() - want).norm() < 1e-14, "{r},{col}");
        assert!((h.element(col, r).unwrap() - want.conj()).norm() < 1e-14, "{col},{r}");
    }
}

#[test]
fn ideal_gate_coefficients() {
    let k = closed_form_coeffs(PI);
    assert!((k.a - c(0.5, -0.5)).norm() < 1e-15);
    assert!(k.b.norm() < 1e-15);
    assert!((k.c - c(0.5, 0.5)).norm() < 1e-15);
    assert!(k.d.norm() < 1e-15);
    let basis: Basis = pair_layout().into();
    let psi = basis_state(&basis, "01");
    let out = rydberg_fusion::hamiltonian::apply_gate_map(&k, &psi, [0, 1]).unwrap();
    let f = fidelity(&ideal_gate_target(&basis, "01").unwrap(), &out).unwrap();
    assert!((f - 1.0).abs() < 1e-15);
}
