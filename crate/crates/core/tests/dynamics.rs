use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use plasmodicke_core::geometry::{place_ring, DrudeModel, NanoSphere, OrientationMode, SystemConfig};
use plasmodicke_core::greens::ModeSelection;
use plasmodicke_core::lindblad::{
    build_liouvillian, build_liouvillian_on, build_operators, emission_trace, evolve, ideal_cascade, simulate, DensityOperator,
    DickeBasis, ElementSpace, EvolveOptions,
};
use plasmodicke_core::rates::{brightest_fixed_orientation, gamma_matrix_green, RateMatrices, Route};

fn rates(gamma: DMatrix<f64>) -> RateMatrices {
    let n = gamma.nrows();
    RateMatrices {
        gamma_rad: &gamma * 0.1,
        gamma,
        delta: DMatrix::zeros(n, n),
        omega0: 2.77,
        route: Route::Green,
        selection: ModeSelection::All,
        max_multipole: 25,
        gamma0_ev: 1.0,
    }
}

fn ring_rates() -> RateMatrices {
    let s = NanoSphere::new(15.0, DrudeModel::silver());
    let cfg = SystemConfig::new(s, place_ring(4, 20.0, OrientationMode::Azimuthal, &s, 2.77).unwrap());
    gamma_matrix_green(&cfg).unwrap()
}

#[test]
#[allow(clippy::needless_range_loop)]
fn ideal_master_equation_follows_the_cascade() {
    for n in 2..=6 {
        let gamma1 = 1.7;
        let r = rates(DMatrix::from_element(n, n, gamma1));
        let ops = build_operators(n).unwrap();
        let basis = DickeBasis::new(&ops);
        let rho0 = DensityOperator::all_excited(ops.dim());
        let l = build_liouvillian_on(&r, &ops, ElementSpace::for_state(&ops, &rho0.matrix)).unwrap();
        let grid: Vec<f64> = (0..31).map(|i| i as f64 * 0.1 / gamma1).collect();
        let traj = evolve(&l, &rho0, &grid, &EvolveOptions::default()).unwrap();
        let cascade = ideal_cascade(n, gamma1, &grid).unwrap();
        for i in 0..traj.len() {
            let rho = traj.density(i).matrix;
            for k in 0..=n {
                let v = basis.state(k);
                let p: f64 = (0..ops.dim()).flat_map(|a| (0..ops.dim()).map(move |b| (a, b))).map(|(a, b)| (rho[(a, b)] * v[a] * v[b]).re).sum();
                assert!((p - cascade.populations[i][k]).abs() < 1e-8, "N={n} t={} k={k}: {p} vs {}", grid[i], cascade.populations[i][k]);
            }
        }
    }
}

#[test]
fn emission_trace_identities() {
    let r = ring_rates();
    let grid: Vec<f64> = (0..41).map(|i| i as f64 * 0.05).collect();
    let sim = simulate(&r, &grid, &EvolveOptions::default()).unwrap();
    let tr = &sim.trace;
    assert!(tr.split_defect() < 1e-10);
    assert!((tr.w[0] - 4.0).abs() < 1e-12);
    assert!(tr.w.iter().all(|&w| w >= -1e-9));
    assert!(sim.trajectory.max_trace_drift < 1e-8);
    assert!(sim.trajectory.min_eigenvalue > -1e-8);
    for p in &tr.populations {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn ground_state_does_not_emit() {
    let r = ring_rates();
    let ops = build_operators(4).unwrap();
    let l = build_liouvillian(&r, &ops).unwrap();
    let rho0 = DensityOperator::basis_state(ops.dim(), ops.dim() - 1);
    let traj = evolve(&l, &rho0, &[0.0, 1.0], &EvolveOptions::default()).unwrap();
    let tr = emission_trace(&traj, &r, &ops, r.gamma1()).unwrap();
    assert!(tr.w.iter().all(|&w| w == 0.0));
}

#[test]
fn emitted_quanta_match_initial_excitation() {
    let r = ring_rates();
    let grid: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01).collect();
    let sim = simulate(&r, &grid, &EvolveOptions::default()).unwrap();
    let last = sim.trace.populations.last().unwrap();
    let remaining: f64 = last.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    assert!((sim.trace.emitted() + remaining - 4.0).abs() < 1e-3);
}

#[test]
fn brightest_single_excitation_matches_classical_rate() {
    let r = ring_rates();
    let n = r.n_emitters();
    let ops = build_operators(n).unwrap();
    let l = build_liouvillian(&r, &ops).unwrap();
    let eig = SymmetricEigen::new(r.gamma.clone());
    let top = eig.eigenvalues.imax();
    let mut psi = vec![Complex64::new(0.0, 0.0); ops.dim()];
    for (site, &idx) in ops.sector(1).iter().enumerate() {
        // sector(1) lists site 0 first
        assert!(ops.is_excited(idx, site));
        psi[idx] = Complex64::new(eig.eigenvectors[(site, top)], 0.0);
    }
    let rho = DensityOperator::pure(&psi).matrix;
    let drho = l.apply(&rho).unwrap();
    let loss: f64 = -ops.sector(1).iter().map(|&i| drho[(i, i)].re).sum::<f64>();
    let classical = brightest_fixed_orientation(&r);
    assert!((loss - classical).abs() < 1e-8 * classical);
}

#[test]
fn rank_one_rates_equal_single_collapse_form() {
    // Γ_jk = s_j s_k √(Γ_j Γ_k) with one collapse operator C = Σ s_j √Γ_j σ₋^(j)
    let g: [f64; 3] = [1.0, 2.5, 0.7];
    let s = [1.0, -1.0, 1.0];
    let n = g.len();
    let gamma = DMatrix::from_fn(n, n, |j, k| s[j] * s[k] * (g[j] * g[k]).sqrt());
    let ops = build_operators(n).unwrap();
    let l = build_liouvillian(&rates(gamma), &ops).unwrap().matrix.to_dense();
    let mut c = DMatrix::<Complex64>::zeros(ops.dim(), ops.dim());
    for j in 0..n {
        c += ops.lowering(j).to_dense() * Complex64::new(s[j] * g[j].sqrt(), 0.0);
    }
    let d = ops.dim();
    let id = DMatrix::<Complex64>::identity(d, d);
    let cdc = c.adjoint() * &c * Complex64::new(0.5, 0.0);
    let expect = c.kronecker(&c.conjugate()) - cdc.kronecker(&id) - id.kronecker(&cdc.transpose());
    assert!((l - expect).camax() < 1e-10);
}
