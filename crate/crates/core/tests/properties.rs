use nalgebra::DMatrix;
use proptest::prelude::*;
use spectral_scope::estimator::{deconvolve_sigma, nu_sequence};
use spectral_scope::graph::{ring, GraphMatrixKind};
use spectral_scope::oracle::{make_jordan_case, match_values, observable_partition, JordanBlockSpec};
use spectral_scope::*;

fn square(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn unit_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n)
}

/// Three well separated real modes with random positions and signs.
fn three_modes() -> impl Strategy<Value = [f64; 3]> {
    (0.2f64..0.5, 0.55f64..0.8, -0.9f64..-0.6).prop_map(|(a, b, c)| [a, b, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_is_linear_in_initial_condition(m in square(4), a in unit_vec(4), b in unit_vec(4), c in unit_vec(4)) {
        let g = GraphMatrix::from_matrix(m).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ya = simulate_dt(&g, &ObservationSetup::new(a, c.clone()), 8).unwrap();
        let yb = simulate_dt(&g, &ObservationSetup::new(b, c.clone()), 8).unwrap();
        let ys = simulate_dt(&g, &ObservationSetup::new(sum, c), 8).unwrap();
        for k in 0..8 {
            let want = ya.values[k] + yb.values[k];
            prop_assert!((ys.values[k] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn estimate_is_scale_invariant(modes in three_modes(), scale in 1e-3f64..1e3) {
        let y: Vec<f64> = (0..6).map(|k| modes.iter().map(|l| l.powi(k)).sum()).collect();
        let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let opts = EstimatorOptions::default();
        let a = estimate_dt_spectrum(&OutputSequence::discrete(y), &opts).unwrap();
        let b = estimate_dt_spectrum(&OutputSequence::discrete(scaled), &opts).unwrap();
        let r = match_values(&a.expanded(), &b.expanded());
        prop_assert!(r.is_exact_within(1e-9), "{:?}", r);
    }

    #[test]
    fn laplacian_annihilates_ones(n in 3usize..12, m in 1usize..3, seed in any::<u64>()) {
        let g = preferential_attachment(n, m.min(n - 1), seed).unwrap();
        let g = assign_uniform_weights(&g, 0.1, 1.0, seed).unwrap();
        let l = build_matrix(&g, GraphMatrixKind::Laplacian).unwrap();
        for i in 0..n {
            prop_assert!(l.matrix.row(i).sum().abs() < 1e-12);
        }
        let rw = build_matrix(&g, GraphMatrixKind::NormalizedLaplacian).unwrap();
        for i in 0..n {
            prop_assert!((rw.matrix.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn preferential_attachment_edge_count(n in 2usize..30, m in 1usize..4, seed in any::<u64>()) {
        prop_assume!(m <= n);
        let g = preferential_attachment(n, m, seed).unwrap();
        prop_assert_eq!(g.edges().len(), m * (m - 1) / 2 + m * (n - m));
        prop_assert_eq!(g, preferential_attachment(n, m, seed).unwrap());
    }

    #[test]
    fn networked_simulation_matches_kronecker_form(m in square(3), a in square(2), x0 in unit_vec(3), c in unit_vec(3), beta in unit_vec(2), gamma in unit_vec(2)) {
        let g = GraphMatrix::from_matrix(m.clone()).unwrap();
        let node = NodeDynamics::new(a.clone(), beta.clone(), gamma.clone()).unwrap();
        let y = simulate_dt_networked(&g, &node, &ObservationSetup::new(x0.clone(), c.clone()), 7).unwrap();
        let big = DMatrix::<f64>::identity(3, 3).kronecker(&a) + m.kronecker(&DMatrix::<f64>::identity(2, 2));
        let out = nalgebra::DVector::from_vec(c).kronecker(&nalgebra::DVector::from_vec(gamma));
        let mut state = nalgebra::DVector::from_vec(x0).kronecker(&nalgebra::DVector::from_vec(beta));
        for k in 0..7 {
            let want = out.dot(&state);
            prop_assert!((y.values[k] - want).abs() <= 1e-12 * want.abs().max(1.0));
            state = &big * state;
        }
    }

    #[test]
    fn continuous_samples_equal_discrete_run_of_propagator(m in square(4), x0 in unit_vec(4), c in unit_vec(4), tau in 0.05f64..1.0) {
        let g = GraphMatrix::from_matrix(m.clone()).unwrap();
        let setup = ObservationSetup::new(x0, c);
        let ct = simulate_ct_sampled(&g, &setup, tau, 6).unwrap();
        let step = GraphMatrix::from_matrix(matrix_exponential(&m, tau).unwrap()).unwrap();
        let dt = simulate_dt(&step, &setup, 6).unwrap();
        prop_assert_eq!(ct.values, dt.values);
    }

    #[test]
    fn modal_expansion_reproduces_output(modes in three_modes(), x0 in unit_vec(3), c in unit_vec(3), seed in 0u64..1000) {
        let blocks: Vec<JordanBlockSpec> = modes.iter().map(|&v| JordanBlockSpec::real(v, 1, 1)).collect();
        let case = make_jordan_case(&blocks, seed).unwrap();
        let oracle = observable_partition(&case.g, &c, &x0).unwrap();
        let y = simulate_dt(&case.g, &ObservationSetup::new(x0, c), 6).unwrap();
        for (k, v) in y.values.iter().enumerate() {
            prop_assert!((oracle.modal_output(k).unwrap() - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn prescale_on_and_off_agree(modes in three_modes(), weights in prop::collection::vec(0.5f64..2.0, 3)) {
        let y: Vec<f64> = (0..6)
            .map(|k| modes.iter().zip(&weights).map(|(l, w)| w * (3.0 * l).powi(k)).sum())
            .collect();
        let seq = OutputSequence::discrete(y);
        let on = estimate_dt_spectrum(&seq, &EstimatorOptions { prescale: Prescale::On, ..Default::default() }).unwrap();
        let off = estimate_dt_spectrum(&seq, &EstimatorOptions { prescale: Prescale::Off, ..Default::default() }).unwrap();
        let r = match_values(&on.expanded(), &off.expanded());
        prop_assert!(r.is_exact_within(1e-8), "{:?}", r);
    }

    #[test]
    fn trivial_node_deconvolution_is_identity(y in prop::collection::vec(-1e3f64..1e3, 1..24)) {
        let seq = OutputSequence::discrete(y.clone());
        let nu = nu_sequence(&NodeDynamics::single_integrator(), TimeMode::DiscreteTime, y.len()).unwrap();
        prop_assert_eq!(deconvolve_sigma(&seq, &nu).unwrap().values, y);
    }

    #[test]
    fn estimated_roots_are_conjugate_closed(m in square(5), x0 in unit_vec(5), c in unit_vec(5)) {
        let g = GraphMatrix::from_matrix(m).unwrap();
        let y = simulate_dt(&g, &ObservationSetup::new(x0, c), 10).unwrap();
        let est = estimate_dt_spectrum(&y, &EstimatorOptions::default()).unwrap();
        let multiplicity: usize = est.roots.iter().map(|r| r.multiplicity).sum();
        prop_assert_eq!(multiplicity, est.diagnostics.rank);
        if !est.warnings.contains(&Warning::UnpairedConjugate) {
            for r in &est.roots {
                let partner = est.roots.iter().find(|o| o.value == r.value.conj() && o.multiplicity == r.multiplicity);
                prop_assert!(partner.is_some(), "{:?}", est.roots);
            }
        }
    }

    #[test]
    fn matching_ignores_estimate_order(values in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8), shift in 0usize..8, noise in 0.0f64..1e-3) {
        let truth: Vec<Complex64> = values.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let est: Vec<Complex64> = truth.iter().map(|z| z + noise).collect();
        let mut rotated = est.clone();
        rotated.rotate_left(shift % est.len());
        let a = match_values(&truth, &est);
        let b = match_values(&truth, &rotated);
        prop_assert!((a.max_error - b.max_error).abs() < 1e-15);
        prop_assert!((a.mean_error - b.mean_error).abs() < 1e-12);
    }

    #[test]
    fn online_prefix_gives_batch_spectrum(modes in three_modes(), x0 in unit_vec(3), seed in 0u64..1000) {
        let blocks: Vec<JordanBlockSpec> = modes.iter().map(|&v| JordanBlockSpec::real(v, 1, 1)).collect();
        let case = make_jordan_case(&blocks, seed).unwrap();
        let y = simulate_dt(&case.g, &ObservationSetup::new(x0, case.setup.c.clone()), 6).unwrap();
        let opts = EstimatorOptions::default();
        let batch = estimate_dt_spectrum(&y, &opts).unwrap();
        let (online, info) = estimate_dt_spectrum_online(y.values.clone(), Some(3), &opts).unwrap();
        prop_assert!(info.consumed <= 6);
        prop_assert!(match_values(&batch.expanded(), &online.expanded()).is_exact_within(1e-10));
    }

    #[test]
    fn directed_ring_out_degree_one(n in 2usize..40) {
        let g = ring(n, true).unwrap();
        let mut out = vec![0; n];
        for e in g.edges() {
            out[e.source] += 1;
        }
        prop_assert!(out.iter().all(|&d| d == 1));
    }
}
