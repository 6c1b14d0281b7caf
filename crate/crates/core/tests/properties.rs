use std::sync::Arc;

use proptest::prelude::*;

use fracvisco::exec::Exec;
use fracvisco::fem::{Element, ErrorNorms, FeSpace, Material};
use fracvisco::fracquad::{combine_history, qn_apply, FracWeights};
use fracvisco::linalg::{CgOptions, CsrMatrix, DirichletConstraints};
use fracvisco::manufactured::{ManufacturedCase, PowerSeries};
use fracvisco::mesh::Mesh;
use fracvisco::solver::{LinearScheme, ProblemSetup};
use fracvisco::study::{rate_rows, rates_csv, CellResult, Mode, StudyConfig};

fn random_spd(n: usize, seed: &[f64]) -> CsrMatrix {
    // Tridiagonal, diagonally dominant.
    let mut t = Vec::new();
    for i in 0..n {
        let off = seed[i % seed.len()] * 0.4;
        t.push((i, i, 1.0 + off.abs() * 2.0 + 0.1));
        if i + 1 < n {
            t.push((i, i + 1, off));
            t.push((i + 1, i, off));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mesh_area_conformity_and_width(n in 1usize..=64) {
        let mesh = Mesh::unit_square(n).unwrap();
        prop_assert_eq!(mesh.n_triangles(), 2 * n * n);
        prop_assert_eq!(mesh.n_vertices(), (n + 1) * (n + 1));
        prop_assert!((mesh.area() - 1.0).abs() < 1e-12);
        prop_assert!(mesh.check_conforming().is_ok());
        for t in 0..mesh.n_triangles() {
            prop_assert!(mesh.signed_area(t) > 0.0);
        }
        let hmax = (0..mesh.n_triangles()).map(|t| mesh.diameter(t)).fold(0.0, f64::max);
        let fine = Mesh::unit_square(2 * n).unwrap();
        let hfine = (0..fine.n_triangles()).map(|t| fine.diameter(t)).fold(0.0, f64::max);
        prop_assert!((hmax - 2.0 * hfine).abs() < 1e-12);
    }

    #[test]
    fn basis_partition_of_unity(
        degree in 1usize..=2,
        corners in proptest::array::uniform6(-2.0f64..2.0),
        l in proptest::array::uniform3(0.01f64..1.0),
    ) {
        let c = [[corners[0], corners[1]], [corners[2], corners[3]], [corners[4], corners[5]]];
        let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
        prop_assume!(det.abs() > 1e-2);
        let s: f64 = l.iter().sum();
        let l = [l[0] / s, l[1] / s, l[2] / s];
        let el = Element::new(c, degree);
        let mut phi = [0.0; 6];
        let mut grad = [[0.0; 2]; 6];
        el.shape(l, &mut phi);
        el.shape_gradients(l, &mut grad);
        let n = el.n_local();
        prop_assert!((phi[..n].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let scale = grad[..n].iter().map(|g| g[0].abs() + g[1].abs()).sum::<f64>();
        for d in 0..2 {
            prop_assert!(grad[..n].iter().map(|g| g[d]).sum::<f64>().abs() < 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn weights_depend_on_lag_only(alpha in 0.05f64..0.95, steps in 3usize..80) {
        let w = FracWeights::new(alpha, 1.0, steps).unwrap();
        for n in 1..steps {
            prop_assert_eq!(w.weight(n, n).unwrap(), 1.0);
            for i in 1..n {
                prop_assert_eq!(w.weight(n, i).unwrap(), w.weight(n + 1, i + 1).unwrap());
                prop_assert!(w.weight(n, i).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn history_coefficients_match_direct_sums(
        alpha in 0.05f64..0.95,
        steps in 2usize..30,
        seed in proptest::collection::vec(-3.0f64..3.0, 4),
    ) {
        let w = FracWeights::new(alpha, 1.0, steps).unwrap();
        let history: Vec<Vec<f64>> = (0..=steps)
            .map(|i| seed.iter().enumerate().map(|(j, s)| s * (1.0 + i as f64).powf(0.3 * j as f64)).collect())
            .collect();
        for n in 0..steps {
            let coefs = w.step_history_coefficients(n);
            let tail = combine_history(Exec::Sequential, &coefs, &history[..=n]).unwrap();
            let direct_next = qn_apply(&w, &history[..=n + 1]).unwrap();
            let direct_now = qn_apply(&w, &history[..=n]).unwrap();
            for j in 0..seed.len() {
                let split = w.scale() * (history[n + 1][j] + tail[j]);
                let direct = direct_next[j] + direct_now[j];
                prop_assert!((split - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn memory_integral_matches_quadrature(
        alpha in 0.1f64..0.9,
        t in 0.05f64..2.0,
        c in proptest::array::uniform2(-2.0f64..2.0),
        p in 1.0f64..4.0,
    ) {
        let g = PowerSeries::new(vec![(c[0], 1.0), (c[1], p)]).unwrap();
        // Substituting s = t - u^(1/(1-alpha)) removes the endpoint singularity.
        let beta = 1.0 - alpha;
        let umax = t.powf(beta);
        let integrand = |u: f64| {
            let s = t - u.powf(1.0 / beta);
            g.value(s.max(0.0)) / beta
        };
        let gamma = lanczos_gamma(beta);
        let numeric = simpson(integrand, 0.0, umax, 2000) / gamma;
        let exact = g.fractional_integral(alpha, t);
        prop_assert!((numeric - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{numeric} vs {exact}");
    }

    #[test]
    fn scheme_is_linear(
        alpha in 0.1f64..0.9,
        seed in proptest::collection::vec(-1.0f64..1.0, 5..12),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let n = 12;
        let mass = random_spd(n, &seed);
        let stiffness = random_spd(n, &seed.iter().rev().copied().collect::<Vec<_>>());
        let constraints = DirichletConstraints::new(n, &[(0, 0.0)]).unwrap();
        let weights = FracWeights::new(alpha, 1.0, 6).unwrap();
        let scheme = LinearScheme::new(mass, stiffness, constraints, weights, Exec::Sequential).unwrap();
        let x0: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { seed[i % seed.len()] }).collect();
        let y0: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { (i as f64).cos() }).collect();
        let fx = |k: usize| -> Vec<f64> { (0..n).map(|i| ((i + k) as f64).sin()).collect() };
        let fy = |k: usize| -> Vec<f64> { (0..n).map(|i| (k as f64) * seed[(i + 1) % seed.len()]).collect() };
        let cg = CgOptions { tolerance: 1e-14, ..CgOptions::default() };
        let rx = scheme.run(x0.clone(), |k| Ok(fx(k)), &cg).unwrap();
        let ry = scheme.run(y0.clone(), |k| Ok(fy(k)), &cg).unwrap();
        let z0: Vec<f64> = x0.iter().zip(&y0).map(|(x, y)| a * x + b * y).collect();
        let rz = scheme
            .run(z0, |k| Ok(fx(k).iter().zip(fy(k)).map(|(x, y)| a * x + b * y).collect()), &cg)
            .unwrap();
        for ((x, y), z) in rx.steps.iter().zip(&ry.steps).zip(&rz.steps) {
            for i in 0..n {
                let combo = a * x[i] + b * y[i];
                prop_assert!((z[i] - combo).abs() < 1e-9 * (1.0 + combo.abs()));
            }
        }
    }

    #[test]
    fn rates_recompute_from_csv(
        errors in proptest::collection::vec((1e-8f64..1.0, 1e-8f64..1.0, 1e-8f64..1.0), 2..6),
        precision in proptest::option::of(2usize..8),
    ) {
        let results: Vec<CellResult> = errors
            .iter()
            .enumerate()
            .map(|(i, &(l2, h1, energy))| CellResult {
                cells: 2 << i,
                steps: 2 << i,
                errors: ErrorNorms { l2, h1, energy },
                reference: ErrorNorms { l2: 1.0, h1: 1.0, energy: 1.0 },
                runtime_s: 0.0,
                cg_iterations: 0,
            })
            .collect();
        let mut config = StudyConfig::for_mode(Mode::Diagonal);
        config.precision = precision;
        config.reproducible = true;
        let rows = rate_rows(&results, 1.0, precision);
        let csv = rates_csv(&config, &rows);
        let table: Vec<Vec<f64>> = csv
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
            .collect();
        prop_assert_eq!(table.len(), results.len());
        for w in table.windows(2) {
            for col in 2..5 {
                let recomputed = (w[0][col] / w[1][col]).ln() / (w[0][0] / w[1][0]).ln();
                prop_assert!((recomputed - w[1][col + 3]).abs() < 1e-12, "{} vs {}", recomputed, w[1][col + 3]);
            }
        }
    }
}

/// Lanczos gamma for the quadrature oracle, independent of the crate's.
fn lanczos_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * lanczos_gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Step residual of interpolated exact samples; shrinks under joint refinement.
fn consistency_residual(case: &ManufacturedCase, cells: usize, steps: usize) -> f64 {
    let space = Arc::new(FeSpace::unit_square(cells, 2).unwrap());
    let setup = ProblemSetup::new(
        space.clone(),
        case.material,
        1.0,
        steps,
        case.body_force(),
        Arc::new(case.at_time(0.0)),
    );
    let scheme = setup.scheme().unwrap();
    let dt = setup.dt();
    let history: Vec<Vec<f64>> = (0..=steps)
        .map(|n| space.interpolate(|p| case.exact_velocity(p, n as f64 * dt)))
        .collect();
    let (now, next) = (setup.load(dt * (steps - 1) as f64).unwrap(), setup.load(1.0).unwrap());
    scheme.residual(&history, &now, &next).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn manufactured_samples_are_consistent(alpha in 0.2f64..0.8, lambda_hat in 0.0f64..2.0) {
        let material = Material::new(1.0, lambda_hat, 0.5, alpha).unwrap();
        let case = ManufacturedCase::example2(material);
        let coarse = consistency_residual(&case, 4, 4);
        let fine = consistency_residual(&case, 8, 8);
        let finer = consistency_residual(&case, 16, 16);
        prop_assert!(fine < 0.5 * coarse && finer < 0.5 * fine, "{coarse} {fine} {finer}");
    }
}
