use knnuc::cases;
use knnuc::ptdf::{compute_ptdf, line_flows};
use knnuc::PowerSystem;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Flows from a direct solve of the reduced nodal equations by Gaussian
/// elimination with partial pivoting.
fn dense_flows(sys: &PowerSystem, slack: usize, injections: &[f64]) -> Vec<f64> {
    let n = sys.n_buses();
    let mut b = vec![vec![0.0; n]; n];
    for l in sys.lines() {
        let y = 1.0 / l.reactance;
        b[l.from_bus][l.from_bus] += y;
        b[l.to_bus][l.to_bus] += y;
        b[l.from_bus][l.to_bus] -= y;
        b[l.to_bus][l.from_bus] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = keep.len();
    let mut a: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = keep.iter().map(|&j| b[i][j]).collect();
            row.push(injections[i]);
            row
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut theta = vec![0.0; n];
    for (k, &i) in keep.iter().enumerate() {
        theta[i] = a[k][m] / a[k][k];
    }
    sys.lines()
        .iter()
        .map(|l| (theta[l.from_bus] - theta[l.to_bus]) / l.reactance)
        .collect()
}

fn balanced(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut inj: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
    let sum: f64 = inj.iter().sum();
    inj[n - 1] -= sum;
    inj
}

#[test]
fn matches_dense_solve_on_five_bus() {
    let sys = cases::five_bus();
    let ptdf = compute_ptdf(&sys, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let inj = balanced(&mut rng, sys.n_buses());
        let got = line_flows(&ptdf, &inj).unwrap();
        let want = dense_flows(&sys, 0, &inj);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
        }
    }
}

#[test]
fn matches_dense_solve_on_synthetic() {
    let sys = cases::synthetic(30, 12, 7).unwrap();
    let ptdf = compute_ptdf(&sys, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inj = balanced(&mut rng, sys.n_buses());
    let got = line_flows(&ptdf, &inj).unwrap();
    let want = dense_flows(&sys, 3, &inj);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
    }
}

proptest! {
    #[test]
    fn flows_are_linear(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let sys = cases::five_bus();
        let ptdf = compute_ptdf(&sys, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = balanced(&mut rng, 5);
        let b = balanced(&mut rng, 5);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + alpha * y).collect();
        let fa = line_flows(&ptdf, &a).unwrap();
        let fb = line_flows(&ptdf, &b).unwrap();
        let fm = line_flows(&ptdf, &mix).unwrap();
        for l in 0..fa.len() {
            prop_assert!((fm[l] - (fa[l] + alpha * fb[l])).abs() <= 1e-8);
        }
    }

    #[test]
    fn flows_do_not_depend_on_slack(seed in any::<u64>(), slack in 0usize..5) {
        let sys = cases::five_bus();
        let base = compute_ptdf(&sys, 0).unwrap();
        let other = compute_ptdf(&sys, slack).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inj = balanced(&mut rng, 5);
        let f0 = line_flows(&base, &inj).unwrap();
        let f1 = line_flows(&other, &inj).unwrap();
        for (x, y) in f0.iter().zip(&f1) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}
