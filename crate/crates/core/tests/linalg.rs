mod common;

use nbfem::experiments::{preset_circle, preset_circle_highorder};
use nbfem::levelset::CoefficientMode;
use nbfem::linalg::{cg_solve, cg_solve_monitored, cg_solve_with, CellBlocks, CgOptions, Preconditioner, SparseSym};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn energy(m: &SparseSym, v: &[f64]) -> f64 {
    m.matvec(v).unwrap().iter().zip(v).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

/// Random sparse SPD matrix: symmetric random pattern plus a dominant diagonal.
fn random_spd(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..i {
            if rng.gen_bool(0.1) {
                let v = rng.gen_range(-1.0..1.0);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
    }
    for i in 0..n {
        a[i][i] = a[i].iter().map(|v| v.abs()).sum::<f64>() + rng.gen_range(0.1..1.0);
    }
    a
}

#[test]
fn matvec_matches_dense_product() {
    let a = random_spd(100, 3);
    let m = SparseSym::from_dense(&a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let got = m.matvec(&x).unwrap();
    let want = dense_matvec(&a, &x);
    let diff = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-13, "{diff}");
}

#[test]
fn converged_solves_meet_the_true_residual() {
    let a = random_spd(100, 5);
    let m = SparseSym::from_dense(&a).unwrap();
    let b: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
    for p in [Preconditioner::None, Preconditioner::Jacobi] {
        let out = cg_solve(&m, &b, &CgOptions { tol: 1e-10, preconditioner: p, ..CgOptions::default() }).unwrap();
        assert!(out.stats.converged);
        assert!(out.stats.relative_residual <= 1e-10);
        let r: Vec<f64> = dense_matvec(&a, &out.x).iter().zip(&b).map(|(a, b)| b - a).collect();
        let rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rel <= 1e-10 * 1.01, "{p:?}: {rel:e}");
    }
}

#[test]
fn solution_does_not_depend_on_the_preconditioner() {
    let lv = common::level(&preset_circle(), 5.0, CoefficientMode::ExactHessian, 1, 3);
    let m = &lv.system.matrix;
    let tol = 1e-12;
    let solve = |p| cg_solve(m, &lv.system.rhs, &CgOptions { tol, preconditioner: p, max_iter: Some(100_000) }).unwrap().into_result().unwrap().x;
    let x0 = solve(Preconditioner::None);
    let x1 = solve(Preconditioner::Jacobi);
    let diff: Vec<f64> = x0.iter().zip(&x1).map(|(a, b)| a - b).collect();
    let rel = energy(m, &diff) / energy(m, &x1);
    assert!(rel <= 10.0 * tol, "P1 relative M-norm difference {rel:e}");

    let p2 = preset_circle_highorder(2).unwrap();
    let lv = common::level(&p2, 3.0, CoefficientMode::ExactHessian, 2, 1);
    let m = &lv.system.matrix;
    let blocks = CellBlocks::new(m, (0..lv.space.num_cells()).map(|c| lv.space.cell_dofs(c))).unwrap();
    let opts = |p| CgOptions { tol, preconditioner: p, max_iter: Some(100_000) };
    let xa = cg_solve_with(m, &lv.system.rhs, None, &opts(Preconditioner::CellBlock), Some(&blocks), |_, _| {})
        .unwrap()
        .into_result()
        .unwrap()
        .x;
    let xb = cg_solve(m, &lv.system.rhs, &opts(Preconditioner::Jacobi)).unwrap().into_result().unwrap().x;
    let diff: Vec<f64> = xa.iter().zip(&xb).map(|(a, b)| a - b).collect();
    let rel = energy(m, &diff) / energy(m, &xa);
    assert!(rel <= 10.0 * tol, "P2 relative M-norm difference {rel:e}");
}

#[test]
fn energy_error_decreases_monotonically() {
    let lv = common::level(&preset_circle(), 5.0, CoefficientMode::ExactHessian, 1, 3);
    let m = &lv.system.matrix;
    let exact = common::solve(&lv.space, &lv.system);
    let mut errors = Vec::new();
    cg_solve_monitored(m, &lv.system.rhs, None, &CgOptions::default(), |_, x| {
        let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
        errors.push(energy(m, &e));
    })
    .unwrap();
    assert!(errors.len() > 10);
    let scale = energy(m, &exact);
    for (k, w) in errors.windows(2).enumerate() {
        // allow for the roundoff floor of the reference solution
        assert!(w[1] <= w[0] + 1e-10 * scale, "iteration {k}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn cg_is_deterministic() {
    let lv = common::level(&preset_circle(), 5.0, CoefficientMode::ExactHessian, 1, 2);
    let a = cg_solve(&lv.system.matrix, &lv.system.rhs, &CgOptions::default()).unwrap();
    let b = cg_solve(&lv.system.matrix, &lv.system.rhs, &CgOptions::default()).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.stats, b.stats);
}

fn symmetric_triplets() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (1usize..30).prop_flat_map(|n| {
        (Just(n), prop::collection::vec((0..n, 0..n, -2.0f64..2.0), 0..120)).prop_map(|(n, raw)| {
            let mut t = Vec::new();
            for (i, j, v) in raw {
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
            (n, t)
        })
    })
}

proptest! {
    #[test]
    fn triplet_assembly_is_sorted_symmetric_and_exact((n, t) in symmetric_triplets(), seed in any::<u64>()) {
        let m = SparseSym::from_triplets(n, &t).unwrap();
        let offs = m.row_offsets();
        for i in 0..n {
            let cols = &m.col_indices()[offs[i]..offs[i + 1]];
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert!(m.is_structurally_symmetric());
        let mut dense = vec![vec![0.0; n]; n];
        for &(i, j, v) in &t {
            dense[i][j] += v;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = m.matvec(&x).unwrap();
        for (g, w) in got.iter().zip(dense_matvec(&dense, &x)) {
            prop_assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
        }
        prop_assert!(m.asymmetry() <= 1e-15);
    }

    #[test]
    fn converged_flag_implies_tolerance(seed in 0u64..1000, tol_exp in 4i32..12) {
        let a = random_spd(40, seed);
        let m = SparseSym::from_dense(&a).unwrap();
        let b: Vec<f64> = (0..40).map(|i| ((i as u64 + seed) as f64).cos()).collect();
        let tol = 10f64.powi(-tol_exp);
        let out = cg_solve(&m, &b, &CgOptions { tol, ..CgOptions::default() }).unwrap();
        prop_assert!(!out.stats.converged || out.stats.relative_residual <= tol);
    }
}
