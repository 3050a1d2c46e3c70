mod common;

use common::{instance, normal, rng, rows};
use emms_core::{
    emms_score, flatten_for_t, solve_fast, solve_pgd, solve_pgd_observed, stack_flabels,
    wlsr_objective, FeatureMatrix, InnerStep, SimplexVector, SolverConfig,
};
use emms_testkit as oracle;
use rand::Rng;

fn tight_pgd() -> SolverConfig {
    SolverConfig::pgd()
        .with_max_outer_iters(20_000)
        .with_tol(1e-15)
}

#[test]
fn objective_matches_triple_loop() {
    let mut r = rng(10);
    for _ in 0..20 {
        let (n, d, l, k) = (
            r.random_range(1..30),
            r.random_range(1..8),
            r.random_range(1..5),
            r.random_range(1..5),
        );
        let inst = instance(&mut r, n, d, l, k);
        let w = normal(&mut r, d, l);
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.0..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let t = SimplexVector::new(raw.iter().map(|v| v / sum).collect()).unwrap();
        let got = wlsr_objective(&inst.x, &inst.z, &w, &t).unwrap();
        let want = oracle::objective(&inst.x_rows, &inst.z_rows, &rows(&w), t.as_slice());
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn flattened_form_gives_the_same_objective() {
    let mut r = rng(11);
    let inst = instance(&mut r, 9, 3, 4, 3);
    let w = normal(&mut r, 3, 4);
    let t = SimplexVector::new(vec![0.2, 0.5, 0.3]).unwrap();
    let zf = flatten_for_t(&inst.z);
    let xw = inst.x.matrix().matmul(&w).unwrap();
    // vec(Xw) in the same order as the flattened labels: row n·L + l
    let diff: f64 = (0..9 * 4)
        .map(|row| {
            let pred = xw.get(row / 4, row % 4);
            let target: f64 = (0..3).map(|k| zf.get(row, k) * t.as_slice()[k]).sum();
            (pred - target).powi(2)
        })
        .sum();
    let s = wlsr_objective(&inst.x, &inst.z, &w, &t).unwrap();
    assert!((0.5 * diff - s).abs() < 1e-12 * s.max(1.0));
}

#[test]
fn pgd_matches_grid_search() {
    let mut r = rng(12);
    for k in [2, 3] {
        for _ in 0..3 {
            let n = r.random_range(10..=40);
            let d = r.random_range(1..=6);
            let l = r.random_range(1..=3);
            let inst = instance(&mut r, n, d, l, k);
            let (grid, t_grid) = oracle::grid_minimum(&inst.x_rows, &inst.z_rows, 1000);
            let sol = solve_pgd(&inst.x, &inst.z, &tight_pgd()).unwrap();
            assert!(
                (sol.score - grid).abs() <= 1e-4 * grid,
                "k={k}: pgd {} vs grid {grid} at {t_grid:?}",
                sol.score
            );
            // the grid is a restriction, so a converged solver can only be lower
            assert!(sol.score <= grid * (1.0 + 1e-9));
        }
    }
}

#[test]
fn inner_steps_decrease_by_at_least_the_step_bound() {
    let mut r = rng(13);
    for _ in 0..5 {
        let inst = instance(&mut r, 30, 4, 3, 4);
        let mut worst = f64::INFINITY;
        let mut steps = 0;
        let mut observe = |step: &InnerStep<'_>| {
            let before = oracle::objective(
                &inst.x_rows,
                &inst.z_rows,
                &rows(step.w),
                step.t_before.as_slice(),
            );
            let after = oracle::objective(
                &inst.x_rows,
                &inst.z_rows,
                &rows(step.w),
                step.t_after.as_slice(),
            );
            let moved: f64 = step
                .t_before
                .as_slice()
                .iter()
                .zip(step.t_after.as_slice())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            worst = worst.min((before - after) - moved / (2.0 * step.beta));
            steps += 1;
        };
        solve_pgd_observed(&inst.x, &inst.z, &SolverConfig::pgd(), &mut observe).unwrap();
        assert!(steps > 0);
        assert!(worst >= -1e-9, "decrease fell short by {worst}");
    }
}

#[test]
fn pgd_trace_never_increases() {
    let mut r = rng(14);
    for _ in 0..10 {
        let inst = instance(&mut r, 60, 10, 4, 3);
        let sol = solve_pgd(
            &inst.x,
            &inst.z,
            &SolverConfig::pgd()
                .with_max_outer_iters(200)
                .with_tol(1e-12),
        )
        .unwrap();
        for pair in sol.trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10);
        }
    }
}

#[test]
fn single_oracle_reduces_to_least_squares() {
    let mut r = rng(15);
    for _ in 0..10 {
        let inst = instance(&mut r, 25, 4, 3, 1);
        let want = oracle::lstsq_half_residual(&inst.x_rows, &inst.z_rows[0]);
        let t = emms_score(&inst.x, &inst.z, &SolverConfig::fast()).unwrap();
        assert!(
            (t + want).abs() <= 1e-10 * want.max(1.0),
            "{t} vs {}",
            -want
        );
    }
}

#[test]
fn fast_solver_is_never_better_than_the_optimum() {
    let mut r = rng(16);
    for _ in 0..10 {
        let inst = instance(&mut r, 30, 3, 2, 3);
        let (grid, _) = oracle::grid_minimum(&inst.x_rows, &inst.z_rows, 1000);
        let fast = solve_fast(&inst.x, &inst.z, &SolverConfig::fast()).unwrap();
        // grid is within 1e-6 of the optimum here; the fast answer is feasible
        assert!(fast.score >= grid * (1.0 - 1e-6));
    }
}

/// Alternating exact least squares with a Euclidean projection converges to
/// a fixed point of `t ↦ Π(t − G⁻¹Mt)`, which is not the constrained optimum
/// whenever the projection is active. On this 6×2 instance the gap to the
/// PGD optimum is far above 1e-3, so cross-solver agreement at that level
/// cannot hold for small random problems.
#[test]
#[ignore = "alternating LSR + sparsemax has a non-optimal fixed point; kept as documentation"]
fn fast_agrees_with_pgd_on_small_random_instance() {
    let mut r = rng(17);
    let x = normal(&mut r, 6, 2);
    let slices = (0..3).map(|_| normal(&mut r, 6, 1)).collect();
    let z = stack_flabels(slices).unwrap();
    let x = FeatureMatrix::new(x);
    let pgd = solve_pgd(&x, &z, &tight_pgd()).unwrap();
    let fast = solve_fast(&x, &z, &SolverConfig::fast().with_max_outer_iters(100)).unwrap();
    assert!((fast.score - pgd.score).abs() / pgd.score <= 1e-3);
}
