//! Whole-run properties of the stepper: symmetry, determinism, conservation,
//! dissipation and the ε → 0 trend.

use muskat_core::functionals::balance_check;
use muskat_core::solver::{self, Mode, StepperConfig, Trajectory};
use muskat_core::{
    make_initial_datum, regularize_initial_datum, FieldPair, Grid, InitialDatumSpec, PhysicalParams,
};

fn bump(grid: &Grid, center: f64, half_width: f64, height: f64) -> Vec<f64> {
    make_initial_datum(
        &InitialDatumSpec::Bump {
            center,
            half_width,
            height,
        },
        grid,
    )
    .unwrap()
}

fn collision(grid: &Grid) -> FieldPair {
    FieldPair::new(bump(grid, -0.5, 0.8, 1.0), bump(grid, 0.5, 0.8, 1.0)).unwrap()
}

fn limit_run(s0: &FieldPair, grid: &Grid, t_end: f64, stride: usize) -> Trajectory {
    let p = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
    let cfg = StepperConfig {
        mode: Mode::Limit,
        t_end,
        diagnostics_stride: stride,
        snapshot_times: vec![0.5 * t_end, t_end],
        ..Default::default()
    };
    solver::run(s0, &p, grid, &cfg).unwrap()
}

#[test]
fn even_data_stay_even() {
    let grid = Grid::new(4.0, 256).unwrap();
    let s0 = FieldPair::new(bump(&grid, 0.0, 1.0, 1.0), bump(&grid, 0.0, 0.5, 2.0)).unwrap();
    let traj = limit_run(&s0, &grid, 0.5, 50);
    let n = grid.len();
    for frame in &traj.snapshots {
        let scale = frame
            .state
            .f
            .iter()
            .chain(&frame.state.g)
            .fold(0.0f64, |a, b| a.max(*b));
        for i in 0..n / 2 {
            assert!((frame.state.f[i] - frame.state.f[n - 1 - i]).abs() <= 1e-13 * scale);
            assert!((frame.state.g[i] - frame.state.g[n - 1 - i]).abs() <= 1e-13 * scale);
        }
    }
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let grid = Grid::new(4.0, 128).unwrap();
    let s0 = collision(&grid);
    let a = limit_run(&s0, &grid, 0.3, 7);
    let b = limit_run(&s0, &grid, 0.3, 7);
    assert_eq!(a, b);
}

#[test]
fn zero_data_stay_zero() {
    let grid = Grid::new(2.0, 64).unwrap();
    let traj = limit_run(&FieldPair::zeros(64), &grid, 1.0, 10);
    assert_eq!(traj.snapshots.len(), 2);
    for frame in &traj.snapshots {
        assert!(frame
            .state
            .f
            .iter()
            .chain(&frame.state.g)
            .all(|v| *v == 0.0));
    }
    assert!(traj
        .ledger
        .rows
        .iter()
        .all(|r| r.energy == 0.0 && r.m2 == 0.0));
}

#[test]
fn collision_conserves_mass_and_dissipates() {
    let grid = Grid::new(4.0, 512).unwrap();
    let s0 = collision(&grid);
    let traj = limit_run(&s0, &grid, 1.0, 20);
    let (mf, mg) = (s0.mass_f(&grid), s0.mass_g(&grid));
    for row in &traj.ledger.rows {
        assert!((row.mass_f - mf).abs() <= 1e-12 * mf);
        assert!((row.mass_g - mg).abs() <= 1e-12 * mg);
    }
    for w in traj.ledger.rows.windows(2) {
        assert!(
            w[1].energy <= w[0].energy * (1.0 + 1e-12),
            "energy rose at t = {}",
            w[1].t
        );
        assert!(w[1].d_energy >= w[0].d_energy);
        assert!(w[1].d_entropy >= w[0].d_entropy);
    }
    let report = balance_check(&traj.ledger).unwrap();
    assert!(report.pass(), "{report:?}");
    assert!(report.energy.margin >= 0.0);
    assert_eq!(traj.clipped_mass, [0.0, 0.0]);

    // The accumulated dissipation accounts for the energy actually lost.
    let first = traj.ledger.first().unwrap();
    let last = traj.ledger.last().unwrap();
    let lost = first.energy - last.energy;
    assert!(
        (last.d_energy - lost).abs() <= 0.02 * lost,
        "dissipated {} lost {lost}",
        last.d_energy
    );
}

#[test]
fn regularized_run_keeps_the_floor() {
    let grid = Grid::new(4.0, 256).unwrap();
    let p = PhysicalParams::new(1.0, 1.0, 1e-3).unwrap();
    let s0 = regularize_initial_datum(&collision(&grid), &p, &grid).unwrap();
    let cfg = StepperConfig {
        t_end: 0.5,
        diagnostics_stride: 25,
        ..Default::default()
    };
    let traj = solver::run(&s0, &p, &grid, &cfg).unwrap();
    assert!(
        traj.min_values.iter().all(|m| *m >= 1e-3 - 1e-15),
        "{:?}",
        traj.min_values
    );
    let (mf, mg) = (s0.mass_f(&grid), s0.mass_g(&grid));
    assert!((traj.final_state.mass_f(&grid) - mf).abs() <= 1e-13 * mf);
    assert!((traj.final_state.mass_g(&grid) - mg).abs() <= 1e-13 * mg);
}

#[test]
fn regularized_runs_approach_the_limit_as_eps_shrinks() {
    let grid = Grid::new(4.0, 256).unwrap();
    let raw = collision(&grid);
    let t_end = 0.25;
    let limit = limit_run(&raw, &grid, t_end, usize::MAX).final_state;
    let mut distances = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let p = PhysicalParams::new(1.0, 1.0, eps).unwrap();
        let s0 = regularize_initial_datum(&raw, &p, &grid).unwrap();
        let cfg = StepperConfig {
            t_end,
            diagnostics_stride: usize::MAX,
            track_dissipation: false,
            ..Default::default()
        };
        let fin = solver::run(&s0, &p, &grid, &cfg).unwrap().final_state;
        let lifted = FieldPair::new(
            fin.f.iter().map(|v| v - eps).collect(),
            fin.g.iter().map(|v| v - eps).collect(),
        )
        .unwrap();
        distances.push((
            fin.l1_distance(&limit, &grid),
            lifted.l1_distance(&limit, &grid),
        ));
    }
    for w in distances.windows(2) {
        assert!(w[1].0 < w[0].0, "{distances:?}");
        assert!(w[1].1 < w[0].1, "{distances:?}");
    }
}
