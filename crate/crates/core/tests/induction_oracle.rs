//! Dense direct-solve oracle for the implicit induction update. The
//! shared helpers assemble the linear system from first principles — an
//! independent dense Dirichlet Laplacian, electromotive average, and LU
//! solver — and the tests compare against the iterative production path
//! on random states.

mod common;

use mhdfsi::grid::Grid;
use mhdfsi::scheme::{induction_step, SchemeParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 8;

fn params() -> SchemeParams {
    SchemeParams {
        dt: 1e-3,
        sigma: 2.0,
        mu: 1.5,
        eps: 0.0, // linear path: no quartic-curl regularizer
        ..Default::default()
    }
}

#[test]
fn matches_dense_solve_on_random_states() {
    let g = Grid::unit(N);
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let (mag, u, jz) = common::random_magnetic_state(g, &mut rng);
        let (next, _) = induction_step(&mag, &u, &jz, &p).unwrap();
        let oracle = common::dense_induction_solution(g, &mag, &u, &jz, &p);
        let err = common::rel_err(&next.psi.data, &oracle);
        assert!(err <= 1e-10, "trial {trial}: relative error {err:e}");
    }
}

#[test]
fn superposition_in_previous_state_and_current() {
    // with eps = 0 the update is linear in (psi_prev, jz) at fixed u
    let g = Grid::unit(N);
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mag1, u, jz1) = common::random_magnetic_state(g, &mut rng);
    let (mag2, _, jz2) = common::random_magnetic_state(g, &mut rng);
    let mut mag_sum = mag1.clone();
    for k in 0..mag_sum.psi.data.len() {
        mag_sum.psi.data[k] += mag2.psi.data[k];
    }
    let mut jz_sum = jz1.clone();
    for k in 0..jz_sum.data.len() {
        jz_sum.data[k] += jz2.data[k];
    }
    let (a, _) = induction_step(&mag1, &u, &jz1, &p).unwrap();
    let (b, _) = induction_step(&mag2, &u, &jz2, &p).unwrap();
    let (s, _) = induction_step(&mag_sum, &u, &jz_sum, &p).unwrap();
    let sum: Vec<f64> = a
        .psi
        .data
        .iter()
        .zip(&b.psi.data)
        .map(|(x, y)| x + y)
        .collect();
    let err = common::rel_err(&s.psi.data, &sum);
    assert!(err <= 1e-10, "superposition error {err:e}");
}
