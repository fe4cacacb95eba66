use ndarray::Array1;

use cprob::propagator::{gaussian_step_kernel, ConstantField, GaussianPacket, Grid, PacketStudy};
use cprob::Complex;

type C = Complex<f64>;

#[test]
fn complex_probabilities_track_the_normalized_wavefunction() {
    let grid = Grid::with_extent(1, 256, 1.0).unwrap();
    // a decay rate makes the complex probabilities lose weight each step
    let field = ConstantField::scalar(C::new(3.0, 0.5), C::new(0.0, 0.0), C::new(0.2, 1.0));
    let k = gaussian_step_kernel(&field, 1e-3, &grid).unwrap();
    let psi0 = GaussianPacket::at_rest(1, 0.05).sample(&grid, 0.0, C::new(0.0, 1.0));

    let total: C = psi0.iter().sum();
    let mut cp: Array1<C> = psi0.mapv(|z| z / total);
    let mut psi = psi0.clone();
    for _ in 0..10 {
        cp = k.apply(&cp);
        psi = k.apply(&psi);
        let norm = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing()).sqrt();
        psi.mapv_inplace(|z| z / norm);

        let anchor = grid.center();
        let ratio = cp[anchor] / psi[anchor];
        for i in (0..grid.len()).filter(|&i| psi[i].norm() > 1e-6) {
            let r = cp[i] / psi[i];
            assert!((r - ratio).norm() <= 1e-6 * ratio.norm(), "site {i}: {r} vs {ratio}");
        }
    }
}

#[test]
fn halving_the_step_reduces_the_residual() {
    let study = PacketStudy::<f64>::desk(256, 1.0);
    let residuals: Vec<f64> = [2, 4, 8, 16].iter().map(|&n| study.run(n).unwrap().residual).collect();
    for w in residuals.windows(2) {
        assert!(w[0] / w[1] >= 1.5, "{residuals:?}");
    }
    assert!(residuals[3] < 0.02);
}

#[test]
fn heavier_particles_spread_on_a_longer_clock() {
    for mass in [0.5, 2.0] {
        let study = PacketStudy::<f64>::desk(256, mass);
        let r = study.run(16).unwrap();
        assert!(r.residual < 0.02, "mass {mass}: {}", r.residual);
    }
}
