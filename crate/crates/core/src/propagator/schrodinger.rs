//! Free-particle wave-packet evolution by lattice kernels, checked against
//! the closed-form Gaussian solution.
//!
//! The kernel weight is `W = δ + i·mass`. With `δ = 0` the lattice sums do
//! not converge absolutely, so every run uses a regulator `δ > 0` and
//! removes its leading effect by extrapolating from `δ` and `δ/2`:
//! `ψ ≈ 2 ψ(δ/2) - ψ(δ)`. The reference solution is the unregulated
//! (`W = i·mass`) convolution of the initial packet.

use ndarray::Array1;

use super::grid::Grid;
use super::kernel::{gaussian_step_kernel, ConstantField, GridKernel};
use crate::{Complex, Error, Real, Result};

/// Share of `|ψ|²` allowed inside the outer boundary band.
pub const BOUNDARY_LIMIT: f64 = 1e-2;

/// How the regulator `δ` is chosen for a kernel of step `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regulator<T: Real> {
    /// Smallest `δ` for which `|kernel|` at the grid edge (distance
    /// `extent/2` on one axis) has decayed to `floor` of its peak:
    /// `δ = 2 ε ln(1/floor) / (extent/2)²`.
    EdgeDecay { floor: T },
    Fixed(T),
}

impl<T: Real> Default for Regulator<T> {
    fn default() -> Self {
        Regulator::EdgeDecay { floor: T::lit(1e-8) }
    }
}

impl<T: Real> Regulator<T> {
    pub fn delta(&self, step: T, grid: &Grid<T>) -> T {
        match *self {
            Regulator::Fixed(d) => d,
            Regulator::EdgeDecay { floor } => {
                let edge = grid.extent() / T::lit(2.0);
                T::lit(2.0) * step * (T::one() / floor).ln() / (edge * edge)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParticle<T: Real> {
    pub mass: T,
    pub regulator: Regulator<T>,
}

impl<T: Real> FreeParticle<T> {
    pub fn new(mass: T) -> Self {
        Self {
            mass,
            regulator: Regulator::default(),
        }
    }

    pub fn field(&self, dimension: usize, delta: T) -> ConstantField<T> {
        ConstantField::free(dimension, delta, self.mass)
    }

    /// Kernel of step `step` with regulator `delta`.
    pub fn kernel(&self, grid: &Grid<T>, step: T, delta: T) -> Result<GridKernel<T>> {
        gaussian_step_kernel(&self.field(grid.dimension(), delta), step, grid)
    }
}

/// Isotropic Gaussian packet
/// `ψ₀(x) = (2πσ²)^{-d/4} exp(-|x - x₀|² / 4σ² + i k₀·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket<T: Real> {
    pub center: Vec<T>,
    pub width: T,
    pub momentum: Vec<T>,
}

impl<T: Real> GaussianPacket<T> {
    pub fn at_rest(dimension: usize, width: T) -> Self {
        Self {
            center: vec![T::zero(); dimension],
            width,
            momentum: vec![T::zero(); dimension],
        }
    }

    /// The packet convolved with the normalized Gaussian kernel of weight
    /// `weight` over time `t`, i.e. with complex variance `s = t / W`:
    /// per axis `sqrt(a/(a+s)) exp(ik₀x₀ - ak₀²/2) exp(-(x - x₀ - iak₀)² / 2(a+s))`
    /// with `a = 2σ²`.
    pub fn evaluate(&self, x: &[T], t: T, weight: Complex<T>) -> Complex<T> {
        let d = self.center.len();
        let two = T::lit(2.0);
        let a = two * self.width * self.width;
        let s = if t == T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            Complex::new(t, T::zero()) / weight
        };
        let norm = (two * T::PI() * self.width * self.width).powf(T::lit(-(d as f64) / 4.0));
        let a_c = Complex::new(a, T::zero());
        let spread = (a_c / (a_c + s)).sqrt();
        let mut psi = Complex::new(norm, T::zero());
        for j in 0..d {
            let (x0, k0) = (self.center[j], self.momentum[j]);
            let phase = Complex::new(-a * k0 * k0 / two, k0 * x0).exp();
            let u = Complex::new(x[j] - x0, -a * k0);
            psi = psi * spread * phase * (-(u * u) / ((a_c + s) * two)).exp();
        }
        psi
    }

    pub fn sample(&self, grid: &Grid<T>, t: T, weight: Complex<T>) -> Array1<Complex<T>> {
        Array1::from_iter((0..grid.len()).map(|i| self.evaluate(&grid.coords(i), t, weight)))
    }
}

/// Outcome of one wave-packet comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport<T: Real> {
    pub steps: usize,
    pub epsilon: T,
    /// Regulator of the coarser of the two extrapolation runs.
    pub delta: T,
    /// Relative L² error of the `δ → 0` extrapolated packet on the inner half-grid.
    pub residual: T,
    /// Same measure for the single run at `δ`.
    pub raw_residual: T,
}

/// Relative L² distance over the inner half of the grid.
pub fn inner_l2<T: Real>(grid: &Grid<T>, approx: &Array1<Complex<T>>, exact: &Array1<Complex<T>>) -> T {
    let (mut num, mut den) = (T::zero(), T::zero());
    for i in (0..grid.len()).filter(|&i| grid.is_inner(i)) {
        num += (approx[i] - exact[i]).norm_sqr();
        den += exact[i].norm_sqr();
    }
    (num / den).sqrt()
}

/// Share of `|ψ|²` in the boundary band.
pub fn boundary_weight<T: Real>(grid: &Grid<T>, psi: &Array1<Complex<T>>) -> T {
    let total: T = psi.iter().map(|z| z.norm_sqr()).sum();
    let band: T = (0..grid.len())
        .filter(|&i| grid.in_boundary_band(i))
        .map(|i| psi[i].norm_sqr())
        .sum();
    band / total
}

fn guard_boundary<T: Real>(grid: &Grid<T>, psi: &Array1<Complex<T>>) -> Result<()> {
    let weight = boundary_weight(grid, psi);
    if !(weight <= T::lit(BOUNDARY_LIMIT)) {
        return Err(Error::BoundaryContamination {
            weight: weight.to_f64().unwrap_or(f64::NAN),
            limit: BOUNDARY_LIMIT,
        });
    }
    Ok(())
}

fn evolve_steps<T: Real>(k: &GridKernel<T>, psi: &Array1<Complex<T>>, steps: usize) -> Array1<Complex<T>> {
    (0..steps).fold(psi.clone(), |v, _| k.apply(&v))
}

/// Evolve `packet` for `total_time` in `steps` kernel steps and compare
/// with the closed-form free evolution.
pub fn schrodinger_residual<T: Real>(
    particle: &FreeParticle<T>,
    packet: &GaussianPacket<T>,
    grid: &Grid<T>,
    total_time: T,
    steps: usize,
) -> Result<ResidualReport<T>> {
    if packet.center.len() != grid.dimension() || packet.momentum.len() != grid.dimension() {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension(),
            actual: packet.center.len(),
        });
    }
    if !(particle.mass > T::zero()) {
        return Err(Error::ParameterRange {
            name: "mass".into(),
            value: particle.mass.to_f64().unwrap_or(f64::NAN),
            reason: "must be positive".into(),
        });
    }
    let pure = Complex::new(T::zero(), particle.mass);
    let psi0 = packet.sample(grid, T::zero(), pure);
    let exact = packet.sample(grid, total_time, pure);
    guard_boundary(grid, &psi0)?;
    guard_boundary(grid, &exact)?;

    if steps == 0 {
        if total_time != T::zero() {
            return Err(Error::Unsupported("nonzero evolution time needs at least one step".into()));
        }
        let r = inner_l2(grid, &psi0, &exact);
        return Ok(ResidualReport {
            steps,
            epsilon: T::zero(),
            delta: T::zero(),
            residual: r,
            raw_residual: r,
        });
    }

    let epsilon = total_time / T::lit(steps as f64);
    let delta = particle.regulator.delta(epsilon, grid);
    let coarse = evolve_steps(&particle.kernel(grid, epsilon, delta)?, &psi0, steps);
    let fine = evolve_steps(
        &particle.kernel(grid, epsilon, delta / T::lit(2.0))?,
        &psi0,
        steps,
    );
    guard_boundary(grid, &fine)?;
    let two = Complex::new(T::lit(2.0), T::zero());
    let extrapolated = Array1::from_iter(fine.iter().zip(coarse.iter()).map(|(&f, &c)| two * f - c));
    Ok(ResidualReport {
        steps,
        epsilon,
        delta,
        residual: inner_l2(grid, &extrapolated, &exact),
        raw_residual: inner_l2(grid, &coarse, &exact),
    })
}

/// Desk-scale study: 1-D grid of unit extent, packet width `extent/20`,
/// evolved until its width doubles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketStudy<T: Real> {
    pub points: usize,
    pub extent: T,
    pub particle: FreeParticle<T>,
}

impl<T: Real> PacketStudy<T> {
    pub fn desk(points: usize, mass: T) -> Self {
        Self {
            points,
            extent: T::one(),
            particle: FreeParticle::new(mass),
        }
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::with_extent(1, self.points, self.extent)
    }

    pub fn packet(&self) -> GaussianPacket<T> {
        GaussianPacket::at_rest(1, self.extent / T::lit(20.0))
    }

    /// Width of a free packet grows as `σ sqrt(1 + (t / 2mσ²)²)`; it doubles
    /// at `t = 2√3 m σ²`.
    pub fn doubling_time(&self) -> T {
        let sigma = self.packet().width;
        T::lit(2.0) * T::lit(3.0).sqrt() * self.particle.mass * sigma * sigma
    }

    pub fn run(&self, steps: usize) -> Result<ResidualReport<T>> {
        schrodinger_residual(
            &self.particle,
            &self.packet(),
            &self.grid()?,
            self.doubling_time(),
            steps,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_zero_residual() {
        let study = PacketStudy::<f64>::desk(256, 1.0);
        let r = schrodinger_residual(&study.particle, &study.packet(), &study.grid().unwrap(), 0.0, 0)
            .unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn closed_form_width_doubles() {
        let study = PacketStudy::<f64>::desk(256, 1.0);
        let grid = study.grid().unwrap();
        let psi = study.packet().sample(&grid, study.doubling_time(), Complex::new(0.0, 1.0));
        let (mut m2, mut tot) = (0.0, 0.0);
        for i in 0..grid.len() {
            let x = grid.coords(i)[0];
            m2 += psi[i].norm_sqr() * x * x;
            tot += psi[i].norm_sqr();
        }
        let width = (m2 / tot).sqrt();
        assert!((width / study.packet().width - 2.0).abs() < 1e-4);
    }

    #[test]
    fn closed_form_with_momentum_matches_initial_sample() {
        let packet = GaussianPacket { center: vec![0.1], width: 0.05, momentum: vec![30.0] };
        let x = [0.13];
        let direct = Complex::new(-(0.03f64 * 0.03) / (4.0 * 0.0025), 30.0 * 0.13).exp()
            * (2.0 * std::f64::consts::PI * 0.0025).powf(-0.25);
        assert!((packet.evaluate(&x, 0.0, Complex::new(0.0, 1.0)) - direct).norm() < 1e-12);
    }

    #[test]
    fn desk_residual_below_two_percent() {
        let r = PacketStudy::<f64>::desk(256, 1.0).run(16).unwrap();
        assert!(r.residual < 0.02, "{r:?}");
    }

    #[test]
    fn wide_packet_is_rejected() {
        let study = PacketStudy::<f64>::desk(256, 1.0);
        let packet = GaussianPacket::at_rest(1, 0.2);
        let err = schrodinger_residual(&study.particle, &packet, &study.grid().unwrap(), 1e-3, 2);
        assert!(matches!(err, Err(Error::BoundaryContamination { .. })));
    }

    #[test]
    fn edge_decay_regulator_scales_with_step() {
        let grid = Grid::with_extent(1, 256, 1.0).unwrap();
        let reg = Regulator::<f64>::default();
        let d1 = reg.delta(1e-3, &grid);
        assert!((reg.delta(2e-3, &grid) - 2.0 * d1).abs() < 1e-15);
        // |exp(-δ z²/2ε)| at z = extent/2 equals the floor
        let edge = (-d1 * 0.25 / (2.0 * 1e-3)).exp();
        assert!((edge - 1e-8).abs() < 1e-20);
    }
}
