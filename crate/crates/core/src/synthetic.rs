// SPDX-License-Identifier: Apache-2.0

//! Seeded random operators, channels and trajectories for testing and
//! benchmarking.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dynamics::{DerivativeSource, MapTrajectory};
use crate::linalg::{c, CMatrix, DensityMatrix, Hermitian, Superoperator};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Random Hermitian matrix with entries of order `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> Hermitian {
    let a = random_matrix(rng, d);
    Hermitian::symmetrized(a * c(scale))
}

/// `e^{-iHt}`.
pub fn propagator(h: &Hermitian, t: f64) -> CMatrix {
    let spec = h.eig();
    let d = spec.values.len();
    let mut diag = CMatrix::zeros(d, d);
    for (n, &e) in spec.values.iter().enumerate() {
        diag[(n, n)] = Complex64::from_polar(1.0, -e * t);
    }
    &spec.vectors * diag * spec.vectors.adjoint()
}

/// Random unitary `e^{-iA}` with a random Hermitian `A` of order π.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    propagator(&random_hermitian(rng, d, std::f64::consts::PI), 1.0)
}

/// Full-rank random density matrix `A A† / Tr(A A†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let a = random_matrix(rng, d);
    let m = &a * a.adjoint();
    let tr = crate::linalg::trace(&m).re;
    DensityMatrix::new(Hermitian::symmetrized(m / c(tr)).into_matrix())
        .expect("valid by construction")
}

/// Random CPTP map with `n_kraus` Kraus operators obtained by orthonormalizing
/// Gaussian matrices: `K_k = G_k S^{-1/2}`, `S = Σ G_k† G_k`.
pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R, d: usize, n_kraus: usize) -> Superoperator {
    let gs: Vec<CMatrix> = (0..n_kraus).map(|_| random_matrix(rng, d)).collect();
    let s = gs
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, g| acc + g.adjoint() * g);
    let s_inv_sqrt = Hermitian::symmetrized(s)
        .apply_fn(|x| 1.0 / x.sqrt())
        .expect("positive definite");
    let kraus: Vec<CMatrix> = gs.iter().map(|g| g * s_inv_sqrt.matrix()).collect();
    Superoperator::from_kraus(&kraus)
}

/// Random GKSL generator: Hamiltonian part of order one plus `d` traceless
/// jump operators with rates up to `strength`.
pub fn random_gksl_generator<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    strength: f64,
) -> Superoperator {
    let h = random_hermitian(rng, d, 1.0);
    let mut l = Superoperator::hamiltonian(h.matrix());
    let rates = Uniform::new(0.0, strength);
    for _ in 0..d {
        let op = traceless(&random_matrix(rng, d));
        l = l.add(&Superoperator::lindblad(&op).scale(rates.sample(rng)));
    }
    l
}

/// Invertible CPTP map `e^{L}` of a random GKSL generator.
pub fn random_invertible_cptp<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Superoperator {
    random_gksl_generator(rng, d, 0.3).exp_scaled(1.0)
}

fn traceless(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    let tr = crate::linalg::trace(m) / c(d as f64);
    m - CMatrix::identity(d, d) * tr
}

/// Parameters of a smooth, time-dependent GKSL generator
/// `L(t) = -i[H0 + sin(νt) H1, ·] + Σ_k r_k (1 + cos(ν_k t)/2) D[L_k]`.
#[derive(Clone, Debug)]
pub struct RandomGenerator {
    pub h0: Hermitian,
    pub h1: Hermitian,
    pub nu: f64,
    pub jumps: Vec<(CMatrix, f64, f64)>,
}

impl RandomGenerator {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        let h0 = random_hermitian(rng, d, 1.0);
        let h1 = random_hermitian(rng, d, 0.5);
        let nu = Uniform::new(0.5, 2.0).sample(rng);
        let jumps = (0..d)
            .map(|_| {
                let op = traceless(&random_matrix(rng, d));
                let norm = crate::linalg::frobenius(&op);
                (
                    op / c(norm),
                    Uniform::new(0.02, 0.2).sample(rng),
                    Uniform::new(0.3, 3.0).sample(rng),
                )
            })
            .collect();
        RandomGenerator { h0, h1, nu, jumps }
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn hamiltonian(&self, t: f64) -> Hermitian {
        self.h0.add(&self.h1.scale((self.nu * t).sin()))
    }

    pub fn at(&self, t: f64) -> Superoperator {
        let mut l = Superoperator::hamiltonian(self.hamiltonian(t).matrix());
        for (op, rate, freq) in &self.jumps {
            let r = rate * (1.0 + 0.5 * (freq * t).cos());
            l = l.add(&Superoperator::lindblad(op).scale(r));
        }
        l
    }

    /// Trajectory `Φ_{k+1} = e^{L(t_k + h/2) h} Φ_k` on a uniform grid.
    /// Derivatives are left to finite differences.
    pub fn trajectory(&self, t_max: f64, n: usize) -> MapTrajectory {
        let times = MapTrajectory::uniform_grid(t_max, n);
        let h = if n > 1 { times[1] } else { 0.0 };
        let mut maps = Vec::with_capacity(n);
        maps.push(Superoperator::identity(self.dim()));
        for k in 1..n {
            let step = self.at(times[k - 1] + h / 2.0).exp_scaled(h);
            let next = step.compose(&maps[k - 1]);
            maps.push(next);
        }
        MapTrajectory::new(times, maps, DerivativeSource::FiniteDifference)
            .expect("trace preserving by construction")
    }
}

/// Random invertible CPTP trajectory on `[0, t_max]` with `n` points.
pub fn random_trajectory<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    t_max: f64,
    n: usize,
) -> MapTrajectory {
    RandomGenerator::sample(rng, d).trajectory(t_max, n)
}
