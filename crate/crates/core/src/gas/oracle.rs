//! Monte-Carlo free-molecular collision oracle.
//!
//! Samples gas molecules striking the spheroid surface from a Maxwellian at
//! rest, reflects them specularly or re-emits them diffusely (cosine-law
//! half-Maxwellian at the gas temperature, in the local surface frame), and
//! accumulates the linear and angular momentum delivered to the body. The
//! drag coefficient along each generalized velocity is the antithetic
//! difference quotient of the force at `±u` with common random numbers.
//!
//! This shares no formulas with the closed-form rates in [`super`]; it only
//! needs the geometry of the surface and the reflection kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::DampingRates;
use crate::constants::KB;
use crate::model::{GasEnvironment, Particle};

/// Fixed shard count so results do not depend on the thread pool size.
const SHARDS: u64 = 64;

#[derive(Debug, Clone, Copy)]
pub struct CollisionOracle {
    pub samples: usize,
    pub seed: u64,
    /// Surface speed as a fraction of the thermal scale `sqrt(kB T / m)`.
    pub drift: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate {
    pub rates: DampingRates,
    /// One-sigma statistical errors of `rates`.
    pub stderr: DampingRates,
}

impl CollisionOracle {
    pub fn new(samples: usize, seed: u64) -> Self {
        CollisionOracle {
            samples,
            seed,
            drift: 0.01,
        }
    }

    pub fn estimate(&self, particle: &Particle, gas: &GasEnvironment) -> OracleEstimate {
        let per_shard = self.samples.div_ceil(SHARDS as usize).max(1);
        let a = particle.rx;
        let b = particle.ry;
        let sigma = gas.accommodation;
        let thermal = (KB * gas.temperature / gas.molecular_mass).sqrt();
        let u0 = self.drift * thermal;
        let omega0 = u0 / a;

        let partials: Vec<Moments> = (0..SHARDS)
            .into_par_iter()
            .map(|shard| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(shard);
                let mut acc = Moments::default();
                for _ in 0..per_shard {
                    let hit = sample_surface(&mut rng, a, b);
                    let xi = [
                        thermal * rng.sample::<f64, _>(StandardNormal),
                        thermal * rng.sample::<f64, _>(StandardNormal),
                        thermal * rng.sample::<f64, _>(StandardNormal),
                    ];
                    let emitted = sample_emission(&mut rng, &hit.normal, thermal);
                    let r = hit.point;
                    // surface velocities for unit generalized velocity
                    let motions = [
                        ([u0, 0.0, 0.0], u0),
                        ([0.0, u0, 0.0], u0),
                        ([-omega0 * r[1], omega0 * r[0], 0.0], omega0),
                    ];
                    let mut x = [0.0; 3];
                    for (k, (u, scale)) in motions.iter().enumerate() {
                        let plus = transfer(&xi, u, -1.0, &hit, &emitted, sigma, k);
                        let minus = transfer(&xi, u, 1.0, &hit, &emitted, sigma, k);
                        // body moving at +u feels −β u
                        x[k] = -(plus - minus) / (2.0 * scale);
                    }
                    acc.push(&x);
                }
                acc
            })
            .collect();

        let total = partials.iter().fold(Moments::default(), |mut t, m| {
            t.merge(m);
            t
        });
        // β = n A ⟨x⟩ with n = p / (kB T) and molecular mass folded in.
        let area = super::SurfaceMoments::spheroid(a, b).area;
        let density = gas.pressure / (KB * gas.temperature);
        let scale = density * area * gas.molecular_mass;
        let (mean, err) = total.mean_and_stderr();
        let mass = particle.mass();
        let inertia = particle.moment_of_inertia();
        let div = [mass, mass, inertia];
        let rate = |i: usize, v: &[f64; 3]| scale * v[i] / div[i];
        OracleEstimate {
            rates: DampingRates {
                gamma_x: rate(0, &mean),
                gamma_y: rate(1, &mean),
                gamma_theta: rate(2, &mean),
            },
            stderr: DampingRates {
                gamma_x: rate(0, &err),
                gamma_y: rate(1, &err),
                gamma_theta: rate(2, &err),
            },
        }
    }
}

struct SurfaceHit {
    point: [f64; 3],
    normal: [f64; 3],
}

/// Uniform-by-area point on the spheroid `(a u, b s cos φ, b s sin φ)`.
fn sample_surface(rng: &mut ChaCha8Rng, a: f64, b: f64) -> SurfaceHit {
    let hmax = a.max(b);
    loop {
        let u: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let s = (1.0 - u * u).sqrt();
        let h = (b * b * u * u + a * a * s * s).sqrt();
        if rng.random::<f64>() * hmax <= h {
            let (sp, cp) = phi.sin_cos();
            return SurfaceHit {
                point: [a * u, b * s * cp, b * s * sp],
                normal: [b * u / h, a * s * cp / h, a * s * sp / h],
            };
        }
    }
}

/// Outgoing velocity of a diffusely re-emitted molecule: Rayleigh-distributed
/// normal speed (flux-weighted half-Maxwellian) plus Gaussian tangential
/// components.
fn sample_emission(rng: &mut ChaCha8Rng, n: &[f64; 3], thermal: f64) -> [f64; 3] {
    let (t1, t2) = tangent_basis(n);
    let vn = thermal * (-2.0 * (1.0 - rng.random::<f64>()).ln()).sqrt();
    let a: f64 = thermal * rng.sample::<f64, _>(StandardNormal);
    let b: f64 = thermal * rng.sample::<f64, _>(StandardNormal);
    [
        vn * n[0] + a * t1[0] + b * t2[0],
        vn * n[1] + a * t1[1] + b * t2[1],
        vn * n[2] + a * t1[2] + b * t2[2],
    ]
}

fn tangent_basis(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let t1 = normalize(cross(n, &helper));
    let t2 = cross(n, &t1);
    (t1, t2)
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Flux-weighted generalized force (per molecular mass) for gas velocity
/// `xi + sign·u` relative to the surface, projected on motion `k`
/// (0: x force, 1: y force, 2: z torque).
fn transfer(
    xi: &[f64; 3],
    u: &[f64; 3],
    sign: f64,
    hit: &SurfaceHit,
    emitted: &[f64; 3],
    sigma: f64,
    k: usize,
) -> f64 {
    let c = [xi[0] + sign * u[0], xi[1] + sign * u[1], xi[2] + sign * u[2]];
    let n = &hit.normal;
    let cn = dot(&c, n);
    if cn >= 0.0 {
        return 0.0;
    }
    let weight = -cn;
    let specular = [2.0 * cn * n[0], 2.0 * cn * n[1], 2.0 * cn * n[2]];
    let diffuse = [c[0] - emitted[0], c[1] - emitted[1], c[2] - emitted[2]];
    let dp = [
        (1.0 - sigma) * specular[0] + sigma * diffuse[0],
        (1.0 - sigma) * specular[1] + sigma * diffuse[1],
        (1.0 - sigma) * specular[2] + sigma * diffuse[2],
    ];
    let g = match k {
        0 => dp[0],
        1 => dp[1],
        _ => hit.point[0] * dp[1] - hit.point[1] * dp[0],
    };
    weight * g
}

#[derive(Debug, Default, Clone)]
struct Moments {
    n: f64,
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Moments {
    fn push(&mut self, x: &[f64; 3]) {
        self.n += 1.0;
        for i in 0..3 {
            self.sum[i] += x[i];
            self.sum_sq[i] += x[i] * x[i];
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for i in 0..3 {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
    }

    fn mean_and_stderr(&self) -> ([f64; 3], [f64; 3]) {
        let mut mean = [0.0; 3];
        let mut err = [0.0; 3];
        for i in 0..3 {
            mean[i] = self.sum[i] / self.n;
            let var = (self.sum_sq[i] / self.n - mean[i] * mean[i]).max(0.0);
            err[i] = (var / self.n).sqrt();
        }
        (mean, err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::{damping_rates, epstein_sphere_rate};

    fn within(a: f64, b: f64, tol: f64) -> bool {
        (a / b - 1.0).abs() < tol
    }

    #[test]
    fn deterministic_per_seed() {
        let p = Particle::diamond(50e-9, 40e-9);
        let gas = GasEnvironment::air(1.0);
        let a = CollisionOracle::new(20_000, 5).estimate(&p, &gas);
        let b = CollisionOracle::new(20_000, 5).estimate(&p, &gas);
        assert_eq!(a.rates, b.rates);
        let c = CollisionOracle::new(20_000, 6).estimate(&p, &gas);
        assert_ne!(a.rates, c.rates);
    }

    #[test]
    fn sphere_reproduces_epstein() {
        let r = 50e-9;
        let p = Particle::diamond(r, r);
        let gas = GasEnvironment::air(1.0);
        let est = CollisionOracle::new(1_000_000, 11).estimate(&p, &gas);
        let eps = epstein_sphere_rate(r, 3500.0, &gas);
        assert!(within(est.rates.gamma_x, eps, 0.02), "{} vs {eps}", est.rates.gamma_x);
        assert!(within(est.rates.gamma_y, eps, 0.02), "{} vs {eps}", est.rates.gamma_y);
    }

    #[test]
    fn specular_sphere_has_no_torque() {
        let r = 50e-9;
        let p = Particle::diamond(r, r);
        let gas = GasEnvironment::new(1.0, 300.0, 4.81e-26, 0.0);
        let est = CollisionOracle::new(50_000, 3).estimate(&p, &gas);
        assert!(est.rates.gamma_theta.abs() < 1e-12);
    }

    #[test]
    fn prolate_closed_form_agrees() {
        let p = Particle::diamond(50e-9, 25e-9);
        let gas = GasEnvironment::air(1.0);
        let est = CollisionOracle::new(400_000, 17).estimate(&p, &gas);
        let cf = damping_rates(&p, &gas);
        assert!(within(est.rates.gamma_x, cf.gamma_x, 0.05));
        assert!(within(est.rates.gamma_y, cf.gamma_y, 0.05));
        assert!(within(est.rates.gamma_theta, cf.gamma_theta, 0.05));
    }
}
