//! Shared test oracles, independent of the library's computation paths:
//! a dense linear-system solve for the reflection, characteristic
//! polynomials with Durand-Kerner root finding for poles and zeros of
//! the nested response, and a deterministic parameter generator.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use cmm::hz_to_angular;
use cmm::model::{
    CavityParams, DriveParams, MechanicalMode, ModeParams, SystemParams,
};
use cmm::response::DrivenOperatingPoint;

/// SplitMix64: tiny deterministic generator for reproducible parameter
/// sets.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// A random driven system with 0-3 mechanical modes, plus a matching
/// drive.
pub fn random_system(rng: &mut SplitMix64, mechanical_modes: usize) -> (SystemParams, DriveParams) {
    let omega_a = hz_to_angular(rng.range(5.0e9, 15.0e9));
    let kappa_int = hz_to_angular(rng.range(0.1e6, 4.0e6));
    let kappa_e = hz_to_angular(rng.range(0.1e6, 4.0e6));
    let omega_m = omega_a + hz_to_angular(rng.range(-20.0e6, 20.0e6));
    let kappa_m = hz_to_angular(rng.range(0.05e6, 3.0e6));
    let g_ma = hz_to_angular(rng.range(0.0, 20.0e6));
    let mechanics: Vec<MechanicalMode> = (0..mechanical_modes)
        .map(|_| {
            MechanicalMode::new(
                hz_to_angular(rng.range(1.0e6, 30.0e6)),
                hz_to_angular(rng.range(10.0, 1.0e4)),
                hz_to_angular(rng.range(0.5e-3, 5.0e-3)),
            )
            .unwrap()
        })
        .collect();
    let system = SystemParams::new(
        CavityParams::new(omega_a, kappa_int, kappa_e).unwrap(),
        ModeParams::new(omega_m, kappa_m).unwrap(),
        g_ma,
        mechanics,
    )
    .unwrap();
    let omega_d = omega_a - hz_to_angular(rng.range(1.0e6, 30.0e6));
    // Amplitudes giving enhanced couplings up to ~2π·100 kHz.
    let drive = DriveParams::new(
        omega_d,
        rng.range(-10.0, 10.0),
        rng.range(1.0e5, 3.0e7),
        0.0,
    )
    .unwrap();
    (system, drive)
}

/// Reflection by direct dense solve of the (2 + N)-mode linear system
/// in the drive frame (RWA). Input-output: r = √(2κ_e)·a − 1 for a unit
/// incident amplitude.
pub fn dense_reflection(system: &SystemParams, op: &DrivenOperatingPoint, delta: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let n = 2 + op.sidebands.len();
    let mut s = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    s[(0, 0)] = Complex64::new(system.cavity.kappa_total(), op.delta_a - delta);
    s[(0, 1)] = i * system.g_ma;
    s[(1, 0)] = i * system.g_ma;
    s[(1, 1)] = Complex64::new(system.magnon.kappa, op.delta_m - delta);
    for (j, &(omega_b, kappa_b, g)) in op.sidebands.iter().enumerate() {
        let k = 2 + j;
        s[(k, k)] = Complex64::new(kappa_b, omega_b - delta);
        s[(1, k)] = i * g;
        s[(k, 1)] = i * g;
    }
    let root_2ke = (2.0 * system.cavity.kappa_e).sqrt();
    let mut rhs = DVector::from_element(n, Complex64::new(0.0, 0.0));
    rhs[0] = Complex64::new(root_2ke, 0.0);
    let sol = s.lu().solve(&rhs).expect("coupled-mode system solvable");
    root_2ke * sol[0] - 1.0
}

/// Undriven two-mode dense-solve reflection at absolute ω.
pub fn dense_reflection_two_mode(system: &SystemParams, omega: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let mut s = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
    s[(0, 0)] = Complex64::new(system.cavity.kappa_total(), system.cavity.omega_a - omega);
    s[(0, 1)] = i * system.g_ma;
    s[(1, 0)] = i * system.g_ma;
    s[(1, 1)] = Complex64::new(system.magnon.kappa, system.magnon.omega - omega);
    let root_2ke = (2.0 * system.cavity.kappa_e).sqrt();
    let mut rhs = DVector::from_element(2, Complex64::new(0.0, 0.0));
    rhs[0] = Complex64::new(root_2ke, 0.0);
    let sol = s.lu().solve(&rhs).expect("solvable");
    root_2ke * sol[0] - 1.0
}

/// Eigenvalues of the explicit 2x2 coupled-mode matrix
/// [[ω_a − iκ_a, g], [g, ω_m − iκ_m]] from a generic eigensolver.
pub fn generic_two_mode_eigenvalues(
    omega_a: f64,
    kappa_a: f64,
    omega_m: f64,
    kappa_m: f64,
    g: f64,
) -> Vec<Complex64> {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(omega_a, -kappa_a),
            Complex64::new(g, 0.0),
            Complex64::new(g, 0.0),
            Complex64::new(omega_m, -kappa_m),
        ],
    );
    let t = m.schur().unpack().1;
    let mut eig = vec![t[(0, 0)], t[(1, 1)]];
    eig.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    eig
}

// Polynomials as ascending complex coefficient vectors.

pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

pub fn poly_scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|c| c * s).collect()
}

pub fn poly_eval(a: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in a.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// All roots by Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let lead = *coeffs.last().unwrap();
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let n = monic.len() - 1;
    if n == 0 {
        return vec![];
    }
    // Cauchy-style radius bound for the initial ring.
    let radius = 1.0
        + monic[..n]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32 + 1) / seed.norm().powi(k as i32) * radius * 0.7)
        .collect();
    for _ in 0..800 {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    denom *= roots[k] - roots[j];
                }
            }
            if denom.norm_sqr() == 0.0 {
                continue;
            }
            let step = poly_eval(&monic, roots[k]) / denom;
            roots[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 {
            break;
        }
    }
    roots
}

/// Linear factor κ + i(ω₀ − δ) of the scaled variable u = (δ − shift)/scale.
fn susceptibility_factor(kappa: f64, omega0: f64, shift: f64, scale: f64) -> Vec<Complex64> {
    vec![
        Complex64::new(kappa, omega0 - shift),
        Complex64::new(0.0, -scale),
    ]
}

struct ScaledPoly {
    coeffs: Vec<Complex64>,
    shift: f64,
    scale: f64,
}

/// Numerator and denominator polynomials of the nested three-mode
/// response in δ: den = A·(BQ + Σ G_j² Q_j) + g²·Q and
/// num = (2κ_e − A)·(BQ + Σ G_j² Q_j) − g²·Q, with
/// A, B, q_j the cavity, magnon, and phonon susceptibility factors and
/// Q_j = Q/q_j.
fn response_polys(system: &SystemParams, op: &DrivenOperatingPoint) -> (ScaledPoly, ScaledPoly) {
    let mut centers = vec![op.delta_a, op.delta_m];
    centers.extend(op.sidebands.iter().map(|s| s.0));
    let shift = centers.iter().sum::<f64>() / centers.len() as f64;
    let spread = centers
        .iter()
        .map(|c| (c - shift).abs())
        .fold(0.0f64, f64::max);
    let scale = spread
        .max(system.g_ma)
        .max(system.cavity.kappa_total())
        .max(system.magnon.kappa)
        .max(1.0);

    let a = susceptibility_factor(system.cavity.kappa_total(), op.delta_a, shift, scale);
    let two_ke_minus_a = poly_add(
        &[Complex64::new(2.0 * system.cavity.kappa_e, 0.0)],
        &poly_scale(&a, Complex64::new(-1.0, 0.0)),
    );
    let b = susceptibility_factor(system.magnon.kappa, op.delta_m, shift, scale);
    let qs: Vec<Vec<Complex64>> = op
        .sidebands
        .iter()
        .map(|&(omega_b, kappa_b, _)| susceptibility_factor(kappa_b, omega_b, shift, scale))
        .collect();
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for qj in &qs {
        q = poly_mul(&q, qj);
    }
    // W·Q = B·Q + Σ_j G_j²·(Q / q_j)
    let mut wq = poly_mul(&b, &q);
    for (j, &(_, _, g)) in op.sidebands.iter().enumerate() {
        let mut qq = vec![Complex64::new(1.0, 0.0)];
        for (k, qk) in qs.iter().enumerate() {
            if k != j {
                qq = poly_mul(&qq, qk);
            }
        }
        wq = poly_add(&wq, &poly_scale(&qq, Complex64::new(g * g, 0.0)));
    }
    let g2q = poly_scale(&q, Complex64::new(system.g_ma * system.g_ma, 0.0));
    let den = poly_add(&poly_mul(&a, &wq), &g2q);
    let num = poly_add(
        &poly_mul(&two_ke_minus_a, &wq),
        &poly_scale(&g2q, Complex64::new(-1.0, 0.0)),
    );
    (
        ScaledPoly {
            coeffs: num,
            shift,
            scale,
        },
        ScaledPoly {
            coeffs: den,
            shift,
            scale,
        },
    )
}

fn roots_of(poly: &ScaledPoly) -> Vec<Complex64> {
    let mut roots: Vec<Complex64> = poly_roots(&poly.coeffs)
        .into_iter()
        .map(|u| Complex64::new(poly.shift, 0.0) + poly.scale * u)
        .collect();
    roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    roots
}

/// Complex poles of the driven reflection in δ (zeros of the nested
/// denominator), from the generic polynomial root finder.
pub fn response_poles(system: &SystemParams, op: &DrivenOperatingPoint) -> Vec<Complex64> {
    roots_of(&response_polys(system, op).1)
}

/// Complex zeros of the driven reflection in δ (roots of the numerator),
/// from the generic polynomial root finder.
pub fn response_zeros(system: &SystemParams, op: &DrivenOperatingPoint) -> Vec<Complex64> {
    roots_of(&response_polys(system, op).0)
}
