//! Arithmetic of the cubic family f(z) = λz + bz² + z³.
//!
//! Everything here is a pure function of the map coefficients: evaluation in
//! a fixed Horner order (so rasters are bit-reproducible), derivatives,
//! critical points, closed-form preimages with Newton polishing, a provable
//! escape bound, and orbit iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance on |b² − 3λ| under which the critical pair is
/// considered degenerate. Double-precision discriminant noise floor.
pub const DEGENERACY_REL_TOL: f64 = 1e-14;

/// Relative residual tolerance for the cubic preimage solver.
pub const PREIMAGE_REL_TOL: f64 = 1e-10;

/// The cubic f(z) = λz + bz² + z³. The point 0 is fixed with multiplier λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicMap {
    pub lambda: Complex64,
    pub b: Complex64,
}

/// Roots of f' = 3z² + 2bz + λ. When b² = 3λ the two roots collide.
#[derive(Clone, Copy, Debug)]
pub struct CriticalPair {
    pub first: Complex64,
    pub second: Complex64,
    pub degenerate: bool,
}

impl CriticalPair {
    pub fn points(&self) -> [Complex64; 2] {
        [self.first, self.second]
    }
}

/// What happened to an orbit within its iteration budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitFate {
    /// |z_n| exceeded the escape radius (or overflowed) at step n.
    EscapedAt(u32),
    /// |z_n| fell below the convergence tolerance at step n with |λ| < 1.
    ConvergedToZeroAt(u32),
    /// Budget ran out with the orbit still bounded.
    BoundedUnresolved,
}

impl OrbitFate {
    pub fn escaped(&self) -> bool {
        matches!(self, OrbitFate::EscapedAt(_))
    }

    pub fn converged(&self) -> bool {
        matches!(self, OrbitFate::ConvergedToZeroAt(_))
    }
}

/// An orbit with its stored points; kernels that only need the fate use
/// [`CubicMap::orbit_fate`] instead.
#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub points: Vec<Complex64>,
    pub fate: OrbitFate,
}

impl CubicMap {
    pub fn new(lambda: Complex64, b: Complex64) -> Self {
        CubicMap { lambda, b }
    }

    pub fn from_re(lambda: f64, b: f64) -> Self {
        CubicMap::new(Complex64::new(lambda, 0.0), Complex64::new(b, 0.0))
    }

    /// f(z) = z·(λ + z·(b + z)). The Horner order is fixed; do not reassociate.
    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * (self.lambda + z * (self.b + z))
    }

    /// f'(z) = λ + z·(2b + 3z).
    #[inline]
    pub fn deriv(&self, z: Complex64) -> Complex64 {
        self.lambda + z * (self.b * 2.0 + z * 3.0)
    }

    /// f''(z) = 2b + 6z.
    #[inline]
    pub fn second_deriv(&self, z: Complex64) -> Complex64 {
        self.b * 2.0 + z * 6.0
    }

    /// Both roots of f', each polished by one Newton step on f'.
    ///
    /// Degeneracy is declared when |b² − 3λ| ≤ 1e-14·max(1, |b|²); the double
    /// root −b/3 is then returned twice.
    pub fn critical_points(&self) -> CriticalPair {
        let disc = self.b * self.b - self.lambda * 3.0;
        if disc.norm() <= DEGENERACY_REL_TOL * self.b.norm_sqr().max(1.0) {
            let c = -self.b / 3.0;
            return CriticalPair {
                first: c,
                second: c,
                degenerate: true,
            };
        }
        let s = disc.sqrt();
        let mut roots = [(-self.b + s) / 3.0, (-self.b - s) / 3.0];
        for r in roots.iter_mut() {
            let dd = self.second_deriv(*r);
            if dd.norm_sqr() > 0.0 {
                *r -= self.deriv(*r) / dd;
            }
        }
        CriticalPair {
            first: roots[0],
            second: roots[1],
            degenerate: false,
        }
    }

    /// Radius R with |z| ≥ R ⟹ |f(z)| ≥ 2|z|.
    ///
    /// From |f(z)| ≥ |z|³ − |b||z|² − |λ||z|, the doubling condition reduces
    /// to r² − |b|r − (|λ| + 2) ≥ 0, whose positive root is the value below.
    pub fn escape_radius(&self) -> f64 {
        let bb = self.b.norm();
        let r = 0.5 * (bb + (bb * bb + 4.0 * (self.lambda.norm() + 2.0)).sqrt());
        r.max(2.0)
    }

    /// The three roots of f(z) = w, with multiplicity.
    ///
    /// Closed-form depressed cubic (branch picked by largest-magnitude
    /// intermediate), then at least two Newton polish steps per root. Every
    /// returned root satisfies |f(r) − w| ≤ 1e-10·max(1, |w|).
    pub fn preimages(&self, w: Complex64) -> Result<[Complex64; 3]> {
        // z = t − b/3 turns z³ + bz² + λz − w into t³ + pt + q.
        let b = self.b;
        let p = self.lambda - b * b / 3.0;
        let q = b * b * b * (2.0 / 27.0) - self.lambda * b / 3.0 - w;
        let mut roots = depressed_cubic_roots(p, q).map(|t| t - b / 3.0);

        let tol = PREIMAGE_REL_TOL * w.norm().max(1.0);
        for r in roots.iter_mut() {
            let mut steps = 0;
            loop {
                let g = self.eval(*r) - w;
                if steps >= 2 && (g.norm() <= tol || steps >= 8) {
                    break;
                }
                let d = self.deriv(*r);
                if d.norm_sqr() < f64::MIN_POSITIVE {
                    // Multiple root: the closed form already sits on it and
                    // f is flat there, so the residual check below decides.
                    break;
                }
                *r -= g / d;
                steps += 1;
            }
        }

        let mut worst = 0.0f64;
        for r in roots {
            let res = (self.eval(r) - w).norm();
            if !(res <= tol) {
                worst = if res.is_finite() { res.max(worst) } else { f64::INFINITY };
            }
        }
        if worst > 0.0 {
            return Err(Error::SolverFailure {
                residual: worst,
                tolerance: tol,
            });
        }
        Ok(roots)
    }

    /// Iterate from z0 until escape, convergence to 0, or budget exhaustion.
    /// Overflow counts as escape at that step.
    pub fn orbit_fate(&self, z0: Complex64, max_iter: u32, conv_tol: f64) -> OrbitFate {
        let r2 = {
            let r = self.escape_radius();
            r * r
        };
        let attracting = self.lambda.norm() < 1.0;
        let ct2 = conv_tol * conv_tol;
        let mut z = z0;
        for n in 0..=max_iter {
            let m2 = z.norm_sqr();
            if !m2.is_finite() || m2 > r2 {
                return OrbitFate::EscapedAt(n);
            }
            if attracting && m2 < ct2 {
                return OrbitFate::ConvergedToZeroAt(n);
            }
            z = self.eval(z);
        }
        OrbitFate::BoundedUnresolved
    }

    /// Like [`orbit_fate`](Self::orbit_fate) but keeps the visited points,
    /// up to and including the deciding one.
    pub fn orbit(&self, z0: Complex64, max_iter: u32, conv_tol: f64) -> OrbitRecord {
        let r2 = {
            let r = self.escape_radius();
            r * r
        };
        let attracting = self.lambda.norm() < 1.0;
        let ct2 = conv_tol * conv_tol;
        let mut points = Vec::new();
        let mut z = z0;
        for n in 0..=max_iter {
            points.push(z);
            let m2 = z.norm_sqr();
            if !m2.is_finite() || m2 > r2 {
                return OrbitRecord {
                    points,
                    fate: OrbitFate::EscapedAt(n),
                };
            }
            if attracting && m2 < ct2 {
                return OrbitRecord {
                    points,
                    fate: OrbitFate::ConvergedToZeroAt(n),
                };
            }
            z = self.eval(z);
        }
        OrbitRecord {
            points,
            fate: OrbitFate::BoundedUnresolved,
        }
    }
}

/// All three roots of t³ + pt + q = 0.
///
/// Cardano with the cube root branch chosen by the larger-magnitude
/// intermediate, which avoids the catastrophic cancellation in −q/2 ± s.
fn depressed_cubic_roots(p: Complex64, q: Complex64) -> [Complex64; 3] {
    if p.norm_sqr() == 0.0 && q.norm_sqr() == 0.0 {
        return [Complex64::default(); 3];
    }
    let half_q = q * 0.5;
    let disc = half_q * half_q + (p / 3.0).powu(3);
    let s = disc.sqrt();
    let c1 = -half_q + s;
    let c2 = -half_q - s;
    let u3 = if c1.norm_sqr() >= c2.norm_sqr() { c1 } else { c2 };
    if u3.norm_sqr() == 0.0 {
        // Only reachable when p = q = 0, handled above; kept as a guard.
        return [Complex64::default(); 3];
    }
    let u = u3.cbrt();
    let v = -p / (u * 3.0);
    let omega = Complex64::new(-0.5, 0.75f64.sqrt());
    let omega_bar = omega.conj();
    [u + v, u * omega + v * omega_bar, u * omega_bar + v * omega]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_c(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
        c(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn eval_known_values() {
        assert_eq!(CubicMap::from_re(0.0, 0.0).eval(c(2.0, 0.0)), c(8.0, 0.0));
        assert_eq!(CubicMap::from_re(1.0, 0.0).eval(c(1.0, 0.0)), c(2.0, 0.0));
        let m = CubicMap::new(c(0.0, 1.0), c(1.0, 0.0));
        assert_eq!(m.eval(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn deriv_known_values() {
        assert_eq!(CubicMap::from_re(0.5, 0.0).deriv(c(0.0, 0.0)), c(0.5, 0.0));
        assert_eq!(CubicMap::from_re(0.0, 0.0).deriv(c(1.0, 0.0)), c(3.0, 0.0));
        let d = CubicMap::from_re(0.0, 3.0).deriv(c(-2.0, 0.0));
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn critical_points_cases() {
        let pure = CubicMap::from_re(0.0, 0.0).critical_points();
        assert!(pure.degenerate);
        assert_eq!(pure.first, c(0.0, 0.0));

        let pair = CubicMap::from_re(0.0, 3.0).critical_points();
        assert!(!pair.degenerate);
        let mut roots = [pair.first.re, pair.second.re];
        roots.sort_by(f64::total_cmp);
        assert!((roots[0] + 2.0).abs() < 1e-14);
        assert!(roots[1].abs() < 1e-14);

        let deg = CubicMap::from_re(3.0, 3.0).critical_points();
        assert!(deg.degenerate);
        assert!((deg.first - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn critical_points_kill_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let m = CubicMap::new(random_c(&mut rng, 10.0), random_c(&mut rng, 10.0));
            let pair = m.critical_points();
            if pair.degenerate {
                continue;
            }
            let bound = 1e-12 * m.b.norm().max(m.lambda.norm()).max(1.0);
            assert!(m.deriv(pair.first).norm() <= bound);
            assert!(m.deriv(pair.second).norm() <= bound);
        }
    }

    #[test]
    fn preimages_cube_roots_of_eight() {
        let roots = CubicMap::from_re(0.0, 0.0).preimages(c(8.0, 0.0)).unwrap();
        let mut expected = vec![
            c(2.0, 0.0),
            c(-1.0, 3.0f64.sqrt()),
            c(-1.0, -3.0f64.sqrt()),
        ];
        for r in roots {
            let i = expected
                .iter()
                .position(|e| (e - r).norm() < 1e-9)
                .expect("root matches a cube root of 8");
            expected.remove(i);
        }
        assert!(expected.is_empty());
    }

    #[test]
    fn preimages_triple_root() {
        let roots = CubicMap::from_re(0.0, 0.0).preimages(c(0.0, 0.0)).unwrap();
        for r in roots {
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn preimages_factored_quadratic() {
        // z³ + 2z² + 0.5z = 0 has roots 0 and −1 ± √0.5.
        let roots = CubicMap::from_re(0.5, 2.0).preimages(c(0.0, 0.0)).unwrap();
        let mut expected = vec![
            c(0.0, 0.0),
            c(-1.0 + 0.5f64.sqrt(), 0.0),
            c(-1.0 - 0.5f64.sqrt(), 0.0),
        ];
        for r in roots {
            let i = expected
                .iter()
                .position(|e| (e - r).norm() < 1e-9)
                .expect("root of z(z^2+2z+1/2)");
            expected.remove(i);
        }
        assert!(expected.is_empty());
    }

    #[test]
    fn preimages_overflowing_target_fails_cleanly() {
        let m = CubicMap::from_re(0.5, 1.0);
        assert!(m.preimages(c(1e308, 1e308)).is_err());
    }

    #[test]
    fn preimage_residuals_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let m = CubicMap::new(random_c(&mut rng, 10.0), random_c(&mut rng, 10.0));
            let w = random_c(&mut rng, 10.0);
            let tol = PREIMAGE_REL_TOL * w.norm().max(1.0);
            let roots = m.preimages(w).unwrap();
            for r in roots {
                assert!((m.eval(r) - w).norm() <= tol);
            }
        }
    }

    #[test]
    fn escape_radius_values() {
        assert_eq!(CubicMap::from_re(0.0, 0.0).escape_radius(), 2.0);
        assert_eq!(CubicMap::from_re(1.0, 0.0).escape_radius(), 2.0);
        let r = CubicMap::from_re(0.0, 10.0).escape_radius();
        assert!((r - (10.0 + 108.0f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn escape_radius_doubles_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5000 {
            let m = CubicMap::new(random_c(&mut rng, 10.0), random_c(&mut rng, 10.0));
            let r = m.escape_radius();
            let modulus = rng.gen_range(r..r * 2.0 + 4.0);
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = Complex64::from_polar(modulus, angle);
            assert!(m.eval(z).norm() >= 2.0 * z.norm() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn orbit_fates() {
        let cube = CubicMap::from_re(0.0, 0.0);
        match cube.orbit_fate(c(0.5, 0.0), 100, 1e-8) {
            OrbitFate::ConvergedToZeroAt(n) => assert!(n <= 10),
            other => panic!("expected convergence, got {other:?}"),
        }
        match cube.orbit_fate(c(3.0, 0.0), 100, 1e-8) {
            OrbitFate::EscapedAt(n) => assert!(n <= 2),
            other => panic!("expected escape, got {other:?}"),
        }
        // The free critical point of (λ=0.5, b=10) escapes.
        let m = CubicMap::from_re(0.5, 10.0);
        let cp = m.critical_points();
        let far = if cp.first.norm() > cp.second.norm() {
            cp.first
        } else {
            cp.second
        };
        match m.orbit_fate(far, 1000, 1e-8) {
            OrbitFate::EscapedAt(n) => assert!(n <= 1000),
            other => panic!("expected escape of omega_2, got {other:?}"),
        }
    }

    #[test]
    fn orbit_record_matches_fate() {
        let m = CubicMap::from_re(0.5, 0.0);
        let rec = m.orbit(c(0.3, 0.1), 200, 1e-8);
        match rec.fate {
            OrbitFate::ConvergedToZeroAt(n) => {
                assert_eq!(rec.points.len() as u32, n + 1);
                assert!(rec.points[n as usize].norm() < 1e-8);
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn eval_odd_symmetry_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..2000 {
            let lambda = random_c(&mut rng, 10.0);
            let b = random_c(&mut rng, 10.0);
            let z = random_c(&mut rng, 10.0);
            let plus = CubicMap::new(lambda, b).eval(z);
            let minus = CubicMap::new(lambda, -b).eval(-z);
            assert_eq!(minus, -plus);
        }
    }
}
