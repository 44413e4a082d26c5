//! The two algebraic inequalities behind the curvature bounds, with a
//! numeric maximization oracle for their sharpness.

use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// Equality-pattern tolerance for [`LemmaOutcome::equality`].
pub const EQUALITY_TOL: f64 = 1e-10;
/// Slack allowed in [`LemmaOutcome::holds`].
pub const HOLDS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LemmaError {
    #[error("lemma needs n >= {min}, got {got}")]
    TooShort { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    #[default]
    ChenFirst,
    Delta22,
}

impl LemmaKind {
    pub fn min_n(self) -> usize {
        match self {
            LemmaKind::ChenFirst => 3,
            LemmaKind::Delta22 => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaKind::ChenFirst => "chen_first",
            LemmaKind::Delta22 => "delta22",
        }
    }
}

/// Bound constant for the first lemma. `Printed` is `(n−2)/(2(n−2)) = ½`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LemmaConstant {
    #[default]
    Corrected,
    Printed,
}

/// Coefficient of `(Σ a_i)²` in the bound.
pub fn bound_coefficient(kind: LemmaKind, constant: LemmaConstant, n: usize) -> Rational64 {
    let n = n as i64;
    match (kind, constant) {
        (LemmaKind::ChenFirst, LemmaConstant::Corrected) => Rational64::new(n - 2, 2 * (n - 1)),
        (LemmaKind::ChenFirst, LemmaConstant::Printed) => Rational64::new(1, 2),
        (LemmaKind::Delta22, _) => Rational64::new(n - 3, 2 * (n - 2)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub equality: bool,
}

impl LemmaOutcome {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

fn excluded_pairs(kind: LemmaKind) -> &'static [(usize, usize)] {
    match kind {
        LemmaKind::ChenFirst => &[(0, 1)],
        LemmaKind::Delta22 => &[(0, 1), (2, 3)],
    }
}

/// Values that must coincide in the equality case: `a1+a2, a3, …` or
/// `a1+a2, a3+a4, a5, …`.
pub fn pattern_values(kind: LemmaKind, a: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len());
    let mut i = 0;
    for &(p, q) in excluded_pairs(kind) {
        v.push(a[p] + a[q]);
        i = q + 1;
    }
    v.extend_from_slice(&a[i..]);
    v
}

/// Largest deviation of the pattern values from the first one.
pub fn pattern_residual(kind: LemmaKind, a: &[f64]) -> f64 {
    let v = pattern_values(kind, a);
    v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max)
}

fn lhs_f64(kind: LemmaKind, a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            s += a[i] * a[j];
        }
    }
    s - excluded_pairs(kind).iter().map(|&(p, q)| a[p] * a[q]).sum::<f64>()
}

fn check(kind: LemmaKind, n: usize) -> Result<(), LemmaError> {
    if n < kind.min_n() {
        return Err(LemmaError::TooShort { min: kind.min_n(), got: n });
    }
    Ok(())
}

pub fn evaluate(kind: LemmaKind, constant: LemmaConstant, a: &[f64]) -> Result<LemmaOutcome, LemmaError> {
    check(kind, a.len())?;
    let lhs = lhs_f64(kind, a);
    let s: f64 = a.iter().sum();
    let c = bound_coefficient(kind, constant, a.len());
    let rhs = *c.numer() as f64 / *c.denom() as f64 * s * s;
    Ok(LemmaOutcome { lhs, rhs, holds: lhs <= rhs + HOLDS_TOL, equality: pattern_residual(kind, a) < EQUALITY_TOL })
}

/// `Σ_{i<j} a_i a_j − a_1 a_2 ≤ (n−2)/(2(n−1)) (Σ a_i)²`.
pub fn lemma_chen_first(a: &[f64]) -> Result<LemmaOutcome, LemmaError> {
    evaluate(LemmaKind::ChenFirst, LemmaConstant::Corrected, a)
}

/// `Σ_{i<j} a_i a_j − a_1 a_2 − a_3 a_4 ≤ (n−3)/(2(n−2)) (Σ a_i)²`.
pub fn lemma_chen_delta22(a: &[f64]) -> Result<LemmaOutcome, LemmaError> {
    evaluate(LemmaKind::Delta22, LemmaConstant::Corrected, a)
}

/// Both sides in exact arithmetic.
pub fn evaluate_rational(
    kind: LemmaKind,
    constant: LemmaConstant,
    a: &[Rational64],
) -> Result<(Rational64, Rational64), LemmaError> {
    check(kind, a.len())?;
    let zero = Rational64::from_integer(0);
    let mut lhs = zero;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            lhs += a[i] * a[j];
        }
    }
    for &(p, q) in excluded_pairs(kind) {
        lhs -= a[p] * a[q];
    }
    let s = a.iter().fold(zero, |acc, &x| acc + x);
    Ok((lhs, bound_coefficient(kind, constant, a.len()) * s * s))
}

/// Result of maximizing the lemma's left side on `Σ a_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Maximization {
    pub kind: LemmaKind,
    pub n: usize,
    pub restarts: usize,
    /// Largest left side found.
    pub max_lhs: f64,
    /// Bound value at `Σ a_i = 1` for the corrected constant.
    pub bound: f64,
    /// Worst equality-pattern residual over all converged restarts.
    pub pattern_residual: f64,
    pub maximizer: Vec<f64>,
}

impl Maximization {
    /// Gap between the bound for `constant` and the attained maximum.
    pub fn gap(&self, constant: LemmaConstant) -> f64 {
        let c = bound_coefficient(self.kind, constant, self.n);
        *c.numer() as f64 / *c.denom() as f64 - self.max_lhs
    }
}

fn gradient(kind: LemmaKind, a: &[f64]) -> Vec<f64> {
    let s: f64 = a.iter().sum();
    let mut g: Vec<f64> = a.iter().map(|&x| s - x).collect();
    for &(p, q) in excluded_pairs(kind) {
        g[p] -= a[q];
        g[q] -= a[p];
    }
    g
}

/// Projected gradient ascent on the hyperplane `Σ a_i = 1` from `restarts`
/// random starts. The left side is concave there, so every run converges to
/// a maximizer.
pub fn maximize<R: Rng>(kind: LemmaKind, n: usize, restarts: usize, rng: &mut R) -> Result<Maximization, LemmaError> {
    check(kind, n)?;
    let step = 0.25;
    let mut best = Maximization {
        kind,
        n,
        restarts,
        max_lhs: f64::NEG_INFINITY,
        bound: {
            let c = bound_coefficient(kind, LemmaConstant::Corrected, n);
            *c.numer() as f64 / *c.denom() as f64
        },
        pattern_residual: 0.0,
        maximizer: Vec::new(),
    };
    for _ in 0..restarts {
        let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let shift = (a.iter().sum::<f64>() - 1.0) / n as f64;
        a.iter_mut().for_each(|x| *x -= shift);
        for _ in 0..20_000 {
            let g = gradient(kind, &a);
            let mean = g.iter().sum::<f64>() / n as f64;
            let mut moved = 0.0f64;
            for (x, gi) in a.iter_mut().zip(&g) {
                let d = step * (gi - mean);
                *x += d;
                moved = moved.max(d.abs());
            }
            if moved < 1e-15 {
                break;
            }
        }
        let value = lhs_f64(kind, &a);
        best.pattern_residual = best.pattern_residual.max(pattern_residual(kind, &a));
        if value > best.max_lhs {
            best.max_lhs = value;
            best.maximizer = a;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_lemma_examples() {
        let o = lemma_chen_first(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((o.lhs, o.rhs), (2.0, 2.25));
        assert!(o.holds && !o.equality);
        let o = lemma_chen_first(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!((o.lhs, o.rhs), (4.0, 4.0));
        assert!(o.holds && o.equality);
        let o = lemma_chen_first(&[0.0; 3]).unwrap();
        assert_eq!((o.lhs, o.rhs), (0.0, 0.0));
        assert_eq!(lemma_chen_first(&[1.0, 2.0]), Err(LemmaError::TooShort { min: 3, got: 2 }));
    }

    #[test]
    fn second_lemma_examples() {
        let o = lemma_chen_delta22(&[1.0; 4]).unwrap();
        assert_eq!((o.lhs, o.rhs), (4.0, 4.0));
        assert!(o.equality);
        let o = lemma_chen_delta22(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(o.lhs, 0.0);
        assert_abs_diff_eq!(o.rhs, 1.0 / 3.0, epsilon = 1e-16);
        assert!(o.holds && !o.equality);
        assert!(lemma_chen_delta22(&[0.0; 3]).is_err());
    }

    #[test]
    fn printed_constant_is_one_half() {
        for n in 3..9 {
            assert_eq!(bound_coefficient(LemmaKind::ChenFirst, LemmaConstant::Printed, n), Rational64::new(1, 2));
        }
        assert_eq!(bound_coefficient(LemmaKind::ChenFirst, LemmaConstant::Corrected, 3), Rational64::new(1, 4));
        assert_eq!(bound_coefficient(LemmaKind::Delta22, LemmaConstant::Corrected, 5), Rational64::new(1, 3));
    }

    #[test]
    fn maximizers_follow_the_equality_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [LemmaKind::ChenFirst, LemmaKind::Delta22] {
            for n in kind.min_n()..=7 {
                let m = maximize(kind, n, 20, &mut rng).unwrap();
                assert!((m.max_lhs - m.bound).abs() < 1e-9, "{kind:?} {n}: {} vs {}", m.max_lhs, m.bound);
                assert!(m.pattern_residual < 1e-6);
            }
        }
        let m = maximize(LemmaKind::ChenFirst, 5, 5, &mut rng).unwrap();
        assert!(m.gap(LemmaConstant::Printed) > 0.1);
    }

    fn brute_force_max(kind: LemmaKind, n: usize) -> f64 {
        // grid search on Σ a_i = 1 over the first coordinates, the rest
        // filled in to satisfy the constraint
        let steps: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.1).collect();
        let mut best = f64::NEG_INFINITY;
        let mut a = vec![0.0; n];
        let free = n - 1;
        let total = steps.len().pow(free as u32);
        for mut idx in 0..total {
            for x in a.iter_mut().take(free) {
                *x = steps[idx % steps.len()];
                idx /= steps.len();
            }
            a[n - 1] = 1.0 - a[..free].iter().sum::<f64>();
            best = best.max(lhs_f64(kind, &a));
        }
        best
    }

    #[test]
    fn brute_force_oracle_agrees_with_the_bound() {
        // on this grid the equality patterns are representable
        let m = brute_force_max(LemmaKind::ChenFirst, 3);
        assert_abs_diff_eq!(m, 0.25, epsilon = 1e-12);
        let m = brute_force_max(LemmaKind::Delta22, 4);
        assert_abs_diff_eq!(m, 0.25, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn lemmas_hold(a in prop::collection::vec(-10.0f64..10.0, 3..9)) {
            prop_assert!(lemma_chen_first(&a).unwrap().holds);
            if a.len() >= 4 {
                prop_assert!(lemma_chen_delta22(&a).unwrap().holds);
            }
        }

        #[test]
        fn sides_are_homogeneous(a in prop::collection::vec(-50i64..50, 4..9), num in -9i64..9, den in 1i64..9) {
            let a: Vec<Rational64> = a.into_iter().map(|x| Rational64::new(x, 7)).collect();
            let l = Rational64::new(num, den);
            let scaled: Vec<Rational64> = a.iter().map(|&x| x * l).collect();
            for kind in [LemmaKind::ChenFirst, LemmaKind::Delta22] {
                let (lhs, rhs) = evaluate_rational(kind, LemmaConstant::Corrected, &a).unwrap();
                let (ls, rs) = evaluate_rational(kind, LemmaConstant::Corrected, &scaled).unwrap();
                prop_assert_eq!(ls, lhs * l * l);
                prop_assert_eq!(rs, rhs * l * l);
                prop_assert!(lhs <= rhs);
            }
        }
    }
}
