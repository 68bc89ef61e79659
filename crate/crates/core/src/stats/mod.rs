//! Statistics for comparing submissions and judging leaderboards.

mod special;

pub use special::{ln_beta, ln_gamma, reg_inc_beta, reg_inc_beta_split};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with the `n - 1` normalization.
pub fn sample_std(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::input(format!(
            "sample standard deviation needs at least 2 values, got {}",
            v.len()
        )));
    }
    // shifted two-pass: constant input gives exactly zero
    let shift = v[0];
    let m = v.iter().map(|x| x - shift).sum::<f64>() / v.len() as f64;
    let ss: f64 = v.iter().map(|x| (x - shift - m).powi(2)).sum();
    Ok((ss / (v.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    /// Upper-tail probability `P(T >= statistic)`.
    pub p_value_one_sided: f64,
}

impl TTestResult {
    pub fn p_value_two_sided(&self) -> f64 {
        (2.0 * self.p_value_one_sided.min(1.0 - self.p_value_one_sided)).min(1.0)
    }
}

/// Paired t-test: `t = sqrt(n) * mean(u - v) / std(u - v)`.
///
/// The one-sided p-value tests whether `u` is larger than `v` on average.
/// Zero-variance differences are an error rather than an infinite statistic.
pub fn paired_t(u: &[f64], v: &[f64]) -> Result<TTestResult> {
    if u.len() != v.len() {
        return Err(Error::input(format!(
            "paired vectors differ in length: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let sd = sample_std(&diff)?;
    if sd == 0.0 {
        return Err(Error::DegenerateDifference);
    }
    let n = diff.len();
    let statistic = (n as f64).sqrt() * mean(&diff) / sd;
    let dof = (n - 1) as u64;
    Ok(TTestResult {
        statistic,
        degrees_of_freedom: dof,
        p_value_one_sided: t_to_p(statistic, dof),
    })
}

/// Upper-tail probability of Student's t with `dof` degrees of freedom.
///
/// Uses `P(T > t) = I_{dof/(dof+t^2)}(dof/2, 1/2) / 2` for `t > 0` at every
/// `dof`; there is no normal approximation.
pub fn t_to_p(statistic: f64, dof: u64) -> f64 {
    assert!(dof >= 1, "Student t needs at least one degree of freedom");
    if statistic.is_nan() {
        return f64::NAN;
    }
    if statistic == 0.0 {
        return 0.5;
    }
    let nu = dof as f64;
    let t2 = statistic * statistic;
    let tail = 0.5 * reg_inc_beta_split(nu / (nu + t2), t2 / (nu + t2), nu / 2.0, 0.5);
    if statistic > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// One-sided level of the parameter-free Ladder's acceptance test.
///
/// A submission is accepted when its mean paired difference is below
/// `-std/sqrt(n)`, i.e. when `t < -1`; under the null that happens with
/// probability `P(T > 1)`, about 0.16 for large `n`. Informational only.
pub fn ladder_pf_implied_level(n: u64) -> f64 {
    t_to_p(1.0, n.saturating_sub(1).max(1))
}

/// Multiplies each p-value by the number of comparisons, capped at 1.
pub fn bonferroni(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len() as f64;
    p_values.iter().map(|p| (p * m).min(1.0)).collect()
}

/// Uniform accuracy `epsilon` for `k` fixed queries on `n` samples at
/// failure probability `delta`: the solution of `2k exp(-2 eps^2 n) = delta`.
pub fn hoeffding_epsilon(k: u64, n: u64, delta: f64) -> Result<f64> {
    if k == 0 || n == 0 {
        return Err(Error::input("hoeffding_epsilon needs k >= 1 and n >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::input(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(((2.0 * k as f64 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Hoeffding plus union bound for `k` non-adaptive queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub epsilon: f64,
    pub k: u64,
    pub n: u64,
    pub delta: f64,
}

impl ErrorEnvelope {
    pub fn new(k: u64, n: u64, delta: f64) -> Result<Self> {
        Ok(ErrorEnvelope {
            epsilon: hoeffding_epsilon(k, n, delta)?,
            k,
            n,
            delta,
        })
    }

    /// `2k exp(-2 eps^2 n)`; at most `delta` by construction.
    pub fn failure_bound(&self) -> f64 {
        2.0 * self.k as f64 * (-2.0 * self.epsilon * self.epsilon * self.n as f64).exp()
    }
}

/// `max_t |min_{i<=t} true_losses[i] - reported[t]|`.
pub fn leaderboard_error(true_losses: &[f64], reported: &[f64]) -> Result<f64> {
    if true_losses.len() != reported.len() {
        return Err(Error::input(format!(
            "{} true losses but {} reported values",
            true_losses.len(),
            reported.len()
        )));
    }
    if true_losses.is_empty() {
        return Err(Error::input("leaderboard error of an empty sequence"));
    }
    let mut best = f64::INFINITY;
    let mut worst_gap = 0.0_f64;
    for (&truth, &r) in true_losses.iter().zip(reported) {
        best = best.min(truth);
        worst_gap = worst_gap.max((best - r).abs());
    }
    Ok(worst_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Independent tail probability by quadrature. With `x = sqrt(nu) tan(theta)`
    /// the Student density becomes proportional to `cos^(nu-1)(theta)` on
    /// `(-pi/2, pi/2)`, so both integrals are over a bounded interval.
    fn quadrature_tail(t: f64, nu: f64) -> f64 {
        let f = |th: f64| th.cos().powf(nu - 1.0);
        let simpson = |a: f64, b: f64, panels: usize| {
            let h = (b - a) / panels as f64;
            let mut s = f(a) + f(b);
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let theta0 = (t / nu.sqrt()).atan();
        simpson(theta0, PI / 2.0, 200_000) / simpson(-PI / 2.0, PI / 2.0, 400_000)
    }

    #[test]
    fn sample_std_cases() {
        assert!((sample_std(&[0.1, 0.2, 0.3]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(sample_std(&[0.4; 7]).unwrap(), 0.0);
        assert!((sample_std(&[0.0, 1.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(sample_std(&[1.0]).is_err());
    }

    #[test]
    fn paired_t_cases() {
        let r = paired_t(&[1.0, -1.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value_one_sided, 0.5);
        assert_eq!(r.degrees_of_freedom, 3);

        let r = paired_t(&[0.1, 0.2, 0.3], &[0.0; 3]).unwrap();
        assert!((r.statistic - 3f64.sqrt() * 2.0).abs() < 1e-12);
        assert!((r.statistic - 3.4641).abs() < 1e-4);

        assert!(matches!(
            paired_t(&[0.3, 0.5], &[0.3, 0.5]),
            Err(Error::DegenerateDifference)
        ));
        assert!(paired_t(&[0.3, 0.5], &[0.3]).is_err());
    }

    #[test]
    fn t_to_p_cases() {
        assert_eq!(t_to_p(0.0, 1), 0.5);
        assert_eq!(t_to_p(0.0, 999), 0.5);
        assert!((t_to_p(1.0, 1) - 0.25).abs() < 1e-12);
        // near zero the tail is 1/2 - t/π to first order
        assert!((t_to_p(1e-8, 1) - (0.5 - 1e-8 / PI)).abs() < 1e-16);
        assert!((t_to_p(-1e-8, 1) - (0.5 + 1e-8 / PI)).abs() < 1e-16);
        let oracle = quadrature_tail(3.4641, 2.0);
        assert!((t_to_p(3.4641, 2) - oracle).abs() < 1e-9);
        // dof = 2 has the closed form (1 - t / sqrt(t^2 + 2)) / 2.
        let t: f64 = 3.4641;
        assert!((t_to_p(t, 2) - 0.5 * (1.0 - t / (t * t + 2.0).sqrt())).abs() < 1e-13);
    }

    #[test]
    fn t_to_p_matches_quadrature_across_dof() {
        for dof in [2u64, 5, 30, 1000] {
            for &t in &[-2.5, -0.7, 0.3, 1.0, 2.0, 4.5] {
                let got = t_to_p(t, dof);
                let want = quadrature_tail(t, dof as f64);
                assert!((got - want).abs() < 1e-8, "dof {dof} t {t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn implied_level_is_about_fifteen_percent() {
        let level = ladder_pf_implied_level(4000);
        assert!((level - 0.1587).abs() < 1e-3, "{level}");
    }

    #[test]
    fn bonferroni_cases() {
        assert_eq!(bonferroni(&[0.01, 0.04]), vec![0.02, 0.08]);
        assert_eq!(bonferroni(&[0.9]), vec![0.9]);
        let c = bonferroni(&[0.3, 0.6, 0.9]);
        assert!((c[0] - 0.9).abs() < 1e-15);
        assert_eq!(&c[1..], &[1.0, 1.0]);
    }

    #[test]
    fn hoeffding_cases() {
        let eps = hoeffding_epsilon(1000, 4000, 0.05).unwrap();
        assert!((eps - (40000f64.ln() / 8000.0).sqrt()).abs() < 1e-15);
        assert!((eps - 0.0364).abs() < 5e-5);
        assert!(hoeffding_epsilon(1, 1_000_000_000, 0.05).unwrap() < 1e-4);
        let a = hoeffding_epsilon(10, 1000, 0.1).unwrap();
        let b = hoeffding_epsilon(10, 2000, 0.1).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        assert!(hoeffding_epsilon(0, 10, 0.1).is_err());
        assert!(hoeffding_epsilon(1, 10, 1.0).is_err());
    }

    #[test]
    fn leaderboard_error_cases() {
        let truth = [0.5, 0.4, 0.45];
        assert_eq!(leaderboard_error(&truth, &[0.5, 0.4, 0.4]).unwrap(), 0.0);
        let e = leaderboard_error(&truth, &[0.48, 0.41, 0.41]).unwrap();
        assert!((e - 0.02).abs() < 1e-12);
        assert!(leaderboard_error(&truth, &[0.5]).is_err());
    }

    fn brute_force_lberr(truth: &[f64], reported: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for t in 0..truth.len() {
            let mut m = f64::INFINITY;
            for &x in &truth[..=t] {
                if x < m {
                    m = x;
                }
            }
            worst = worst.max((m - reported[t]).abs());
        }
        worst
    }

    proptest! {
        #[test]
        fn paired_t_is_antisymmetric(pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..60)) {
            let (u, v): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let a = paired_t(&u, &v).unwrap().statistic;
            let b = paired_t(&v, &u).unwrap().statistic;
            prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn paired_t_shift_invariant(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..60),
            shift in -5.0f64..5.0,
        ) {
            let (u, v): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let a = paired_t(&u, &v).unwrap().statistic;
            let us: Vec<f64> = u.iter().map(|x| x + shift).collect();
            let vs: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let b = paired_t(&us, &vs).unwrap().statistic;
            prop_assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0));
        }

        #[test]
        fn p_value_decreases_in_statistic(t in -20.0f64..20.0, dt in 1e-3f64..5.0, dof in 1u64..500) {
            prop_assert!(t_to_p(t + dt, dof) <= t_to_p(t, dof));
        }

        #[test]
        fn cauchy_closed_form(t in -50.0f64..50.0) {
            let closed = 0.5 - t.atan() / PI;
            prop_assert!((t_to_p(t, 1) - closed).abs() < 1e-10);
        }

        #[test]
        fn hoeffding_solves_its_equation(k in 1u64..100_000, n in 1u64..1_000_000, delta in 1e-6f64..0.99) {
            let env = ErrorEnvelope::new(k, n, delta).unwrap();
            prop_assert!((env.failure_bound() - delta).abs() <= 1e-12 * delta);
        }

        #[test]
        fn lberr_matches_brute_force(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 50),
        ) {
            let (truth, rep): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            prop_assert_eq!(leaderboard_error(&truth, &rep).unwrap(), brute_force_lberr(&truth, &rep));
        }

        #[test]
        fn lberr_ignores_report_at_running_minimum(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40),
            extra in 0.0f64..1.0,
        ) {
            let (mut truth, mut rep): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let before = leaderboard_error(&truth, &rep).unwrap();
            let running = truth.iter().cloned().fold(f64::INFINITY, f64::min);
            truth.push(extra);
            rep.push(running.min(extra));
            prop_assert_eq!(leaderboard_error(&truth, &rep).unwrap(), before);
        }
    }
}
