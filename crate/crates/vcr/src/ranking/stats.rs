//! Student t tail probabilities, the one-sample t-test and Bonferroni gating.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("degrees of freedom must be at least 1")]
    ZeroDf,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("family size K must be at least 1")]
    EmptyFamily,
}

pub const STD_FLOOR: f64 = 1e-12;
pub const P_FLOOR: f64 = 1e-300;

/// Upper tail `P(T > t)` for Student's t with `df` degrees of freedom:
/// `½ I_{df/(df+t²)}(df/2, ½)` for `t ≥ 0`, reflected for negative `t`.
pub fn student_t_sf(t: f64, df: u64) -> Result<f64, StatsError> {
    if df == 0 {
        return Err(StatsError::ZeroDf);
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let v = df as f64;
    let upper = |t: f64| {
        if t.is_infinite() {
            0.0
        } else {
            0.5 * beta_reg(v / 2.0, 0.5, v / (v + t * t))
        }
    };
    Ok(if t > 0.0 { upper(t) } else { 1.0 - upper(-t) })
}

/// Sample mean and standard deviation (ddof = 1).
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Two-sided test of zero mean. The standard deviation is clamped below at
/// 1e-12 and the p-value floored at 1e-300.
pub fn t_test_one_sample(samples: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = samples.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples(n));
    }
    let (mean, s) = mean_std(samples);
    let t = mean / (s.max(STD_FLOOR) / (n as f64).sqrt());
    let p = (2.0 * student_t_sf(t.abs(), n as u64 - 1)?).clamp(P_FLOOR, 1.0);
    Ok((t, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub concept: String,
    pub psi_samples: Vec<f64>,
    pub psi_mean: f64,
    pub psi_std: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub significant: bool,
    /// Sign of `psi_mean`: 1, -1 or 0.
    pub direction: i8,
}

impl SensitivityRecord {
    pub fn from_samples(concept: &str, psi_samples: Vec<f64>) -> Result<Self, StatsError> {
        let (t, p) = t_test_one_sample(&psi_samples)?;
        let (mean, std) = mean_std(&psi_samples);
        Ok(Self {
            concept: concept.to_string(),
            psi_samples,
            psi_mean: mean,
            psi_std: std,
            t_stat: t,
            p_value: p,
            significant: false,
            direction: sign(mean),
        })
    }
}

pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Marks `p < alpha / K` as significant and sorts by |ψ| descending, ties
/// broken by concept name.
pub fn bonferroni_rank(mut records: Vec<SensitivityRecord>, alpha: f64, k: usize) -> Result<Vec<SensitivityRecord>, StatsError> {
    if k == 0 {
        return Err(StatsError::EmptyFamily);
    }
    let threshold = alpha / k as f64;
    for r in records.iter_mut() {
        r.significant = r.p_value < threshold;
    }
    records.sort_by(|a, b| b.psi_mean.abs().total_cmp(&a.psi_mean.abs()).then_with(|| a.concept.cmp(&b.concept)));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(name: &str, psi: f64, p: f64) -> SensitivityRecord {
        SensitivityRecord {
            concept: name.into(),
            psi_samples: vec![],
            psi_mean: psi,
            psi_std: 0.0,
            t_stat: 0.0,
            p_value: p,
            significant: false,
            direction: sign(psi),
        }
    }

    #[test]
    fn sf_symmetry_and_center() {
        assert_eq!(student_t_sf(0.0, 7).unwrap(), 0.5);
        for &t in &[0.3, 1.0, 2.5, 10.0] {
            let s = student_t_sf(t, 5).unwrap() + student_t_sf(-t, 5).unwrap();
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert_eq!(student_t_sf(1.0, 0).unwrap_err(), StatsError::ZeroDf);
        assert_eq!(student_t_sf(f64::INFINITY, 3).unwrap(), 0.0);
    }

    #[test]
    fn cauchy_closed_form() {
        // df = 1 is the Cauchy distribution: SF(t) = 1/2 - atan(t)/π.
        for &t in &[0.5f64, 1.0, 3.0, 40.0] {
            let want = 0.5 - t.atan() / std::f64::consts::PI;
            assert!((student_t_sf(t, 1).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn t_test_edge_cases() {
        let (t, p) = t_test_one_sample(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!((t, p), (0.0, 1.0));
        let (t, p) = t_test_one_sample(&[2.0; 5]).unwrap();
        assert!(t > 1e12 && p < 1e-40 && p >= P_FLOOR);
        assert_eq!(t_test_one_sample(&[1.0]).unwrap_err(), StatsError::TooFewSamples(1));
    }

    #[test]
    fn gate_flips_at_threshold() {
        let out = bonferroni_rank(vec![rec("a", 1.0, 4e-6), rec("b", 0.5, 6e-6), rec("c", 0.1, 5e-6)], 0.05, 10_000).unwrap();
        let sig: Vec<_> = out.iter().map(|r| (r.concept.as_str(), r.significant)).collect();
        assert_eq!(sig, [("a", true), ("b", false), ("c", false)]);
        let out = bonferroni_rank(vec![rec("a", 1.0, 0.049)], 0.05, 1).unwrap();
        assert!(out[0].significant);
    }

    #[test]
    fn ties_sort_by_name() {
        let out = bonferroni_rank(vec![rec("zeta", -2.0, 1.0), rec("alpha", 2.0, 1.0), rec("mid", 3.0, 1.0)], 0.05, 3).unwrap();
        let names: Vec<_> = out.iter().map(|r| r.concept.as_str()).collect();
        assert_eq!(names, ["mid", "alpha", "zeta"]);
    }
}
