use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-tick probability that a recruiter keeps recruiting for a site of
/// quality `q`: `2 / (2 + e^(-7q))`.
pub fn compute_x(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quality {q} is outside [0, 1]")));
    }
    Ok(2.0 / (2.0 + (-7.0 * q).exp()))
}

/// Reassessment factor `sqrt(q)`.
pub fn compute_gamma(q: f64) -> Result<f64> {
    if !(q >= 0.0) || q > 1.0 {
        return Err(Error::Domain(format!("quality {q} is outside [0, 1]")));
    }
    Ok(q.sqrt())
}

/// How long a recruiter stays in a recruiting bout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecruitDwell {
    /// Continue with probability `x(q)` each tick.
    Logistic,
    /// Geometric bout with mean `ticks_per_quality * q` ticks.
    MeanTicks { ticks_per_quality: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionParams {
    /// O -> E
    pub p1: f64,
    /// R bout end -> reassess trip (otherwise abandon)
    pub p2: f64,
    /// E -> T_HO
    pub p3: f64,
    /// A -> T_HR
    pub p4: f64,
    pub recruit_dwell: RecruitDwell,
    /// Bernoulli rate per recruiter in the binomial recruitment draw.
    pub recruit_pull_rate: f64,
    pub gamma_exponent: f64,
    pub reassess_scale: f64,
    /// Heading jitter per exploration step, radians (uniform in +/- this).
    pub heading_noise: f64,
    /// If set, explorers turn home once this far from the hub.
    pub explore_limit: Option<f64>,
}

impl TransitionParams {
    /// Parameters of the multi-configuration sweep.
    pub fn table2() -> Self {
        TransitionParams {
            p1: 0.01,
            p2: 0.99,
            p3: 0.02,
            p4: 0.1,
            recruit_dwell: RecruitDwell::Logistic,
            recruit_pull_rate: 0.1,
            gamma_exponent: 0.5,
            reassess_scale: 3.0,
            heading_noise: 0.3,
            explore_limit: None,
        }
    }

    /// The small two-site study: dwell means converted to per-tick rates at
    /// one tick per second.
    pub fn experiment1(max_distance: f64) -> Self {
        TransitionParams {
            p1: 1.0 / 8.0,
            p2: 0.99,
            p3: 0.0,
            p4: 1.0 / 3.0,
            recruit_dwell: RecruitDwell::MeanTicks { ticks_per_quality: 6.0 },
            recruit_pull_rate: 1.0 / 40.0,
            gamma_exponent: 1.0,
            reassess_scale: 3.0,
            heading_noise: 0.3,
            explore_limit: Some(max_distance / 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
            ("p4", self.p4),
            ("recruit_pull_rate", self.recruit_pull_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.reassess_scale > 0.0) || !(self.gamma_exponent > 0.0) {
            return Err(Error::Config(
                "reassess_scale and gamma_exponent must be positive".into(),
            ));
        }
        if let RecruitDwell::MeanTicks { ticks_per_quality } = self.recruit_dwell {
            if !(ticks_per_quality > 0.0) {
                return Err(Error::Config("ticks_per_quality must be positive".into()));
            }
        }
        if !(self.heading_noise >= 0.0) {
            return Err(Error::Config("heading_noise must be non-negative".into()));
        }
        Ok(())
    }

    /// Probability that a recruiting bout continues for one more tick.
    pub fn recruit_continue(&self, q: f64) -> Result<f64> {
        match self.recruit_dwell {
            RecruitDwell::Logistic => compute_x(q),
            RecruitDwell::MeanTicks { ticks_per_quality } => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::Domain(format!("quality {q} is outside [0, 1]")));
                }
                let mean = ticks_per_quality * q;
                Ok(if mean <= 1.0 { 0.0 } else { 1.0 - 1.0 / mean })
            }
        }
    }

    /// Probability that an explorer at (or away from) a site takes it up.
    pub fn discover(&self, q: f64, at_site: bool) -> f64 {
        if at_site {
            q
        } else {
            0.0
        }
    }

    pub fn gamma(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("quality {q} is outside [0, 1]")));
        }
        Ok(q.powf(self.gamma_exponent))
    }

    /// Number of reassessment trips granted on committing to a site.
    pub fn reassess_budget(&self, q: f64) -> Result<u32> {
        let g = self.gamma(q)?;
        if q <= 0.0 {
            return Ok(0);
        }
        Ok(((self.reassess_scale * g).round() as u32).max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_reference_values() {
        assert!((compute_x(0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // 2 / (2 + e^-7) and 2 / (2 + e^-3.5)
        assert!((compute_x(1.0).unwrap() - 0.999_544_266_804_663_6).abs() < 1e-12);
        assert!((compute_x(0.5).unwrap() - 0.985_125_887_921_589_8).abs() < 1e-12);
        assert!(compute_x(-0.1).is_err());
        assert!(compute_x(1.1).is_err());
    }

    #[test]
    fn gamma_and_budget() {
        let p = TransitionParams::table2();
        assert_eq!(compute_gamma(1.0).unwrap(), 1.0);
        assert_eq!(compute_gamma(0.25).unwrap(), 0.5);
        assert!((compute_gamma(0.64).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(p.reassess_budget(0.64).unwrap(), 2);
        assert_eq!(p.reassess_budget(1.0).unwrap(), 3);
        assert_eq!(p.reassess_budget(1e-6).unwrap(), 1);
        assert_eq!(p.reassess_budget(0.0).unwrap(), 0);
        assert!(compute_gamma(-0.5).is_err());
    }

    #[test]
    fn monotone_on_grid() {
        let grid: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        for w in grid.windows(2) {
            assert!(compute_x(w[1]).unwrap() > compute_x(w[0]).unwrap());
            assert!(compute_gamma(w[1]).unwrap() > compute_gamma(w[0]).unwrap());
        }
        let lo = compute_x(0.0).unwrap();
        let hi = compute_x(1.0).unwrap();
        assert!(lo >= 2.0 / 3.0 && hi < 1.0);
    }

    #[test]
    fn mean_ticks_dwell() {
        let p = TransitionParams::experiment1(1000.0);
        assert!((p.recruit_continue(1.0).unwrap() - (1.0 - 1.0 / 6.0)).abs() < 1e-15);
        assert!((p.recruit_continue(0.5).unwrap() - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
    }
}
