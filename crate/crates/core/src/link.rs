//! Inverse link functions for binary responses and the GLM weight
//! `Psi(eta) = (dmu/deta)^2 / (mu (1 - mu))`.
//!
//! Both tails of the response probability are computed directly so that
//! `mu (1 - mu)` keeps full relative precision when `mu` is close to 0 or 1.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Probabilities are clipped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Logit,
    Probit,
    /// `log(-log(1 - mu))`
    Cloglog,
    /// `log(-log(mu))`; the response probability decreases in `eta`.
    Loglog,
}

impl LinkKind {
    pub const ALL: [LinkKind; 4] = [LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog, LinkKind::Loglog];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Logit => "logit",
            LinkKind::Probit => "probit",
            LinkKind::Cloglog => "cloglog",
            LinkKind::Loglog => "loglog",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(LinkKind::Logit),
            "probit" => Ok(LinkKind::Probit),
            "cloglog" | "c-log-log" | "complementary-log-log" => Ok(LinkKind::Cloglog),
            "loglog" | "log-log" => Ok(LinkKind::Loglog),
            other => Err(Error::Config(format!("unknown link function `{other}`"))),
        }
    }
}

fn check_finite(eta: f64) -> Result<()> {
    if eta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("linear predictor must be finite, got {eta}")))
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Unclipped `(mu, 1 - mu)`, each evaluated without cancellation.
pub fn inverse_link_tails(link: LinkKind, eta: f64) -> Result<(f64, f64)> {
    check_finite(eta)?;
    Ok(match link {
        LinkKind::Logit => {
            if eta >= 0.0 {
                let e = (-eta).exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            } else {
                let e = eta.exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            }
        }
        LinkKind::Probit => (std_normal_cdf(eta), std_normal_cdf(-eta)),
        LinkKind::Cloglog => {
            let t = eta.exp();
            (-(-t).exp_m1(), (-t).exp())
        }
        LinkKind::Loglog => {
            let t = eta.exp();
            ((-t).exp(), -(-t).exp_m1())
        }
    })
}

/// Response probability `g^{-1}(eta)`, clipped to `[1e-12, 1 - 1e-12]`.
pub fn mu(link: LinkKind, eta: f64) -> Result<f64> {
    let (p, _) = inverse_link_tails(link, eta)?;
    Ok(p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
}

/// `dmu/deta` of the unclipped inverse link.
pub fn dmu_deta(link: LinkKind, eta: f64) -> Result<f64> {
    check_finite(eta)?;
    Ok(match link {
        LinkKind::Logit => 1.0 / (2.0 + eta.exp() + (-eta).exp()),
        LinkKind::Probit => std_normal_pdf(eta),
        LinkKind::Cloglog => (eta - eta.exp()).exp(),
        LinkKind::Loglog => -(eta - eta.exp()).exp(),
    })
}

/// GLM weight of one Bernoulli observation at linear predictor `eta`.
pub fn psi(link: LinkKind, eta: f64) -> Result<f64> {
    check_finite(eta)?;
    if link == LinkKind::Logit {
        // mu (1 - mu) == dmu/deta for the canonical link, so the ratio collapses.
        return Ok(1.0 / (2.0 + eta.exp() + (-eta).exp()));
    }
    let (lower, upper) = inverse_link_tails(link, eta)?;
    let variance = lower.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR) * upper.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    let d = dmu_deta(link, eta)?;
    Ok(d * d / variance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn mu_at_zero() {
        assert_eq!(mu(LinkKind::Logit, 0.0).unwrap(), 0.5);
        assert!((mu(LinkKind::Probit, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let c = mu(LinkKind::Cloglog, 0.0).unwrap();
        assert!((c - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((c - 0.6321206).abs() < 1e-7);
    }

    #[test]
    fn mu_monotone_directions() {
        // strict only where no clipping happens
        let etas: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.1).collect();
        for link in [LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog] {
            for w in etas.windows(2) {
                assert!(mu(link, w[1]).unwrap() > mu(link, w[0]).unwrap(), "{link} at {}", w[0]);
            }
        }
        for w in etas.windows(2) {
            assert!(mu(LinkKind::Loglog, w[1]).unwrap() < mu(LinkKind::Loglog, w[0]).unwrap());
        }
    }

    #[test]
    fn mu_is_clipped() {
        assert_eq!(mu(LinkKind::Logit, 80.0).unwrap(), 1.0 - PROB_FLOOR);
        assert_eq!(mu(LinkKind::Logit, -80.0).unwrap(), PROB_FLOOR);
        assert_eq!(mu(LinkKind::Cloglog, 10.0).unwrap(), 1.0 - PROB_FLOOR);
    }

    #[test]
    fn non_finite_eta_is_domain_error() {
        for link in LinkKind::ALL {
            assert!(matches!(mu(link, f64::NAN), Err(Error::Domain(_))));
            assert!(matches!(psi(link, f64::INFINITY), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn psi_closed_forms() {
        assert_eq!(psi(LinkKind::Logit, 0.0).unwrap(), 0.25);
        let e2 = 2f64.exp();
        assert!(close(
            psi(LinkKind::Logit, 2.0).unwrap(),
            e2 / (1.0 + e2).powi(2),
            1e-15
        ));
        assert!((psi(LinkKind::Logit, 2.0).unwrap() - 0.1049936).abs() < 1e-7);
        assert!(close(psi(LinkKind::Probit, 0.0).unwrap(), 2.0 / PI, 1e-14));
    }

    #[test]
    fn psi_cloglog_matches_finite_difference() {
        let eta = 0.7;
        let h = 1e-6;
        let fd = (mu(LinkKind::Cloglog, eta + h).unwrap() - mu(LinkKind::Cloglog, eta - h).unwrap()) / (2.0 * h);
        let m = mu(LinkKind::Cloglog, eta).unwrap();
        let oracle = fd * fd / (m * (1.0 - m));
        assert!(close(psi(LinkKind::Cloglog, eta).unwrap(), oracle, 1e-6));
    }

    #[test]
    fn psi_bounded_and_positive() {
        for link in LinkKind::ALL {
            for i in -300..=300 {
                let p = psi(link, i as f64 * 0.1).unwrap();
                assert!((0.0..=1.0).contains(&p), "{link} {i}");
            }
            for i in -30..=30 {
                assert!(psi(link, i as f64 * 0.1).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn loglog_mirrors_cloglog_in_weight() {
        for i in -50..=50 {
            let eta = i as f64 * 0.1;
            let a = psi(LinkKind::Loglog, eta).unwrap();
            let b = psi(LinkKind::Cloglog, eta).unwrap();
            assert!(close(a, b, 1e-12));
        }
    }

    #[test]
    fn parses_link_names() {
        assert_eq!("probit".parse::<LinkKind>().unwrap(), LinkKind::Probit);
        assert_eq!("c-log-log".parse::<LinkKind>().unwrap(), LinkKind::Cloglog);
        assert!("identity".parse::<LinkKind>().is_err());
    }
}
