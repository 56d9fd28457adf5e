//! Exact constants chain from the assumption report up to the fugacity threshold.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::assumption::{AssumptionReport, Mode, Verdict};
use crate::error::{Error, Result};
use crate::ground::{mu_and_reff, GroundData};
use crate::lattice::Site;
use crate::model::Model;
use crate::rational::{fmt_big, to_big, LogAffine, LogScaled, Q};
use crate::system::minimal_r2;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConstants {
    pub mode: Mode,
    pub chi: u32,
    pub d: u32,
    pub i_d: Q,
    pub r0: u32,
    pub r1: u32,
    pub r2: u32,
    pub s0: u32,
    pub s1: u32,
    pub r_eff: u32,
    pub epsilon: Q,
    pub mu: Q,
    pub rho_max: Q,
    pub rho0: BigRational,
    /// Bound on the number of particles anchored in a ball of radius S0.
    pub n_bound: BigRational,
    /// |G| entering the threshold; a model file may override it in paper-compatible mode.
    pub ground_state_count: usize,
    pub discovered_ground_states: usize,
    pub tau: LogAffine,
    pub varsigma: Q,
    pub c: Q,
    pub n: u32,
    pub eta: Q,
    pub log_z0: LogScaled,
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// `(tau, varsigma, log z0)` from the primary constants.
pub fn threshold(chi: u32, d: u32, i_d: Q, g_count: usize, mu: Q, rho_max: Q, rho0: &BigRational) -> Result<(LogAffine, Q, LogScaled)> {
    let chi_b = BigRational::from_integer(BigInt::from(chi));
    let g = BigRational::from_integer(BigInt::from(g_count));
    let third = to_big(&(Q::from_integer(3) * i_d * Q::from_integer(factorial(d))));
    if third.is_zero() {
        return Err(Error::Precondition("isoperimetric constant must be positive".into()));
    }
    let arg = BigRational::from_integer(BigInt::from(2)) * &chi_b * &chi_b * num_traits::pow(g, chi as usize) * (BigRational::one() + third.recip());
    let tau = LogAffine::new(chi_b.clone() + BigRational::one(), arg);
    let varsigma = Q::from_integer(8) + Q::from_integer(2) / mu;
    let gap = to_big(&mu) * (to_big(&rho_max) - rho0);
    if gap <= BigRational::zero() {
        return Err(Error::Precondition("rho0 must be below the maximal density".into()));
    }
    let inner = tau.add_rational(&(to_big(&varsigma) * &chi_b));
    Ok((tau, varsigma, LogScaled { p: gap.recip(), inner }))
}

/// `1 / (rho_max^-1 + eps / N)`.
pub fn rho0(rho_max: Q, eps: Q, n: &BigRational) -> BigRational {
    (to_big(&rho_max.recip()) + to_big(&eps) / n).recip()
}

/// Largest anchor-to-support distance and smallest support size.
fn support_stats(model: &Model) -> Result<(u32, usize)> {
    let g = &model.graph;
    let mut reach = 0;
    let mut size = usize::MAX;
    for c in 0..g.num_cells() {
        let a = Site::new([0; 3], c as u16);
        for s in model.shape.support_of(a) {
            reach = reach.max(g.distance(a, s)?);
        }
        size = size.min(model.shape.support_size(c as u16));
    }
    Ok((reach, size))
}

pub fn compute_constants(model: &Model, report: &AssumptionReport, mode: Mode) -> Result<ModelConstants> {
    let g = &model.graph;
    let needed = [0usize, 3, 5];
    if needed.iter().any(|&i| report.items.get(i).is_none_or(|it| it.verdict != Verdict::Pass)) {
        return Err(Error::MissingAssumptionReport);
    }
    if report.mode != mode {
        return Err(Error::Precondition("assumption report was produced in the other mode".into()));
    }
    let (Some(r0), Some(r1), Some(s1), Some(epsilon)) = (report.r0, report.r1, report.s1, report.epsilon) else {
        return Err(Error::MissingAssumptionReport);
    };
    let paper = model.paper();
    let data = report
        .ground_states
        .iter()
        .map(|gs| GroundData::new(g, &model.shape, gs.clone()))
        .collect::<Result<Vec<_>>>()?;
    let (mu, r_eff) = mu_and_reff(g, &data)?;
    let rho_max = report.local.rho_loc;
    let i_d = model.isoperimetric()?.ok_or_else(|| Error::Precondition("no isoperimetric constant for this lattice".into()))?;
    let chi = g.chi() as u32;
    let d = g.dim as u32;
    let strict = minimal_r2(g, &model.shape, r0, r1)?;
    let (r2, g_count) = match mode {
        Mode::Best => (strict, report.ground_states.len()),
        Mode::PaperCompat => {
            (paper.r2.unwrap_or(strict), paper.ground_state_count.unwrap_or(report.ground_states.len()))
        }
    };
    let s0 = s1 + r2 + 4 * r_eff;
    let (reach, size) = support_stats(model)?;
    let n_bound = match mode {
        Mode::PaperCompat => {
            let s = s0 as i64;
            BigRational::new(BigInt::from(2 * s * s + 2 * s - 1), BigInt::from(size as i64))
        }
        Mode::Best => {
            let ball = (0..g.num_cells()).map(|c| g.ball(Site::new([0; 3], c as u16), s0 + reach).len()).max().unwrap_or(0);
            BigRational::from_integer(BigInt::from((ball / size) as i64))
        }
    };
    let rho0 = rho0(rho_max, epsilon, &n_bound);
    let (tau, varsigma, log_z0) = threshold(chi, d, i_d, g_count, mu, rho_max, &rho0)?;
    Ok(ModelConstants {
        mode,
        chi,
        d,
        i_d,
        r0,
        r1,
        r2,
        s0,
        s1,
        r_eff,
        epsilon,
        mu,
        rho_max,
        rho0,
        n_bound,
        ground_state_count: g_count,
        discovered_ground_states: report.ground_states.len(),
        tau,
        varsigma,
        c: Q::from_integer(0),
        n: 1,
        eta: Q::from_integer(1),
        log_z0,
    })
}

impl ModelConstants {
    /// `mu (rho_max - rho0) log z0 - 2c - varsigma chi - tau` as (rational part, coefficient of the log).
    pub fn threshold_residual(&self) -> (BigRational, BigRational) {
        let k = to_big(&self.mu) * (to_big(&self.rho_max) - &self.rho0) * &self.log_z0.p;
        let chi = BigRational::from_integer(BigInt::from(self.chi));
        let two = BigRational::from_integer(BigInt::from(2));
        let rational = &k * &self.log_z0.inner.a - two * to_big(&self.c) - to_big(&self.varsigma) * chi - &self.tau.a;
        (rational, k - BigRational::one())
    }

    pub fn to_json(&self) -> Value {
        let q = |x: &Q| crate::rational::fmt_q(x);
        json!({
            "mode": if self.mode == Mode::Best { "best" } else { "paper-compat" },
            "chi": self.chi,
            "d": self.d,
            "I_d": q(&self.i_d),
            "R0": self.r0,
            "R1": self.r1,
            "R2": self.r2,
            "S0": self.s0,
            "S1": self.s1,
            "r_eff": self.r_eff,
            "epsilon": q(&self.epsilon),
            "mu": q(&self.mu),
            "rho_max": q(&self.rho_max),
            "rho0": fmt_big(&self.rho0),
            "N": fmt_big(&self.n_bound),
            "ground_state_count": self.ground_state_count,
            "discovered_ground_states": self.discovered_ground_states,
            "tau": self.tau.to_json(),
            "varsigma": q(&self.varsigma),
            "c": q(&self.c),
            "n": self.n,
            "eta": q(&self.eta),
            "log_z0": self.log_z0.to_json(),
            "log_z0_float": self.log_z0.to_f64(),
        })
    }
}

/// The system with the report's ground states at coarse-graining radius `R2`.
pub fn build_system(model: &Model, report: &AssumptionReport, constants: &ModelConstants) -> Result<crate::system::System> {
    crate::system::System::new(model.graph.clone(), model.shape.clone(), report.ground_states.clone(), constants.r2)
}
