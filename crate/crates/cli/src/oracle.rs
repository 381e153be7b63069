//! Invariant suite run by `qnee oracle-check`.

use std::fmt;

use rand::{Rng, RngExt};

use qnee_core::ansatz::{outcome_distribution, CircuitParams};
use qnee_core::hybrid::{fd_gradient, FdScheme, Inner, InnerMode, QneeConfig};
use qnee_core::neural::{cost_renyi, cost_vn, invert_cost_renyi, EntropyNet, NetConfig, Objective};
use qnee_core::quantum::{
    random, renyi_entropy_of, renyi_exact, shannon_entropy, trace_exp, von_neumann_exact,
    ComplexMatrix, DensityMatrix,
};
use qnee_core::seed::{derive_seed, rng_from};

use crate::error::CliResult;

/// Deliberate defects for checking that the suite catches them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Mutation {
    #[default]
    None,
    /// Flip the sign of the normalization term of the von Neumann cost.
    GibbsSign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    /// Largest violation seen; `<= tolerance` passes.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<22} instances={:<4} worst={:.3e} tol={:.1e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.instances,
                c.worst,
                c.tolerance
            )?;
        }
        write!(
            f,
            "checks run: {}, passed: {}, failed: {}",
            self.checks.len(),
            self.checks.len() - self.failed(),
            self.failed()
        )
    }
}

const INSTANCES: usize = 200;
const BOUND_TOL: f64 = 1e-9;
/// Eigenvalues below this are roundoff from rank-deficient instances.
const EIG_FLOOR: f64 = 1e-13;
const ALPHAS: [f64; 4] = [0.5, 0.9, 2.0, 3.0];
/// Offset from α = 1 for the limit checks. The cost gap is first order in it,
/// with slope `S + Σ λ ln²λ / 2` near saturation.
const ALPHA_EPS: f64 = 1e-4;

fn vn_cost(h: &[f64], w: &[f64], m: Mutation) -> f64 {
    match m {
        Mutation::None => cost_vn(h, w),
        Mutation::GibbsSign => {
            let first: f64 = h.iter().zip(w).map(|(h, w)| h * w).sum();
            -first - (h.iter().map(|x| x.exp()).sum::<f64>() - 1.0)
        }
    }
}

struct Instance {
    rho: DensityMatrix,
    p: Vec<f64>,
    h: Vec<f64>,
}

fn instance<R: Rng>(i: usize, rng: &mut R) -> CliResult<Instance> {
    let n = 1 + i % 3;
    let rank = if i.is_multiple_of(4) { Some(1 + i % (1 << n)) } else { None };
    let rho = random::density_matrix(n, rank, rng);
    let params = CircuitParams::random(n, 2, rng.random());
    let p = outcome_distribution(&rho, &params)?;
    let scale = 0.5 + 2.0 * rng.random::<f64>();
    let h = (0..1 << n)
        .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0) - n as f64 * 0.7)
        .collect();
    Ok(Instance { rho, p, h })
}

fn renyi_g(s: f64, a: f64) -> f64 {
    (((1.0 - a) * s).exp() - 1.0) / (a * (1.0 - a))
}

/// `-⟨O⟩ + ln tr e^O` and its linearization for a Hermitian `O`.
fn operator_bounds(rho: &DensityMatrix, o: &ComplexMatrix) -> CliResult<(f64, f64)> {
    let expect = rho.expectation(o).re;
    let tr = trace_exp(o)?;
    Ok((-expect + tr.ln(), -expect + tr - 1.0))
}

/// Run every check on seeded random instances.
pub fn run_checks(seed: u64, mutation: Mutation) -> CliResult<Report> {
    let mut rng = rng_from(derive_seed(seed, &[0x0AC1]));
    let instances: Vec<Instance> = (0..INSTANCES)
        .map(|i| instance(i, &mut rng))
        .collect::<CliResult<_>>()?;
    let mut report = Report::default();
    let mut push = |name, instances, worst: f64, tolerance| {
        report.checks.push(CheckResult {
            name,
            instances,
            worst: if worst.is_nan() { f64::INFINITY } else { worst },
            tolerance,
        })
    };

    // Circuit form of the linearized bound, with the network replaced by a random table.
    let worst = instances
        .iter()
        .map(|x| von_neumann_exact(&x.rho) - vn_cost(&x.h, &x.p, mutation))
        .fold(f64::NEG_INFINITY, f64::max);
    push("gibbs-bound", INSTANCES, worst, BOUND_TOL);

    let mut gibbs = f64::NEG_INFINITY;
    let mut order = f64::NEG_INFINITY;
    for x in &instances {
        let o = random::hermitian(x.rho.n_qubits(), 1.5, &mut rng);
        let (log_form, lin_form) = operator_bounds(&x.rho, &o)?;
        gibbs = gibbs.max(von_neumann_exact(&x.rho) - log_form);
        order = order.max(log_form - lin_form);
    }
    push("gibbs-operator", INSTANCES, gibbs, BOUND_TOL);
    push("linearized-ordering", INSTANCES, order, BOUND_TOL);

    let mut dv = f64::NEG_INFINITY;
    for x in &instances {
        let d = x.p.len() as f64;
        let kl: f64 = x
            .p
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * (p * d).ln())
            .sum();
        let mean_h: f64 = x.h.iter().zip(&x.p).map(|(h, p)| h * p).sum();
        let log_mean_exp = (x.h.iter().map(|h| h.exp()).sum::<f64>() / d).ln();
        dv = dv.max(mean_h - log_mean_exp - kl);
        dv = dv.max(shannon_entropy(&x.p) - vn_cost(&x.h, &x.p, Mutation::None));
    }
    push("donsker-varadhan", INSTANCES, dv, BOUND_TOL);

    let mut major = f64::NEG_INFINITY;
    let mut chain = f64::NEG_INFINITY;
    for x in &instances {
        major = major.max(von_neumann_exact(&x.rho) - shannon_entropy(&x.p));
        for a in ALPHAS {
            let s_rho = renyi_exact(&x.rho, a)?;
            let h_p = renyi_entropy_of(&x.p, a)?;
            major = major.max(s_rho - h_p);
            let c = cost_renyi(&x.h, &x.p, a)?;
            chain = chain.max(renyi_g(s_rho, a) - renyi_g(h_p, a));
            chain = chain.max(renyi_g(h_p, a) - c);
        }
    }
    push("majorization", INSTANCES, major, BOUND_TOL);
    push("renyi-chain", INSTANCES, chain, BOUND_TOL);

    let mut sat = 0.0f64;
    let mut limit = 0.0f64;
    let log = |v: &[f64]| -> Vec<f64> { v.iter().map(|&l| l.max(1e-300).ln()).collect() };
    for x in &instances {
        let lam: Vec<f64> = x
            .rho
            .spectrum()
            .eigenvalues
            .iter()
            .map(|&l| if l < EIG_FLOOR { 0.0 } else { l })
            .collect();
        let h = log(&lam);
        sat = sat.max((vn_cost(&h, &lam, mutation) - von_neumann_exact(&x.rho)).abs());
        for a in ALPHAS {
            let back = invert_cost_renyi(cost_renyi(&h, &lam, a)?, a)?;
            sat = sat.max((back - renyi_exact(&x.rho, a)?).abs());
        }
        let s = von_neumann_exact(&x.rho);
        for a in [1.0 - ALPHA_EPS, 1.0 + ALPHA_EPS] {
            limit = limit.max((renyi_exact(&x.rho, a)? - s).abs());
        }
        // Same table and weights on both sides: the spectrum and the measured distribution.
        for (h, w) in [(h, &lam), (log(&x.p), &x.p)] {
            let vn = cost_vn(&h, w);
            for a in [1.0 - ALPHA_EPS, 1.0 + ALPHA_EPS] {
                limit = limit.max((cost_renyi(&h, w, a)? - vn).abs());
            }
        }
    }
    push("saturation", INSTANCES, sat, BOUND_TOL);
    push("alpha-limit", INSTANCES, limit, 1e-3);

    push("nn-gradient", 4, nn_gradient_error(seed)?, 1e-4);
    push("outer-gradient", 3, outer_gradient_error(seed)?, 1e-3);
    Ok(report)
}

/// Largest relative error of backprop against central differences on a width-8 network.
pub fn nn_gradient_error(seed: u64) -> CliResult<f64> {
    let mut worst = 0.0f64;
    let cfg = NetConfig {
        embed_dim: 4,
        hidden_width: 8,
    };
    let mut rng = rng_from(derive_seed(seed, &[0x0AC2]));
    for (k, obj) in [
        Objective::VonNeumann,
        Objective::Renyi(0.5),
        Objective::Renyi(2.0),
        Objective::VonNeumann,
    ]
    .into_iter()
    .enumerate()
    {
        let n = 1 + k % 3;
        let net = EntropyNet::new(n, cfg, derive_seed(seed, &[0x0AC3, k as u64]))?;
        let w = random::distribution(1 << n, &mut rng);
        let (_, g) = net.cost_and_gradient(obj, &w)?;
        let g = g.to_flat();
        let theta = net.to_flat();
        let mut probe = net.clone();
        let eps = 1e-6;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..theta.len() {
            let mut t = theta.clone();
            t[i] += eps;
            probe.set_flat(&t)?;
            let up = obj.cost(&probe.h_table(), &w)?;
            t[i] -= 2.0 * eps;
            probe.set_flat(&t)?;
            let down = obj.cost(&probe.h_table(), &w)?;
            let fd = (up - down) / (2.0 * eps);
            num += (fd - g[i]).powi(2);
            den += g[i].powi(2);
        }
        worst = worst.max(num.sqrt() / den.sqrt().max(1e-12));
    }
    Ok(worst)
}

/// Noise-free outer gradient (forward differences, δ = 1e-4) against central
/// differences of the Shannon entropy of the outcome distribution.
pub fn outer_gradient_error(seed: u64) -> CliResult<f64> {
    let mut rng = rng_from(derive_seed(seed, &[0x0AC4]));
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let rho = random::density_matrix(n, None, &mut rng);
        let params = CircuitParams::random(n, 2, rng.random());
        let cfg = QneeConfig {
            inner: InnerMode::Exact,
            fd_step: 1e-4,
            fd_scheme: FdScheme::Forward,
            ..Default::default()
        };
        let g = fd_gradient(&rho, &params, &Inner::Exact, &cfg, seed)?;
        let eps = 1e-5;
        for (k, gk) in g.iter().enumerate() {
            let up = shannon_entropy(&outcome_distribution(&rho, &params.perturbed(k, eps))?);
            let down = shannon_entropy(&outcome_distribution(&rho, &params.perturbed(k, -eps))?);
            worst = worst.max(((up - down) / (2.0 * eps) - gk).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qnee_core::quantum;

    #[test]
    fn clean_suite_passes_and_mutation_is_caught() {
        let clean = run_checks(1, Mutation::None).unwrap();
        assert!(!clean.checks.is_empty());
        assert_eq!(clean.failed(), 0, "{clean}");
        let mutated = run_checks(1, Mutation::GibbsSign).unwrap();
        let gibbs = mutated.checks.iter().find(|c| c.name == "gibbs-bound").unwrap();
        assert!(!gibbs.passed());
    }

    #[test]
    fn operator_bound_saturates_at_log_rho() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.2, 0.1, 0.0]).unwrap();
        let o = quantum::log_density(&rho);
        let (log_form, lin_form) = operator_bounds(&rho, &o).unwrap();
        let s = von_neumann_exact(&rho);
        assert!((log_form - s).abs() < 1e-9);
        assert!((lin_form - s).abs() < 1e-9);
    }
}
