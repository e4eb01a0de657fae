//! Closed-form evaluation of the tuning rules and of every risk-bound
//! right-hand side, plus the cluster-based tuning recipe.
//!
//! All logarithms are natural. A bound whose compatibility or gain input is
//! nonpositive is vacuous: it evaluates to `+inf` and carries an explicit
//! flag so Monte Carlo harnesses can skip it rather than crash.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rho, DesignMatrix, SupportSet};

/// Identifiers of the evaluable right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum BoundId {
    THM1_PROJ,
    EQ2_2,
    EQ2_4,
    EQ2_5,
    EQ2_51,
    SZ_ORACLE,
    EQ3_1,
    EQ3_3,
    SLOW1,
    THM4,
    PROP4_1,
    RISKTV1,
    PROP4_2,
    PROP4_3,
    JOHSARA,
}

impl BoundId {
    pub const ALL: [BoundId; 15] = [
        BoundId::THM1_PROJ,
        BoundId::EQ2_2,
        BoundId::EQ2_4,
        BoundId::EQ2_5,
        BoundId::EQ2_51,
        BoundId::SZ_ORACLE,
        BoundId::EQ3_1,
        BoundId::EQ3_3,
        BoundId::SLOW1,
        BoundId::THM4,
        BoundId::PROP4_1,
        BoundId::RISKTV1,
        BoundId::PROP4_2,
        BoundId::PROP4_3,
        BoundId::JOHSARA,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundId::THM1_PROJ => "THM1_PROJ",
            BoundId::EQ2_2 => "EQ2_2",
            BoundId::EQ2_4 => "EQ2_4",
            BoundId::EQ2_5 => "EQ2_5",
            BoundId::EQ2_51 => "EQ2_51",
            BoundId::SZ_ORACLE => "SZ_ORACLE",
            BoundId::EQ3_1 => "EQ3_1",
            BoundId::EQ3_3 => "EQ3_3",
            BoundId::SLOW1 => "SLOW1",
            BoundId::THM4 => "THM4",
            BoundId::PROP4_1 => "PROP4_1",
            BoundId::RISKTV1 => "RISKTV1",
            BoundId::PROP4_2 => "PROP4_2",
            BoundId::PROP4_3 => "PROP4_3",
            BoundId::JOHSARA => "JOHSARA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        BoundId::ALL
            .iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::domain("bound id", format!("unknown id `{s}`")))
    }
}

/// An evaluated right-hand side with the inputs (and derived intermediates)
/// recorded for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub bound_id: BoundId,
    /// `f64::INFINITY` when vacuous.
    pub value: f64,
    pub vacuous: bool,
    pub inputs: BTreeMap<String, f64>,
}

impl Serialize for BoundValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("BoundValue", 4)?;
        st.serialize_field("bound_id", self.bound_id.name())?;
        if self.value.is_finite() {
            st.serialize_field("value", &self.value)?;
        } else {
            st.serialize_field("value", &Option::<f64>::None)?;
        }
        st.serialize_field("vacuous", &self.vacuous)?;
        st.serialize_field("inputs", &self.inputs)?;
        st.end()
    }
}

/// A tuning prescription: the penalty level, with the grid count `k` and the
/// representer support when the rule produces them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningResult {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl TuningResult {
    fn plain(lambda: f64) -> Self {
        Self {
            lambda,
            k: None,
            support: None,
            warning: None,
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(name, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta", format!("must lie in (0,1), got {delta}")));
    }
    Ok(())
}

/// The universal penalty `lambda = gamma sigma sqrt(2 log(p/delta) / n)`.
pub fn universal_lambda(sigma: f64, p: usize, n: usize, delta: f64, gamma: f64) -> Result<TuningResult> {
    check_positive("sigma", sigma)?;
    check_delta(delta)?;
    if gamma <= 1.0 {
        return Err(Error::domain("gamma", "requires gamma > 1"));
    }
    if p == 0 || n == 0 {
        return Err(Error::domain("dimensions", "p and n must be positive"));
    }
    let log_term = (p as f64 / delta).ln();
    if log_term <= 0.0 {
        return Err(Error::domain("p/delta", "log(p/delta) must be positive"));
    }
    Ok(TuningResult::plain(
        gamma * sigma * (2.0 * log_term / n as f64).sqrt(),
    ))
}

/// The correlation-deflated penalty
/// `lambda = gamma sigma rho_T sqrt(2 log(p/delta) / n)`.
pub fn correlated_lambda(
    sigma: f64,
    rho_t: f64,
    p: usize,
    n: usize,
    delta: f64,
    gamma: f64,
) -> Result<TuningResult> {
    check_positive("sigma", sigma)?;
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&rho_t) {
        return Err(Error::domain("rho", "must lie in [0,1]"));
    }
    if gamma < 1.0 {
        return Err(Error::domain("gamma", "requires gamma >= 1"));
    }
    if rho_t == 0.0 {
        return Err(Error::domain(
            "rho",
            "rho_T = 0 yields lambda = 0; handle the exact-span case separately",
        ));
    }
    let log_term = (p as f64 / delta).ln();
    Ok(TuningResult::plain(
        gamma * sigma * rho_t * (2.0 * log_term / n as f64).sqrt(),
    ))
}

/// Grid count and penalty for signals of bounded variation:
/// `k` is the smallest integer larger than
/// `(V^2 n log(n/delta) / sigma^2)^{1/3}` (clamped to at least 2) and
/// `lambda = sigma sqrt(log(n/delta) / (k n))`.
pub fn monotone_tuning(
    tv_of_projection: f64,
    sigma: f64,
    n: usize,
    delta: f64,
    ) -> Result<TuningResult> {
    check_positive("sigma", sigma)?;
    check_delta(delta)?;
    if n < 3 {
        return Err(Error::domain("n", "requires n >= 3"));
    }
    if tv_of_projection < 0.0 {
        return Err(Error::domain("tv_of_projection", "must be nonnegative"));
    }
    let log_term = (n as f64 / delta).ln();
    let target = (tv_of_projection * tv_of_projection * n as f64 * log_term
        / (sigma * sigma))
        .powf(1.0 / 3.0);
    let (k, warning) = smallest_integer_above(target);
    let lambda = sigma * (log_term / (k as f64 * n as f64)).sqrt();
    Ok(TuningResult {
        lambda,
        k: Some(k),
        support: None,
        warning,
    })
}

/// Grid count and penalty for the Hoelder class with parameters `(alpha, l)`:
/// `k` is the smallest integer larger than
/// `(L^2 n / (sigma^2 log(n/delta)))^{1/(2 alpha + 1)}` and
/// `lambda = sigma sqrt(log(n/delta) / (k n))`.
pub fn holder_tuning(l: f64, alpha: f64, sigma: f64, n: usize, delta: f64) -> Result<TuningResult> {
    check_positive("l", l)?;
    check_positive("sigma", sigma)?;
    check_delta(delta)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha", "must lie in (0,1]"));
    }
    if n < 3 {
        return Err(Error::domain("n", "requires n >= 3"));
    }
    let log_term = (n as f64 / delta).ln();
    let target = (l * l * n as f64 / (sigma * sigma * log_term)).powf(1.0 / (2.0 * alpha + 1.0));
    let (k, warning) = smallest_integer_above(target);
    let lambda = sigma * (log_term / (k as f64 * n as f64)).sqrt();
    Ok(TuningResult {
        lambda,
        k: Some(k),
        support: None,
        warning,
    })
}

fn smallest_integer_above(x: f64) -> (usize, Option<String>) {
    let raw = (x.floor() as i64 + 1).max(1) as usize;
    if raw < 2 {
        (2, Some(format!("k = {raw} clamped to 2 (grid needs k >= 2)")))
    } else {
        (raw, None)
    }
}

/// Cluster-based tuning: one representer per cluster
/// (`j_m = argmin_{i in G_m} max_{j in G_m} ||(I - Pi_i) x^j||_2`, ties to
/// the smallest index), `T = {j_1, .., j_M}`, and
/// `lambda = 2 sigma rho_T sqrt(2 log(p/delta) / n)` with `rho_T` recomputed
/// on the assembled support.
pub fn cluster_tuning(
    x: &DesignMatrix,
    partition: &[SupportSet],
    sigma: f64,
    delta: f64,
) -> Result<TuningResult> {
    check_positive("sigma", sigma)?;
    check_delta(delta)?;
    let p = x.p();
    let mut seen = vec![false; p];
    for cluster in partition {
        cluster.validate_for(p)?;
        if cluster.is_empty() {
            return Err(Error::InvalidPartition {
                detail: "empty cluster".into(),
            });
        }
        for &j in cluster.indices() {
            if seen[j] {
                return Err(Error::InvalidPartition {
                    detail: format!("index {} appears twice", j + 1),
                });
            }
            seen[j] = true;
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::InvalidPartition {
            detail: "clusters do not cover all columns".into(),
        });
    }

    let mut representers = Vec::with_capacity(partition.len());
    for cluster in partition {
        let mut best = (f64::INFINITY, usize::MAX);
        for &i in cluster.indices() {
            let xi = x.column(i);
            let xi_norm_sq = xi.norm_squared();
            let worst = cluster
                .indices()
                .iter()
                .map(|&j| {
                    let xj = x.column(j);
                    let res_sq = if xi_norm_sq > 0.0 {
                        let d = xi.dot(&xj);
                        (xj.norm_squared() - d * d / xi_norm_sq).max(0.0)
                    } else {
                        xj.norm_squared()
                    };
                    res_sq.sqrt()
                })
                .fold(0.0, f64::max);
            if worst < best.0 {
                best = (worst, i);
            }
        }
        representers.push(best.1);
    }
    let t = SupportSet::new(representers)?;
    let rho_t = rho(x, &t)?;
    let log_term = (p as f64 / delta).ln();
    let lambda = 2.0 * sigma * rho_t * (2.0 * log_term / x.n() as f64).sqrt();
    let warning = if lambda == 0.0 {
        Some("rho_T = 0: representers span every column, lambda degenerates to 0".into())
    } else {
        None
    };
    Ok(TuningResult {
        lambda,
        k: None,
        support: Some(t),
        warning,
    })
}

/// Inputs for [`evaluate_bound`]: a name -> value map.
pub type BoundInputs = BTreeMap<String, f64>;

/// Convenience constructor for input maps.
pub fn inputs(pairs: &[(&str, f64)]) -> BoundInputs {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect()
}

struct Ctx<'a> {
    id: &'static str,
    map: &'a BoundInputs,
}

impl<'a> Ctx<'a> {
    fn get(&self, name: &str) -> Result<f64> {
        self.map.get(name).copied().ok_or_else(|| Error::MissingInput {
            name: name.into(),
            bound: self.id,
        })
    }

    fn get_or(&self, name: &str, default: f64) -> f64 {
        self.map.get(name).copied().unwrap_or(default)
    }
}

/// Evaluates the right-hand side identified by `id` on the given inputs.
///
/// Common keys: `lambda`, `sigma`, `n`, `p`, `delta`, `gamma`, `t_size`,
/// `s`, `nu`, `nu_bar`, `kappa`, `kappa_bar`, `rho`, `rank`, `delta_min`,
/// `v_tv`, `l`, `alpha`, `lambda0`, `proj_xi_norm`, `l1_bar`, `l1_star`,
/// `l1_offsupport`, `loss_bar`, `approx`. Oracle terms (`loss_bar`,
/// `l1_offsupport`, `approx`) default to zero so the pure remainder is
/// evaluated at the oracle point.
pub fn evaluate_bound(id: BoundId, map: &BoundInputs) -> Result<BoundValue> {
    let ctx = Ctx { id: id.name(), map };
    let mut recorded = map.clone();
    let mut vacuous = false;

    let value = match id {
        BoundId::THM1_PROJ => {
            let lambda = ctx.get("lambda")?;
            let t = ctx.get("t_size")?;
            let nu = ctx.get("nu")?;
            if nu <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                lambda * lambda * t / (nu * nu)
            }
        }
        BoundId::EQ2_2 => {
            let lambda = ctx.get("lambda")?;
            let t = ctx.get("t_size")?;
            let nu = ctx.get("nu")?;
            let proj = ctx.get("proj_xi_norm")?;
            let n = ctx.get("n")?;
            if nu <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                lambda * t.sqrt() / nu + proj / n.sqrt()
            }
        }
        BoundId::EQ2_4 => {
            let lambda = ctx.get("lambda")?;
            let s = ctx.get("s")?;
            let nu = ctx.get("nu")?;
            let sigma = ctx.get("sigma")?;
            let n = ctx.get("n")?;
            if nu <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                2.0 * lambda * lambda * s / (nu * nu) + 2.0 * sigma * sigma * s / n
            }
        }
        BoundId::EQ2_5 => {
            let lambda = ctx.get("lambda")?;
            let s = ctx.get("s")?;
            let nu = ctx.get("nu")?;
            let sigma = ctx.get("sigma")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            if nu <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                2.0 * lambda * lambda * s / (nu * nu)
                    + 4.0 * sigma * sigma * (s + 2.0 * (1.0 / delta).ln()) / n
            }
        }
        BoundId::EQ2_51 => {
            let p = ctx.get("p")?;
            let n = ctx.get("n")?;
            let rank = ctx.get("rank")?;
            let nu_bar = ctx.get("nu_bar")?;
            let sigma = ctx.get("sigma")?;
            let delta = ctx.get("delta")?;
            // The first summand is printed without a sigma^2 factor; the
            // variant including it is selected by `sigma_sq_first = 1`.
            let with_sigma = ctx.get_or("sigma_sq_first", 0.0) != 0.0;
            if nu_bar <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                let first_scale = if with_sigma { sigma * sigma } else { 1.0 };
                first_scale * 4.0 * p.ln() * rank / (n * nu_bar * nu_bar)
                    + 4.0 * sigma * sigma * (rank + 2.0 * (1.0 / delta).ln()) / n
            }
        }
        BoundId::SZ_ORACLE => {
            let gamma = ctx.get("gamma")?;
            let sigma = ctx.get("sigma")?;
            let t = ctx.get("t_size")?;
            let p = ctx.get("p")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            let kappa = ctx.get("kappa")?;
            let log_term = (p / delta).ln();
            let lambda = gamma * sigma * (2.0 * log_term / n).sqrt();
            recorded.insert("lambda_derived".into(), lambda);
            if kappa <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                ctx.get_or("loss_bar", 0.0)
                    + 4.0 * lambda * ctx.get_or("l1_offsupport", 0.0)
                    + 2.0 * (1.0 + gamma) * (1.0 + gamma) * sigma * sigma * t * log_term
                        / (n * kappa)
            }
        }
        BoundId::EQ3_1 => {
            let gamma = ctx.get("gamma")?;
            let sigma = ctx.get("sigma")?;
            let t = ctx.get("t_size")?;
            let p = ctx.get("p")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            let kappa_bar = ctx.get("kappa_bar")?;
            let log_term = (p / delta).ln();
            let lambda = gamma * sigma * (2.0 * log_term / n).sqrt();
            recorded.insert("lambda_derived".into(), lambda);
            if kappa_bar <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                let remainder = 1.0 / log_term + 2.0 / t + gamma * gamma / kappa_bar;
                recorded.insert("remainder".into(), remainder);
                ctx.get_or("loss_bar", 0.0)
                    + 4.0 * lambda * ctx.get_or("l1_offsupport", 0.0)
                    + 4.0 * sigma * sigma * t * log_term / n * remainder
            }
        }
        BoundId::EQ3_3 => {
            let gamma = ctx.get("gamma")?;
            let sigma = ctx.get("sigma")?;
            let t = ctx.get("t_size")?;
            let p = ctx.get("p")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            let rho = ctx.get("rho")?;
            let kappa_bar = ctx.get("kappa_bar")?;
            let log_term = (p / delta).ln();
            let lambda = gamma * sigma * rho * (2.0 * log_term / n).sqrt();
            recorded.insert("lambda_derived".into(), lambda);
            if kappa_bar <= 0.0 || rho <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                let remainder = (1.0 + 2.0 / t * (1.0 / delta).ln()) / (rho * rho * log_term)
                    + gamma * gamma / kappa_bar;
                recorded.insert("remainder".into(), remainder);
                ctx.get_or("loss_bar", 0.0)
                    + 4.0 * lambda * ctx.get_or("l1_offsupport", 0.0)
                    + 4.0 * sigma * sigma * rho * rho * t * log_term / n * remainder
            }
        }
        BoundId::SLOW1 => {
            let lambda = ctx.get("lambda")?;
            ctx.get_or("loss_bar", 0.0) + 4.0 * lambda * ctx.get("l1_bar")?
        }
        BoundId::THM4 => {
            let lambda = ctx.get("lambda")?;
            let gamma = ctx.get("gamma")?;
            let sigma = ctx.get("sigma")?;
            let t = ctx.get("t_size")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            ctx.get_or("loss_bar", 0.0)
                + 2.0 * (gamma + 1.0) * lambda / gamma * ctx.get("l1_bar")?
                + 2.0 * sigma * sigma * (t + 2.0 * (1.0 / delta).ln()) / n
        }
        BoundId::PROP4_1 => {
            let rho = ctx.get("rho")?;
            let gamma = ctx.get("gamma")?;
            let l1_star = ctx.get("l1_star")?;
            let sigma = ctx.get("sigma")?;
            let t = ctx.get("t_size")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            let lambda = ctx.get("lambda")?;
            let nu = ctx.get("nu")?;
            if nu <= 0.0 || gamma <= 1.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                4.0 * rho * rho * gamma * gamma / ((gamma - 1.0) * (gamma - 1.0)) * l1_star
                    * l1_star
                    + 4.0 * sigma * sigma * (t + 2.0 * (1.0 / delta).ln()) / n
                    + 2.0 * t * lambda * lambda / (nu * nu)
            }
        }
        BoundId::RISKTV1 => {
            let sigma = ctx.get("sigma")?;
            let s = ctx.get("s")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            let delta_min = ctx.get("delta_min")?;
            if delta_min <= 0.0 {
                return Err(Error::domain("delta_min", "must be positive"));
            }
            let remainder = 3.0 + 256.0 * (n.ln() + n / delta_min);
            recorded.insert("remainder".into(), remainder);
            4.0 * sigma * sigma * s * (n / delta).ln() / n * remainder
        }
        BoundId::PROP4_2 => {
            let sigma = ctx.get("sigma")?;
            let v = ctx.get("v_tv")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            let dominant = 6.0
                * (sigma.powi(4) * v * v * (n / delta).ln() / (n * n)).powf(1.0 / 3.0);
            recorded.insert("dominant".into(), dominant);
            ctx.get_or("approx", 0.0)
                + 2.0 * sigma * sigma * (1.0 + 2.0 * (1.0 / delta).ln()) / n
                + dominant
        }
        BoundId::PROP4_3 => {
            let sigma = ctx.get("sigma")?;
            let l = ctx.get("l")?;
            let alpha = ctx.get("alpha")?;
            let n = ctx.get("n")?;
            let delta = ctx.get("delta")?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::domain("alpha", "must lie in (0,1]"));
            }
            let rate = 2.0 * alpha / (2.0 * alpha + 1.0);
            let dominant = 16.0 * l * l * (sigma * sigma * (n / delta).ln() / (n * l * l)).powf(rate);
            recorded.insert("dominant".into(), dominant);
            ctx.get_or("approx", 0.0) + 8.0 * sigma * sigma * (n / delta).ln() / n + dominant
        }
        BoundId::JOHSARA => {
            let lambda = ctx.get("lambda")?;
            let lambda0 = ctx.get("lambda0")?;
            let alpha = ctx.get("alpha")?;
            let t = ctx.get("t_size")?;
            let kappa = ctx.get("kappa")?;
            if !(0.0..1.0).contains(&alpha) {
                return Err(Error::domain("alpha", "must lie in [0,1)"));
            }
            if kappa <= 0.0 {
                vacuous = true;
                f64::INFINITY
            } else {
                7.0 * (ctx.get_or("loss_bar", 0.0)
                    + 8.0 * lambda / 3.0 * ctx.get_or("l1_offsupport", 0.0)
                    + 7.0 / 6.0 * (lambda0 / lambda.powf(alpha)).powf(2.0 / (1.0 - alpha))
                    + 224.0 * lambda * lambda * t / kappa)
            }
        }
    };

    if !vacuous && (!value.is_finite() || value < 0.0) {
        return Err(Error::domain(
            "bound",
            format!("{} evaluated to {value}, inputs out of domain", id.name()),
        ));
    }
    Ok(BoundValue {
        bound_id: id,
        value,
        vacuous,
        inputs: recorded,
    })
}
