//! Positivity of the semigroup `t ↦ e^{−tM}` for a real symmetric `M`.
//!
//! With `G = −M`: a Metzler, irreducible `G` gives a strongly positive
//! semigroup and a reducible Metzler `G` a positive one. Otherwise the
//! semigroup is eventually strongly positive exactly when the orthogonal
//! projection onto the top eigenspace of `G` has only positive entries.
//!
//! [`expm_oracle`] checks verdicts by evaluating `e^{−tM}` directly.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::expm::expm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("numerically marginal: {quantity} = {value:e} is within tolerance of zero")]
    NumericallyMarginal { quantity: String, value: f64 },
    #[error("matrix is not square and symmetric")]
    NotSymmetric,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    /// Relative tolerance for sign decisions.
    pub sign_tolerance: f64,
    /// Oracle sample times. `None` selects a grid scaled by the matrix norm.
    pub oracle_times: Option<Vec<f64>>,
    /// Largest power tried in the `(μI − M)^k ≫ 0` cross-check.
    pub power_k_max: u64,
    /// Eigenvalues within this multiple of the scale of the spectral bound
    /// share its eigenspace.
    pub eigen_merge: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            sign_tolerance: 1e-11,
            oracle_times: None,
            power_k_max: 1 << 20,
            eigen_merge: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    StronglyPositive,
    Positive,
    EventuallyStronglyPositive,
    NotEventuallyPositive,
    AtPole,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StronglyPositive => "strong",
            Verdict::Positive => "positive",
            Verdict::EventuallyStronglyPositive => "eventual",
            Verdict::NotEventuallyPositive => "none",
            Verdict::AtPole => "pole",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCheck {
    pub mu: f64,
    /// Smallest tried power from which every tried power was positive.
    pub k: Option<u64>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub scale: f64,
    /// Smallest off-diagonal entry of `−M`.
    pub metzler_margin: f64,
    pub irreducible: Option<bool>,
    pub spectral_bound: Option<f64>,
    pub eigenspace_dim: Option<usize>,
    /// Signs of the top eigenvector when the top eigenspace is simple.
    pub dominant_signs: Option<Vec<i8>>,
    pub projection_min: Option<f64>,
    pub power: Option<PowerCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupClass {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    let s = m.amax();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Returns whether every off-diagonal entry of `neg_m` is at least
/// `−sign_tolerance·scale`, together with the smallest off-diagonal entry.
pub fn is_metzler(neg_m: &DMatrix<f64>, cfg: &ClassifierConfig) -> (bool, f64) {
    let n = neg_m.nrows();
    let mut margin = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                margin = margin.min(neg_m[(i, j)]);
            }
        }
    }
    (margin >= -cfg.sign_tolerance * scale_of(neg_m), margin)
}

/// Strong connectivity of the directed graph with an arc `i → j` whenever
/// `|m_ij|` exceeds `sign_tolerance·scale`.
pub fn is_irreducible(m: &DMatrix<f64>, cfg: &ClassifierConfig) -> bool {
    let n = m.nrows();
    if n <= 1 {
        return true;
    }
    let cut = cfg.sign_tolerance * scale_of(m);
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let x = if forward { m[(i, j)] } else { m[(j, i)] };
                if i != j && !seen[j] && x.abs() > cut {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn check_input(m: &DMatrix<f64>, tol: f64) -> Result<(), ClassifyError> {
    if m.nrows() == 0 {
        return Err(ClassifyError::Empty);
    }
    if m.nrows() != m.ncols() {
        return Err(ClassifyError::NotSymmetric);
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    let bound = tol * scale_of(m);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > bound {
                return Err(ClassifyError::NotSymmetric);
            }
        }
    }
    Ok(())
}

pub fn classify(m: &DMatrix<f64>, cfg: &ClassifierConfig) -> Result<SemigroupClass, ClassifyError> {
    let tol = cfg.sign_tolerance;
    check_input(m, tol)?;
    let n = m.nrows();
    let g = -m;
    let scale = scale_of(m);

    for i in 0..n {
        for j in 0..i {
            let x = g[(i, j)];
            if x != 0.0 && x.abs() <= tol * scale {
                return Err(ClassifyError::NumericallyMarginal {
                    quantity: format!("off-diagonal entry ({}, {}) / scale", i + 1, j + 1),
                    value: x / scale,
                });
            }
        }
    }
    let (metzler, metzler_margin) = is_metzler(&g, cfg);
    let mut evidence = Evidence {
        scale,
        metzler_margin,
        irreducible: None,
        spectral_bound: None,
        eigenspace_dim: None,
        dominant_signs: None,
        projection_min: None,
        power: None,
    };
    if metzler {
        let irreducible = is_irreducible(&g, cfg);
        evidence.irreducible = Some(irreducible);
        let verdict = if irreducible {
            Verdict::StronglyPositive
        } else {
            Verdict::Positive
        };
        return Ok(SemigroupClass { verdict, evidence });
    }

    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let s = eig.eigenvalues[order[0]];
    let top: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| s - eig.eigenvalues[i] <= cfg.eigen_merge * scale)
        .collect();
    let spread = s - eig.eigenvalues[*top.last().unwrap()];
    if spread > 1e-12 * scale {
        return Err(ClassifyError::NumericallyMarginal {
            quantity: "splitting of the top eigenvalue cluster / scale".into(),
            value: spread / scale,
        });
    }
    let mut p = DMatrix::<f64>::zeros(n, n);
    for &i in &top {
        let v = eig.eigenvectors.column(i);
        p += v * v.transpose();
    }
    let pmin = p.min();
    evidence.spectral_bound = Some(s);
    evidence.eigenspace_dim = Some(top.len());
    evidence.projection_min = Some(pmin);
    if top.len() == 1 {
        let v = eig.eigenvectors.column(top[0]);
        let flip = if v.sum() < 0.0 { -1.0 } else { 1.0 };
        evidence.dominant_signs = Some(v.iter().map(|&x| (flip * x).signum() as i8).collect());
    }
    if pmin.abs() <= tol {
        return Err(ClassifyError::NumericallyMarginal {
            quantity: "minimum entry of the spectral projection".into(),
            value: pmin,
        });
    }
    let eventual = pmin > 0.0;
    let rest: Vec<f64> = order[top.len()..].iter().map(|&i| eig.eigenvalues[i]).collect();
    if let (Some(&second), Some(&lowest)) = (rest.first(), rest.last()) {
        evidence.power = Some(power_check(&g, s, second, lowest, eventual, cfg.power_k_max));
    }
    let verdict = if eventual {
        Verdict::EventuallyStronglyPositive
    } else {
        Verdict::NotEventuallyPositive
    };
    Ok(SemigroupClass { verdict, evidence })
}

/// Looks for `k` with `(μI + G)^k ≫ 0`, with `μ` centring the non-dominant
/// eigenvalues of `G` around zero.
fn power_check(g: &DMatrix<f64>, s: f64, second: f64, lowest: f64, eventual: bool, k_max: u64) -> PowerCheck {
    let n = g.nrows();
    let mu = -(second + lowest) / 2.0;
    let x = (g + DMatrix::<f64>::identity(n, n) * mu) / (s + mu);
    let mut y = x.clone();
    let mut k = 1u64;
    let mut since: Option<u64> = None;
    loop {
        if y.min() > 0.0 {
            since.get_or_insert(k);
        } else {
            since = None;
        }
        if k >= k_max {
            break;
        }
        if k < 64 {
            y = &y * &x;
            k += 1;
        } else {
            y = &y * &y;
            k *= 2;
        }
        let norm = y.amax();
        if norm > 0.0 {
            y /= norm;
        }
    }
    PowerCheck {
        mu,
        k: since,
        agrees: since.is_some() == eventual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleClass {
    /// Entrywise positive at every sample.
    AllTimesPositive,
    /// Entrywise positive from some sample onwards, but not at the first.
    PositiveAfter,
    /// Entrywise non-negative at every sample, with a zero entry at the last.
    NonnegativeOnly,
    /// Some entry is negative or zero at the last sample.
    NotPositiveAtHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub class: OracleClass,
    pub times: Vec<f64>,
    /// Sample time from which all later samples were positive.
    pub positive_from: Option<f64>,
    pub horizon: f64,
}

impl OracleReport {
    /// Whether a spectral verdict is consistent with the sampled behaviour.
    pub fn agrees_with(&self, verdict: Verdict) -> bool {
        matches!(
            (verdict, self.class),
            (Verdict::StronglyPositive, OracleClass::AllTimesPositive)
                | (Verdict::Positive, OracleClass::NonnegativeOnly)
                | (Verdict::EventuallyStronglyPositive, OracleClass::PositiveAfter)
                | (Verdict::NotEventuallyPositive, OracleClass::NotPositiveAtHorizon)
        )
    }
}

fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| lo * ratio.powi(i as i32)).collect()
}

/// Samples `e^{−tM}` on a geometric time grid. The default grid has 24
/// points in `[1e−3, 1e3]/‖M‖₁`, extends three decades below at the same
/// ratio, and continues past `1e3/‖M‖₁` by repeated squaring (normalised by
/// the largest entry, which leaves signs unchanged) up to `1e12/‖M‖₁`.
pub fn expm_oracle(m: &DMatrix<f64>, cfg: &ClassifierConfig) -> OracleReport {
    let n = m.nrows();
    let norm = m
        .column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let norm = if norm > 0.0 { norm } else { 1.0 };
    let g = -m;

    let mut samples: Vec<(f64, DMatrix<f64>)> = Vec::new();
    match &cfg.oracle_times {
        Some(times) => {
            let mut times = times.clone();
            times.sort_by(f64::total_cmp);
            for t in times {
                samples.push((t, expm(&(&g * t))));
            }
        }
        None => {
            let base = geometric(1e-3 / norm, 1e3 / norm, 24);
            let ratio = base[1] / base[0];
            let mut times: Vec<f64> = (1..=12).rev().map(|i| base[0] / ratio.powi(i)).collect();
            times.extend(base);
            for &t in &times {
                samples.push((t, expm(&(&g * t))));
            }
            let (mut t, mut e) = samples.last().cloned().unwrap();
            while t < 1e12 / norm {
                e = &e * &e;
                let top = e.amax();
                if top > 0.0 && top.is_finite() {
                    e /= top;
                }
                t *= 2.0;
                samples.push((t, e.clone()));
            }
        }
    }

    let positive: Vec<bool> = samples.iter().map(|(_, e)| e.iter().all(|&x| x > 0.0)).collect();
    let nonnegative = samples.iter().all(|(_, e)| e.iter().all(|&x| x >= 0.0));
    let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let horizon = *times.last().unwrap_or(&0.0);
    let tail_start = positive.iter().rposition(|&p| !p).map_or(0, |i| i + 1);
    let positive_from = times.get(tail_start).copied();
    let class = if n == 0 || tail_start == 0 {
        OracleClass::AllTimesPositive
    } else if tail_start < times.len() {
        OracleClass::PositiveAfter
    } else if nonnegative {
        OracleClass::NonnegativeOnly
    } else {
        OracleClass::NotPositiveAtHorizon
    };
    OracleReport {
        class,
        times,
        positive_from: if tail_start < samples.len() { positive_from } else { None },
        horizon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupProbe {
    pub forward_positive: bool,
    pub backward_positive: bool,
    pub group_positive: bool,
    pub diagonal: bool,
    /// A positive group forces a diagonal generator.
    pub implication_holds: bool,
}

/// Samples `e^{tM}` for `t` of both signs.
pub fn group_positivity_probe(m: &DMatrix<f64>, cfg: &ClassifierConfig) -> GroupProbe {
    let n = m.nrows();
    let scale = scale_of(m);
    let times = geometric(1e-3 / scale, 1e1 / scale, 16);
    let positive_at = |t: f64| {
        let e = expm(&(m * t));
        let cut = -cfg.sign_tolerance * e.amax();
        e.iter().all(|&x| x >= cut)
    };
    let forward_positive = times.iter().all(|&t| positive_at(t));
    let backward_positive = times.iter().all(|&t| positive_at(-t));
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].abs() <= cfg.sign_tolerance * scale));
    let group_positive = forward_positive && backward_positive;
    GroupProbe {
        forward_positive,
        backward_positive,
        group_positive,
        diagonal,
        implication_holds: !group_positive || diagonal,
    }
}
