//! Simultaneous phase targeting.
//!
//! Given lengths `L_e` and angular windows around targets `c_e`, find `μ`
//! such that every `μ L_e` lies in its window modulo `2π`. Writing
//! `μ = (c_p + 2πk)/L_p` for a pivot edge `p`, the remaining conditions ask
//! for an integer `k` with `k·r_e + s_e` close to an integer for each other
//! edge, an inhomogeneous simultaneous approximation problem. Candidates
//! are the lattice points near the target in an LLL-reduced basis, listed
//! by Fincke–Pohst enumeration; each candidate is then checked directly
//! and nudged to the centre of the intersection of its windows.

use std::f64::consts::PI;

/// Angular window `|θ − center| ≤ half_width` modulo `2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseWindow {
    pub center: f64,
    pub half_width: f64,
}

impl PhaseWindow {
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        PhaseWindow {
            center: 0.5 * (lo + hi),
            half_width: 0.5 * (hi - lo),
        }
    }
}

/// Counts candidate evaluations against a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub limit: u64,
    pub used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn spend(&mut self, n: u64) -> bool {
        if self.used + n > self.limit {
            self.used = self.limit;
            false
        } else {
            self.used += n;
            true
        }
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }
}

/// Rounding in `μ`, `λ = μ²` and `√λ·L` perturbs a phase by about this
/// many units of `μL` in the last place.
const PHASE_ROUNDING: f64 = 4.0 * f64::EPSILON;
/// Largest tolerated rounding error as a fraction of the narrowest window.
const ROUNDING_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub mu: f64,
    /// Signed deviation of each phase from its window centre.
    pub offsets: Vec<f64>,
    /// Smallest remaining slack as a fraction of the window half-width.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Miss {
    Budget { best_violation: f64 },
    Precision { best_violation: f64 },
}

pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn frac_centered(x: f64) -> f64 {
    x - x.round()
}

/// Finds `μ > mu_min` with every phase `μ L_e` inside its window.
pub fn hit_phases(
    lengths: &[f64],
    windows: &[PhaseWindow],
    mu_min: f64,
    budget: &mut Budget,
) -> Result<Hit, Miss> {
    assert_eq!(lengths.len(), windows.len());
    let n = lengths.len();
    let pivot = (0..n)
        .max_by(|&a, &b| lengths[a].total_cmp(&lengths[b]))
        .expect("at least one length");
    let lp = lengths[pivot];
    let cp = windows[pivot].center;
    let k0 = ((mu_min * lp - cp) / (2.0 * PI)).floor() + 1.0;
    let mut best_violation = f64::INFINITY;

    if n == 1 {
        let mut k = k0;
        loop {
            if !budget.spend(1) {
                return Err(Miss::Budget { best_violation });
            }
            let mu = (cp + 2.0 * PI * k) / lp;
            if mu > mu_min {
                return Ok(Hit { mu, offsets: vec![wrap(mu * lp - cp)], slack: 1.0 });
            }
            k += 1.0;
        }
    }

    let others: Vec<usize> = (0..n).filter(|&e| e != pivot).collect();
    let d = others.len();
    let ratio: Vec<f64> = others.iter().map(|&e| lengths[e] / lp).collect();
    let shift: Vec<f64> = others
        .iter()
        .zip(&ratio)
        .map(|(&e, &r)| frac_centered((cp * r - windows[e].center) / (2.0 * PI) + frac_centered(k0 * r)))
        .collect();
    let eps: Vec<f64> = others.iter().map(|&e| windows[e].half_width / (2.0 * PI)).collect();
    let expected: f64 = eps.iter().map(|e| 1.0 / (2.0 * e)).product();

    let narrowest = windows.iter().map(|w| w.half_width).fold(f64::INFINITY, f64::min);
    let max_multiplier = ROUNDING_SHARE * narrowest / (PHASE_ROUNDING * 2.0 * PI);
    let mut span = (expected / 8.0).max(16.0).ceil();
    loop {
        if k0 + span > max_multiplier {
            return Err(Miss::Precision { best_violation });
        }
        // Columns: coordinate 0 tracks j/span, coordinate i+1 tracks
        // (j r_i + m_i + s_i)/eps_i for j, m_i integers.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
        let mut first = vec![1.0 / span];
        first.extend(ratio.iter().zip(&eps).map(|(r, e)| r / e));
        basis.push(first);
        for i in 0..d {
            let mut v = vec![0.0; d + 1];
            v[i + 1] = 1.0 / eps[i];
            basis.push(v);
        }
        let mut coeffs: Vec<Vec<i128>> = (0..=d)
            .map(|i| (0..=d).map(|j| i128::from(i == j)).collect())
            .collect();
        lll(&mut basis, &mut coeffs, 0.99);

        let mut target = vec![0.5];
        target.extend(shift.iter().zip(&eps).map(|(s, e)| -s / e));
        // Every lattice point in the box around the target lies in this ball.
        let radius2 = d as f64 + 0.25;
        let mut candidates: Vec<i128> = enumerate_ball(&basis, &target, radius2, MAX_POINTS)
            .into_iter()
            .map(|x| x.iter().zip(&coeffs).map(|(&c, row)| c * row[0]).sum::<i128>())
            .filter(|&j| j >= 0)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let mut best: Option<Hit> = None;
        for j in candidates {
            if !budget.spend(1) {
                return match best {
                    Some(hit) => Ok(hit),
                    None => Err(Miss::Budget { best_violation }),
                };
            }
            let k = k0 + j as f64;
            let mu0 = (cp + 2.0 * PI * k) / lp;
            match refine(lengths, windows, mu0) {
                Ok(hit) if hit.mu > mu_min => {
                    if best.as_ref().is_none_or(|b| hit.slack > b.slack) {
                        best = Some(hit);
                    }
                }
                Ok(_) => {}
                Err(violation) => best_violation = best_violation.min(violation),
            }
        }
        if let Some(hit) = best {
            return Ok(hit);
        }
        if budget.exhausted() {
            return Err(Miss::Budget { best_violation });
        }
        span *= 2.0;
    }
}

/// Upper bound on lattice points examined per round.
const MAX_POINTS: usize = 20_000;

/// Integer coordinates (in `basis`) of lattice points within squared
/// distance `radius2` of `target`, by Fincke–Pohst enumeration.
fn enumerate_ball(basis: &[Vec<f64>], target: &[f64], radius2: f64, max_points: usize) -> Vec<Vec<i128>> {
    let n = basis.len();
    let (star, mu, norms) = gram_schmidt(basis);
    let tau: Vec<f64> = (0..n).map(|i| dot(target, &star[i]) / norms[i]).collect();
    let mut out = Vec::new();
    let mut x = vec![0i128; n];
    fn walk(
        level: usize,
        partial: f64,
        x: &mut Vec<i128>,
        ctx: (&[Vec<f64>], &[f64], &[f64], f64),
        out: &mut Vec<Vec<i128>>,
        max_points: usize,
    ) {
        let (mu, norms, tau, radius2) = ctx;
        let n = x.len();
        let centre = tau[level] - ((level + 1)..n).map(|j| mu[j][level] * x[j] as f64).sum::<f64>();
        let room = ((radius2 - partial) / norms[level]).max(0.0).sqrt();
        let lo = (centre - room).ceil() as i128;
        let hi = (centre + room).floor() as i128;
        for v in lo..=hi {
            if out.len() >= max_points {
                return;
            }
            x[level] = v;
            let used = partial + norms[level] * (v as f64 - centre).powi(2);
            if used > radius2 {
                continue;
            }
            if level == 0 {
                out.push(x.clone());
            } else {
                walk(level - 1, used, x, ctx, out, max_points);
            }
        }
    }
    walk(n - 1, 0.0, &mut x, (&mu, &norms, &tau, radius2), &mut out, max_points);
    out
}

/// Moves `mu0` inside the intersection of all windows, maximising the
/// smallest normalised slack. Returns the worst normalised violation at
/// `mu0` when the intersection is empty.
fn refine(lengths: &[f64], windows: &[PhaseWindow], mu0: f64) -> Result<Hit, f64> {
    let dev: Vec<f64> = lengths
        .iter()
        .zip(windows)
        .map(|(l, w)| wrap(mu0 * l - w.center))
        .collect();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((l, w), d) in lengths.iter().zip(windows).zip(&dev) {
        lo = lo.max((-w.half_width - d) / l);
        hi = hi.min((w.half_width - d) / l);
    }
    let slack = |tau: f64| {
        lengths
            .iter()
            .zip(windows)
            .zip(&dev)
            .map(|((l, w), d)| 1.0 - (d + tau * l).abs() / w.half_width)
            .fold(f64::INFINITY, f64::min)
    };
    if !(lo < hi) {
        return Err(-slack(0.0));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if slack(m1) < slack(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let tau = 0.5 * (a + b);
    let mu = mu0 + tau;
    let offsets: Vec<f64> = lengths
        .iter()
        .zip(windows)
        .map(|(l, w)| wrap(mu * l - w.center))
        .collect();
    let s = offsets
        .iter()
        .zip(windows)
        .map(|(o, w)| 1.0 - o.abs() / w.half_width)
        .fold(f64::INFINITY, f64::min);
    if s <= 0.0 {
        return Err(-s);
    }
    Ok(Hit { mu, offsets, slack: s })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(basis: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let n = basis.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = basis[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&basis[i], &star[j]) / norms[j];
            for (x, y) in v.iter_mut().zip(&star[j]) {
                *x -= mu[i][j] * y;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (star, mu, norms)
}

/// LLL reduction of the rows of `basis`, applying the same row operations
/// to the integer matrix `coeffs`.
pub fn lll(basis: &mut [Vec<f64>], coeffs: &mut [Vec<i128>], delta: f64) {
    let n = basis.len();
    if n < 2 {
        return;
    }
    let mut k = 1;
    let mut guard = 0usize;
    while k < n && guard < 100_000 {
        guard += 1;
        let (_, mut mu, _) = gram_schmidt(basis);
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 {
                let (head, tail) = basis.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= q * y;
                }
                let (chead, ctail) = coeffs.split_at_mut(k);
                for (x, y) in ctail[0].iter_mut().zip(&chead[j]) {
                    *x -= q as i128 * y;
                }
                let (mhead, mtail) = mu.split_at_mut(k);
                for (i, x) in mtail[0].iter_mut().enumerate().take(j + 1) {
                    *x -= q * if i == j { 1.0 } else { mhead[j][i] };
                }
            }
        }
        let (_, mu, norms) = gram_schmidt(basis);
        if norms[k] >= (delta - mu[k][k - 1].powi(2)) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            coeffs.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
}
