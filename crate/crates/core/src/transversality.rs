//! Certified transversality statistics `e(q,p)` and `e(q)`.
//!
//! Two words `a, b ∈ A^q` are transversal on `c ∈ A^p` when
//! `|S_c'(x,a) − S_c'(y,b)| > θ = 2λ^q ℓ^{−q} α₀` for all `x, y` in the
//! closure of `P_*(c)`, i.e. when the ranges of the two derivatives are more
//! than `θ` apart. Ranges are sampled on a grid. The sampled range sits inside
//! the true one, so a sampled gap within `θ` witnesses non-transversality.
//! Between grid points the true range can overshoot the samples by at most
//! `min(α₀ℓ^{−2}h/2, α₀ℓ^{−3}h²/8)`, from `|S_c''| ≤ α₀ℓ^{−2}` and
//! `|S_c'''| ≤ α₀ℓ^{−3}`, so a sampled gap beyond `θ` plus twice that
//! overshoot certifies transversality. Anything in between is unknown.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{branch_sum_lift, PartitionInterval, SystemParams, Word};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Transversal,
    NotTransversal,
    Unknown,
}

/// Verdict for one triple `(a, b, c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub a: Word,
    pub b: Word,
    pub c: Word,
    pub status: Status,
    /// Sampled range gap minus `θ`. Transversal verdicts have `margin > padding`.
    pub margin: f64,
    pub padding: f64,
    pub grid_step: f64,
    /// Lifts `(x, y)` of the grid pair realizing the sampled gap, or of the
    /// closest pair in value when the sampled ranges overlap.
    pub witness: (f64, f64),
}

/// Threshold `θ = 2 λ^q ℓ^{−q} α₀`.
pub fn threshold(params: &SystemParams, q: usize) -> f64 {
    2.0 * (params.lambda / params.lap as f64).powi(q as i32) * params.alpha0()
}

/// Largest grid step whose padding is `θ/4`.
pub fn default_grid_step(params: &SystemParams, q: usize) -> f64 {
    let l = params.lap as f64;
    let (theta, alpha0) = (threshold(params, q), params.alpha0());
    let linear = theta * l * l / (4.0 * alpha0);
    let quadratic = (theta * l.powi(3) / alpha0).sqrt();
    linear.max(quadratic)
}

/// Bound on how far the true gap can fall below the sampled gap.
fn padding(params: &SystemParams, step: f64) -> f64 {
    let l = params.lap as f64;
    let alpha0 = params.alpha0();
    (alpha0 / (l * l) * step).min(alpha0 / l.powi(3) * step * step / 4.0)
}

/// Uniform grid over the closure of `P_*(c)` with spacing at most `h`.
#[derive(Clone, Copy, Debug)]
struct StarGrid {
    lo: f64,
    step: f64,
    points: usize,
}

impl StarGrid {
    fn new(c: &PartitionInterval, h: f64) -> Self {
        let (lo, hi) = c.lift_bounds();
        let intervals = ((hi - lo) / h).ceil().max(1.0) as usize;
        Self { lo, step: (hi - lo) / intervals as f64, points: intervals + 1 }
    }

    fn at(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }
}

/// Sampled range `(min, max)` of `S_c'(·, a)`.
fn sampled_range(params: &SystemParams, a: &Word, grid: &StarGrid) -> (f64, f64) {
    (0..grid.points).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        let d = branch_sum_lift(&params.f, params.lap, params.lambda, a, grid.at(i), 1);
        (lo.min(d), hi.max(d))
    })
}

fn range_gap(u: (f64, f64), v: (f64, f64)) -> f64 {
    (v.0 - u.1).max(u.0 - v.1).max(0.0)
}

/// `S_c'(·, a)` on the grid, sorted by value, with the grid index kept.
fn sorted_profile(params: &SystemParams, a: &Word, grid: &StarGrid) -> Vec<(f64, u32)> {
    let mut v: Vec<(f64, u32)> = (0..grid.points)
        .map(|i| {
            let d = branch_sum_lift(&params.f, params.lap, params.lambda, a, grid.at(i), 1);
            (d, i as u32)
        })
        .collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    v
}

/// `min |u − v|` over two sorted profiles, with the attaining indices.
fn min_gap(u: &[(f64, u32)], v: &[(f64, u32)]) -> (f64, u32, u32) {
    let (mut i, mut j) = (0, 0);
    let mut best = (f64::INFINITY, 0, 0);
    while i < u.len() && j < v.len() {
        let d = u[i].0 - v[j].0;
        if d.abs() < best.0 {
            best = (d.abs(), u[i].1, v[j].1);
        }
        if d < 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

fn classify(gap: f64, theta: f64, pad: f64) -> Status {
    if gap <= theta {
        Status::NotTransversal
    } else if gap - pad > theta {
        Status::Transversal
    } else {
        Status::Unknown
    }
}

/// Decides `a ⋔_c b` on a grid of spacing at most `h`.
pub fn pair_check(params: &SystemParams, a: &Word, b: &Word, c: &Word, h: f64) -> PairVerdict {
    assert!(h > 0.0, "grid step must be positive");
    assert_eq!(a.len(), b.len(), "a and b must have the same length");
    let q = a.len();
    let star = PartitionInterval::starred(params.lap, c.clone());
    let grid = StarGrid::new(&star, h);
    let (pa, pb) = (sorted_profile(params, a, &grid), sorted_profile(params, b, &grid));
    let (ra, rb) = ((pa[0].0, pa[pa.len() - 1].0), (pb[0].0, pb[pb.len() - 1].0));
    let gap = range_gap(ra, rb);
    let (i, j) = if rb.0 - ra.1 == gap && gap > 0.0 {
        (pa[pa.len() - 1].1, pb[0].1)
    } else if ra.0 - rb.1 == gap && gap > 0.0 {
        (pa[0].1, pb[pb.len() - 1].1)
    } else {
        let (_, i, j) = min_gap(&pa, &pb);
        (i, j)
    };
    let theta = threshold(params, q);
    let pad = padding(params, grid.step);
    PairVerdict {
        a: a.clone(),
        b: b.clone(),
        c: c.clone(),
        status: classify(gap, theta, pad),
        margin: gap - theta,
        padding: pad,
        grid_step: grid.step,
        witness: (grid.at(i as usize), grid.at(j as usize)),
    }
}


/// Knobs for the enumeration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransversalityOptions {
    /// Nominal grid step; `None` selects [`default_grid_step`]. Pairs are
    /// first tried on a coarser grid and resampled only while undecided.
    pub grid_step: Option<f64>,
    /// Further halvings below `grid_step` tried on unknown pairs.
    pub refinements: u32,
    /// Maximum number of `(c, a, b)` triples enumerated.
    pub budget: u128,
    /// Over budget, sample `c` instead of failing (result not certified).
    pub sample_over_budget: bool,
    pub seed: u64,
}

impl Default for TransversalityOptions {
    fn default() -> Self {
        Self {
            grid_step: None,
            refinements: 4,
            budget: 10_000_000,
            sample_over_budget: false,
            seed: 0,
        }
    }
}

/// Bracketed `e(q,p)` plus, for stabilized runs, the `e(q)` estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub q: usize,
    pub p: usize,
    pub e_lower: u64,
    pub e_upper: u64,
    pub stabilized: bool,
    /// First `p` of the final constant run of brackets.
    pub p0: Option<usize>,
    /// `(1/q) log e_upper`.
    pub growth_log: f64,
    /// `e_upper / (λ^{1+2s} ℓ)^q`.
    pub criterion: f64,
    pub unknown_pairs: u64,
    /// `false` when `c` was sampled rather than enumerated.
    pub certified: bool,
    pub budget_exhausted: bool,
    /// `(p, e_lower, e_upper)` for every `p` visited.
    pub history: Vec<(usize, u64, u64)>,
}

impl TransversalityReport {
    fn from_bracket(params: &SystemParams, q: usize, p: usize, b: Bracket, certified: bool) -> Self {
        let mut r = Self {
            q,
            p,
            e_lower: b.lower,
            e_upper: b.upper,
            stabilized: false,
            p0: None,
            growth_log: 0.0,
            criterion: 0.0,
            unknown_pairs: b.unknown,
            certified,
            budget_exhausted: false,
            history: vec![(p, b.lower, b.upper)],
        };
        r.set_growth(params);
        r
    }

    fn set_growth(&mut self, params: &SystemParams) {
        self.growth_log = (self.e_upper as f64).ln() / self.q as f64;
        self.criterion = self.e_upper as f64 / params.regime_factor().powi(self.q as i32);
    }

    /// `γ_ref = sqrt(e_upper^{1/q} / (λ^{1+2s} ℓ))`, with the
    /// non-constructive constant set to 1.
    pub fn gamma_ref(&self, params: &SystemParams) -> f64 {
        ((self.e_upper as f64).powf(1.0 / self.q as f64) / params.regime_factor()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Bracket {
    lower: u64,
    upper: u64,
    unknown: u64,
}

/// Intervals of the first grid each word is sampled on.
const COARSE_POINTS: f64 = 32.0;

/// Counts for one `c`: the maximal NT and NT+unknown counts over `a`.
///
/// Every word starts on a coarse grid; only pairs left undecided there are
/// resampled, halving the step until it drops below `h / 2^refinements`.
fn bracket_for_c(params: &SystemParams, q: usize, c: &Word, h: f64, refinements: u32) -> Bracket {
    let words: Vec<Word> = Word::all(params.lap, q).collect();
    let n = words.len();
    let star = PartitionInterval::starred(params.lap, c.clone());
    let theta = threshold(params, q);
    let (lo, hi) = star.lift_bounds();
    let coarse = h.max((hi - lo) / COARSE_POINTS);
    let finest = h / f64::powi(2.0, refinements as i32);
    let levels = (coarse / finest).log2().ceil().max(0.0) as u32;
    let base = StarGrid::new(&star, coarse);
    let pad = padding(params, base.step);
    let ranges: Vec<(f64, f64)> = words.iter().map(|w| sampled_range(params, w, &base)).collect();

    let mut by_min: Vec<usize> = (0..n).collect();
    by_min.sort_by(|&i, &j| ranges[i].0.total_cmp(&ranges[j].0));
    let mins: Vec<f64> = by_min.iter().map(|&i| ranges[i].0).collect();
    let mut maxs: Vec<f64> = ranges.iter().map(|r| r.1).collect();
    maxs.sort_by(f64::total_cmp);
    // Partners of `i` (itself included) whose sampled gap is at most `t`.
    let partners = |i: usize, t: f64| {
        let (lo, hi) = ranges[i];
        let above = n - mins.partition_point(|&m| m <= hi + t);
        let below = maxs.partition_point(|&m| m < lo - t);
        (n - above - below) as u64
    };
    let mut nt: Vec<u64> = (0..n).map(|i| partners(i, theta)).collect();
    let mut unk = vec![0u64; n];

    // Undecided pairs: `j` lies above `i` with a gap in `(θ, θ + pad]`.
    let mut pending = Vec::new();
    for i in 0..n {
        let hi = ranges[i].1;
        let from = mins.partition_point(|&m| m <= hi + theta);
        let to = mins.partition_point(|&m| m <= hi + theta + pad);
        pending.extend(by_min[from..to].iter().map(|&j| (i, j)));
    }
    let mut refined: HashMap<(u32, usize), (f64, f64)> = HashMap::new();
    let mut unknown_pairs = 0;
    for (i, j) in pending {
        let mut status = Status::Unknown;
        let mut level = 0;
        while status == Status::Unknown && level < levels {
            level += 1;
            let grid = StarGrid::new(&star, coarse / f64::powi(2.0, level as i32));
            for k in [i, j] {
                refined.entry((level, k)).or_insert_with(|| sampled_range(params, &words[k], &grid));
            }
            let gap = range_gap(refined[&(level, i)], refined[&(level, j)]);
            status = classify(gap, theta, padding(params, grid.step));
        }
        match status {
            Status::NotTransversal => {
                nt[i] += 1;
                nt[j] += 1;
            }
            Status::Unknown => {
                unk[i] += 1;
                unk[j] += 1;
                unknown_pairs += 1;
            }
            Status::Transversal => {}
        }
    }
    Bracket {
        lower: nt.iter().copied().max().unwrap_or(0),
        upper: nt.iter().zip(&unk).map(|(a, b)| a + b).max().unwrap_or(0),
        unknown: unknown_pairs,
    }
}

fn combine(parts: impl Iterator<Item = Bracket>) -> Bracket {
    parts.fold(Bracket::default(), |acc, b| Bracket {
        lower: acc.lower.max(b.lower),
        upper: acc.upper.max(b.upper),
        unknown: acc.unknown + b.unknown,
    })
}

fn triples(params: &SystemParams, q: usize, p: usize) -> u128 {
    (params.lap as u128).pow((2 * q + p) as u32)
}

/// Enumerates every `(c, a, b)` and brackets
/// `e(q,p) = max_c max_a #{b : a ⋔̸_c b}`.
pub fn e_qp(params: &SystemParams, q: usize, p: usize, opts: &TransversalityOptions) -> Result<TransversalityReport> {
    let needed = triples(params, q, p);
    if needed > opts.budget {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    let h = opts.grid_step.unwrap_or_else(|| default_grid_step(params, q));
    let count = (params.lap as u64).pow(p as u32);
    let parts: Vec<Bracket> = (0..count)
        .into_par_iter()
        .map(|ci| bracket_for_c(params, q, &Word::from_index(params.lap, p, ci), h, opts.refinements))
        .collect();
    Ok(TransversalityReport::from_bracket(params, q, p, combine(parts.into_iter()), true))
}

/// Like [`e_qp`] but over `samples` seeded random `c`; never certified.
pub fn e_qp_sampled(
    params: &SystemParams,
    q: usize,
    p: usize,
    samples: usize,
    opts: &TransversalityOptions,
) -> TransversalityReport {
    let h = opts.grid_step.unwrap_or_else(|| default_grid_step(params, q));
    let count = (params.lap as u64).pow(p as u32);
    let parts: Vec<Bracket> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let ci = rng::stream(opts.seed, p as u64, k).gen_range(0..count);
            bracket_for_c(params, q, &Word::from_index(params.lap, p, ci), h, opts.refinements)
        })
        .collect();
    TransversalityReport::from_bracket(params, q, p, combine(parts.into_iter()), false)
}

/// Runs `e(q,p)` for `p = 1, 2, …` and stops once the bracket repeats at two
/// consecutive `p`. Over budget it either samples (flagged) or stops with
/// `budget_exhausted` set and the table computed so far.
pub fn e_q_stabilized(
    params: &SystemParams,
    q: usize,
    p_max: usize,
    opts: &TransversalityOptions,
) -> TransversalityReport {
    assert!(p_max >= 2, "p_max must be ≥ 2");
    let mut history = Vec::new();
    let mut last: Option<TransversalityReport> = None;
    let mut certified = true;
    let mut exhausted = false;
    for p in 1..=p_max {
        let report = match e_qp(params, q, p, opts) {
            Ok(r) => r,
            Err(Error::BudgetExceeded { budget, .. }) if opts.sample_over_budget => {
                let per_c = (params.lap as u128).pow(2 * q as u32).max(1);
                let samples = (budget / per_c).clamp(1, 1 << 20) as usize;
                e_qp_sampled(params, q, p, samples, opts)
            }
            Err(_) => {
                exhausted = true;
                break;
            }
        };
        certified &= report.certified;
        history.push((p, report.e_lower, report.e_upper));
        let repeated = last
            .as_ref()
            .is_some_and(|prev| (prev.e_lower, prev.e_upper) == (report.e_lower, report.e_upper));
        last = Some(report);
        if repeated {
            break;
        }
    }
    let mut out = last.unwrap_or_else(|| {
        TransversalityReport::from_bracket(
            params,
            q,
            0,
            Bracket { lower: 0, upper: (params.lap as u64).pow(q as u32), unknown: 0 },
            false,
        )
    });
    let n = history.len();
    out.stabilized = n >= 2 && history[n - 1].1 == history[n - 2].1 && history[n - 1].2 == history[n - 2].2;
    if out.stabilized {
        let (lo, hi) = (history[n - 1].1, history[n - 1].2);
        let first = history.iter().rposition(|&(_, l, u)| (l, u) != (lo, hi)).map_or(0, |i| i + 1);
        out.p0 = Some(history[first].0);
    }
    out.certified = certified && !history.is_empty();
    out.budget_exhausted = exhausted;
    out.history = history;
    out
}

/// Stabilized reports for `q = 1..=q_max`.
pub fn growth_table(
    params: &SystemParams,
    q_max: usize,
    p_max: usize,
    opts: &TransversalityOptions,
) -> Vec<TransversalityReport> {
    (1..=q_max).map(|q| e_q_stabilized(params, q, p_max, opts)).collect()
}

/// Every verdict for one `(q, p)` instance, for certificate dumps.
pub fn pair_certificates(params: &SystemParams, q: usize, p: usize, h: f64) -> Vec<PairVerdict> {
    let words: Vec<Word> = Word::all(params.lap, q).collect();
    Word::all(params.lap, p)
        .collect::<Vec<_>>()
        .par_iter()
        .flat_map_iter(|c| {
            let words = &words;
            words.iter().flat_map(move |a| words.iter().map(move |b| pair_check(params, a, b, c, h)))
        })
        .collect()
}
