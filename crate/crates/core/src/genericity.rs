//! Parameter families `f_t = g + Σ tᵢφᵢ`, the affine maps `G_{x,σ}` from
//! parameters to branch-derivative differences, their Jacobians, and a
//! Monte-Carlo estimate of the bad parameter set `Y(q)`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{branch_sum_lift, tail_bound, InfiniteWord, SystemParams, TrigPoly, Word};
use crate::{rng, Error, Result};

const TAG_T: u64 = 0x6e01;
const TAG_C: u64 = 0x6e02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterFamily {
    pub lap: u32,
    pub lambda: f64,
    pub r: u32,
    pub g: TrigPoly,
    pub phis: Vec<TrigPoly>,
    /// `Σ ‖φᵢ‖_{C^r}`.
    pub d0: f64,
}

impl ParameterFamily {
    pub fn new(lap: u32, lambda: f64, r: u32, g: TrigPoly, phis: Vec<TrigPoly>) -> Result<Self> {
        SystemParams::new(lap, lambda, g.clone())?.with_r(r)?;
        let d0 = phis.iter().map(|p| p.cnorm_bound(r)).sum();
        Ok(Self { lap, lambda, r, g, phis, d0 })
    }

    /// `φ_{2j−1} = cos 2πjx`, `φ_{2j} = sin 2πjx` for `j = 1..`, `m` functions.
    pub fn fourier(lap: u32, lambda: f64, r: u32, g: TrigPoly, m: usize) -> Result<Self> {
        let phis = (0..m)
            .map(|i| {
                let j = i / 2 + 1;
                if i % 2 == 0 {
                    TrigPoly::cos_mode(j, 1.0)
                } else {
                    TrigPoly::sin_mode(j, 1.0)
                }
            })
            .collect();
        Self::new(lap, lambda, r, g, phis)
    }

    pub fn m(&self) -> usize {
        self.phis.len()
    }

    pub fn f_t(&self, t: &[f64]) -> TrigPoly {
        assert_eq!(t.len(), self.m(), "parameter dimension mismatch");
        self.phis.iter().zip(t).fold(self.g.clone(), |acc, (p, &ti)| acc.add_scaled(p, ti))
    }

    /// `κ = ‖g‖_{C^r} + D₀`, so that `f_t ∈ U_κ` on the whole box.
    pub fn kappa(&self) -> f64 {
        let k = self.g.cnorm_bound(self.r) + self.d0;
        if k > 0.0 {
            k
        } else {
            1.0
        }
    }

    pub fn alpha0(&self) -> f64 {
        self.kappa() / (1.0 - self.lambda)
    }

    pub fn params_at(&self, t: &[f64]) -> Result<SystemParams> {
        SystemParams::new(self.lap, self.lambda, self.f_t(t))?.with_r(self.r)?.with_kappa(self.kappa())
    }

    /// Truncation depth at which the first-derivative tail of every
    /// `φᵢ` and of `g` drops below `precision`.
    pub fn depth_for(&self, precision: f64) -> usize {
        let sup = self.phis.iter().chain(std::iter::once(&self.g)).map(|p| p.sup_bound(1)).fold(0.0, f64::max);
        let mut n = 1;
        while tail_bound(self.lap, self.lambda, sup, n, 1) >= precision && n < 10_000 {
            n += 1;
        }
        n
    }
}

/// A point `x` and infinite words `(a₀, …, a_k)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchSequence {
    pub words: Vec<InfiniteWord>,
    pub x: f64,
}

impl BranchSequence {
    pub fn new(words: Vec<InfiniteWord>, x: f64) -> Self {
        Self { words, x }
    }

    /// Builds `ā = a · (1,1,1,…)` for each finite word.
    pub fn from_words(words: &[Word], x: f64) -> Self {
        Self { words: words.iter().cloned().map(InfiniteWord::with_ones_tail).collect(), x }
    }

    pub fn distinct_at(&self, n: usize) -> bool {
        let mut prefixes: Vec<Word> = self.words.iter().map(|w| w.truncate(n)).collect();
        prefixes.sort_by(|a, b| a.0.cmp(&b.0));
        prefixes.windows(2).all(|w| w[0] != w[1])
    }
}

/// `(d/dx S(x, a; φ₁), …, d/dx S(x, a; φ_m))` and `d/dx S(x, a; g)` for a
/// word truncated at `depth`.
pub fn derivative_row(family: &ParameterFamily, word: &Word, x: f64) -> (Vec<f64>, f64) {
    let row = family.phis.iter().map(|p| branch_sum_lift(p, family.lap, family.lambda, word, x, 1)).collect();
    (row, branch_sum_lift(&family.g, family.lap, family.lambda, word, x, 1))
}

/// Affine map `t ↦ linear · t + offset`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GMatrix {
    /// `k` rows of length `m`.
    pub linear: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    /// Bound on the truncation error of every entry.
    pub error: f64,
}

impl GMatrix {
    pub fn apply(&self, t: &[f64]) -> Vec<f64> {
        self.linear
            .iter()
            .zip(&self.offset)
            .map(|(row, o)| o + row.iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

/// `G_{x,σ}` with infinite words truncated at the depth whose tail bound is
/// below `precision`.
pub fn g_matrix(family: &ParameterFamily, seq: &BranchSequence, precision: f64) -> Result<GMatrix> {
    if seq.words.len() < 2 {
        return Err(Error::InvalidParam("a branch sequence needs k ≥ 1".into()));
    }
    let depth = family.depth_for(precision);
    let sup = family.phis.iter().chain(std::iter::once(&family.g)).map(|p| p.sup_bound(1)).fold(0.0, f64::max);
    let error = 2.0 * tail_bound(family.lap, family.lambda, sup, depth, 1);
    if error > precision.max(0.0) * 2.0 {
        return Err(Error::TailTooLarge { bound: error, precision });
    }
    let rows: Vec<(Vec<f64>, f64)> =
        seq.words.iter().map(|w| derivative_row(family, &w.truncate(depth), seq.x)).collect();
    let (l0, v0) = &rows[0];
    let linear = rows[1..].iter().map(|(l, _)| l.iter().zip(l0).map(|(a, b)| a - b).collect()).collect();
    let offset = rows[1..].iter().map(|(_, v)| v - v0).collect();
    Ok(GMatrix { linear, offset, error })
}

/// `sqrt(det M Mᵀ)`, the product of singular values; 0 when `M` is not
/// surjective.
pub fn jacobian(linear: &[Vec<f64>]) -> f64 {
    let k = linear.len();
    if k == 0 {
        return 1.0;
    }
    let m = linear[0].len();
    if k > m {
        return 0.0;
    }
    let mat = DMatrix::from_fn(k, m, |i, j| linear[i][j]);
    let sv = mat.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= 1e-12 * max {
        return 0.0;
    }
    sv.iter().product()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GenericOutcome {
    /// Indices into the word list, first one the base word.
    Found { indices: Vec<usize>, jacobian: f64 },
    DefinitelyNone { examined: u64 },
    BudgetExhausted { examined: u64 },
}

/// Iterator over increasing `k`-subsets of `0..n`.
pub struct Combinations {
    idx: Vec<usize>,
    n: usize,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { idx: (0..k).collect(), n, done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Searches subsequences `(b₀, …, b_k)` of `words` for `Jac(G_{x,σ}) > δ`.
/// Words must be pairwise distinct at prefix length `n`.
pub fn generic_check(
    family: &ParameterFamily,
    n: usize,
    seq: &BranchSequence,
    k: usize,
    delta: f64,
    budget: u64,
) -> Result<GenericOutcome> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be ≥ 1".into()));
    }
    if !seq.distinct_at(n) {
        return Err(Error::InvalidParam(format!("words are not distinct at prefix length {n}")));
    }
    let depth = family.depth_for(1e-12).max(n);
    let rows: Vec<Vec<f64>> = seq.words.iter().map(|w| derivative_row(family, &w.truncate(depth), seq.x).0).collect();
    let mut examined = 0;
    for subset in Combinations::new(rows.len(), k + 1) {
        if examined >= budget {
            return Ok(GenericOutcome::BudgetExhausted { examined });
        }
        examined += 1;
        let base = &rows[subset[0]];
        let lin: Vec<Vec<f64>> =
            subset[1..].iter().map(|&i| rows[i].iter().zip(base).map(|(a, b)| a - b).collect()).collect();
        let jac = jacobian(&lin);
        if jac > delta {
            return Ok(GenericOutcome::Found { indices: subset, jacobian: jac });
        }
    }
    Ok(GenericOutcome::DefinitelyNone { examined })
}

/// The three inequalities `λ^{N₀−1}ℓ² < 1`, `d₀/(n₀+1) > N₀+1` and
/// `(d₀+1)e^{−βn₀/2} < 1/2`.
pub fn condq_check(lap: u32, lambda: f64, beta: f64, big_n0: usize, d0: usize, n0: usize) -> [bool; 3] {
    let l = lap as f64;
    [
        lambda.powi(big_n0 as i32 - 1) * l * l < 1.0,
        d0 as f64 / (n0 as f64 + 1.0) > big_n0 as f64 + 1.0,
        (d0 as f64 + 1.0) * (-beta * n0 as f64 / 2.0).exp() < 0.5,
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondQ {
    pub big_n0: usize,
    pub d0: usize,
    pub n0: usize,
}

/// Smallest `N₀ ≥ 2`, then the smallest `n₀ ≥ 1` admitting a `d₀`, with the
/// smallest such `d₀`. `None` when no `n₀ ≤ 10⁶` works.
pub fn condq_suggest(lap: u32, lambda: f64, beta: f64) -> Option<CondQ> {
    let l = lap as f64;
    let mut big_n0 = 2;
    while lambda.powi(big_n0 as i32 - 1) * l * l >= 1.0 {
        big_n0 += 1;
    }
    (1..=1_000_000usize).find_map(|n0| {
        let d0 = (big_n0 + 1) * (n0 + 1) + 1;
        let ok = condq_check(lap, lambda, beta, big_n0, d0, n0);
        (ok[0] && ok[1] && ok[2]).then_some(CondQ { big_n0, d0, n0 })
    })
}

/// Minimal `N₀` for the first inequality alone.
pub fn minimal_big_n0(lap: u32, lambda: f64) -> usize {
    let l = lap as f64;
    let mut n = 2;
    while lambda.powi(n as i32 - 1) * l * l >= 1.0 {
        n += 1;
    }
    n
}

/// `p(q) = ⌊q log(ℓ/λ) / log ℓ⌋ + 1`.
pub fn p_of_q(lap: u32, lambda: f64, q: usize) -> usize {
    let l = lap as f64;
    (q as f64 * (l / lambda).ln() / l.ln()).floor() as usize + 1
}

/// Wilson score interval for `hits` out of `n` at normal quantile `z`.
pub fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BadSetOptions {
    pub big_n0: usize,
    pub trials: usize,
    pub seed: u64,
    /// Multiplies the half-width `8(λ/ℓ)^q α₀` of the target cube.
    pub threshold_scale: f64,
    /// Extra abscissae per `c` beyond the left endpoint `x_c`.
    pub x_samples: usize,
    /// Cap on `#(σ, c)` candidates before `c` is sampled.
    pub budget: u128,
    pub precision: f64,
}

impl Default for BadSetOptions {
    fn default() -> Self {
        Self { big_n0: 4, trials: 400, seed: 0, threshold_scale: 1.0, x_samples: 0, budget: 1 << 32, precision: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BadSetEstimate {
    pub q: usize,
    pub p: usize,
    pub big_n0: usize,
    pub threshold: f64,
    pub trials: usize,
    pub hits: u64,
    pub measure_estimate: f64,
    pub ci: (f64, f64),
    /// Nominal count `ℓ^{q(N₀+1)+p}` of sequence and word pairs.
    pub pairs_enumerated: u128,
    /// Number of `c` words actually scanned.
    pub c_scanned: usize,
    /// Word subsets and abscissae with `Jac > 1/2`, i.e. the scanned part
    /// of `B^q` up to ordering.
    pub good_pairs: u64,
    /// True when `c` was sampled because of the budget; the estimate is
    /// then a lower bound.
    pub sampled: bool,
    /// `ℓ^{q(N₀+1)+p} (λ/ℓ)^{qN₀}` with unit constant.
    pub analytic_shape: f64,
}

/// Derivative rows at one abscissa and the `(N₀+1)`-subsets of words whose
/// difference matrix has `Jac > 1/2` (independent of `t`; the Jacobian does
/// not depend on which member serves as base word).
struct Block {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    good: Vec<Vec<u16>>,
}

impl Block {
    fn new(rows: Vec<Vec<f64>>, offsets: Vec<f64>, big_n0: usize) -> Self {
        let good = Combinations::new(rows.len(), big_n0 + 1)
            .filter(|subset| {
                let base = &rows[subset[0]];
                let lin: Vec<Vec<f64>> =
                    subset[1..].iter().map(|&i| rows[i].iter().zip(base).map(|(a, b)| a - b).collect()).collect();
                jacobian(&lin) > 0.5
            })
            .map(|subset| subset.into_iter().map(|i| i as u16).collect())
            .collect();
        Self { rows, offsets, good }
    }

    /// True when some good subset has a member within `θ` of all others.
    fn hit(&self, t: &[f64], theta: f64) -> bool {
        if self.good.is_empty() {
            return false;
        }
        let v: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.offsets)
            .map(|(row, o)| o + row.iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        self.good.iter().any(|subset| {
            subset.iter().any(|&b0| subset.iter().all(|&b| (v[b as usize] - v[b0 as usize]).abs() <= theta))
        })
    }
}

/// Monte-Carlo fraction of `t ∈ [−1,1]^m` in `Y(q)`.
pub fn bad_set_measure(family: &ParameterFamily, q: usize, opts: &BadSetOptions) -> Result<BadSetEstimate> {
    if q == 0 || opts.big_n0 == 0 || opts.trials == 0 {
        return Err(Error::InvalidParam("q, N0 and trials must be ≥ 1".into()));
    }
    let (lap, lambda) = (family.lap, family.lambda);
    let l = lap as f64;
    let p = p_of_q(lap, lambda, q);
    let threshold = opts.threshold_scale * 8.0 * (lambda / l).powi(q as i32) * family.alpha0();
    let words_q = (lap as u128).pow(q as u32);
    let n_c = (lap as u128).pow(p as u32);
    let pairs = words_q.saturating_pow(opts.big_n0 as u32 + 1).saturating_mul(n_c);
    if words_q > u16::MAX as u128 {
        return Err(Error::BudgetExceeded { needed: words_q, budget: u16::MAX as u128 });
    }
    let per_c = binomial(words_q as u64, opts.big_n0 as u64 + 1);
    let (c_list, sampled): (Vec<u64>, bool) = if per_c.saturating_mul(n_c) <= opts.budget {
        ((0..n_c as u64).collect(), false)
    } else {
        let keep = (opts.budget / per_c.max(1)).max(1) as u64;
        let mut r = rng::stream(opts.seed, TAG_C, q as u64);
        let stride = n_c as f64 / keep as f64;
        ((0..keep).map(|i| ((i as f64 + r.gen::<f64>()) * stride) as u64).collect(), true)
    };
    let depth = family.depth_for(opts.precision).max(q);
    let words: Vec<Word> = Word::all(lap, q).collect();
    let blocks: Vec<Block> = c_list
        .par_iter()
        .flat_map_iter(|&ci| {
            let c = Word::from_index(lap, p, ci);
            let xc = c.left_endpoint(lap);
            let width = l.powi(-(p as i32));
            let words = &words;
            (0..=opts.x_samples).map(move |j| {
                let x = xc + width * j as f64 / (opts.x_samples + 1) as f64;
                let (rows, offsets) = words
                    .iter()
                    .map(|b| derivative_row(family, &InfiniteWord::with_ones_tail(b.clone()).truncate(depth), x))
                    .unzip();
                Block::new(rows, offsets, opts.big_n0)
            })
        })
        .collect();
    let m = family.m();
    let hits_vec: Vec<bool> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut r = rng::stream(opts.seed, TAG_T, trial as u64);
            let t: Vec<f64> = (0..m).map(|_| 2.0 * r.gen::<f64>() - 1.0).collect();
            blocks.iter().any(|b| b.hit(&t, threshold))
        })
        .collect();
    let good_pairs = blocks.iter().map(|b| b.good.len() as u64).sum();
    let hits = hits_vec.iter().filter(|&&h| h).count() as u64;
    let ci = wilson(hits, opts.trials as u64, 1.959963984540054);
    let analytic_shape = l.powf((q * (opts.big_n0 + 1) + p) as f64) * (lambda / l).powf((q * opts.big_n0) as f64);
    Ok(BadSetEstimate {
        q,
        p,
        big_n0: opts.big_n0,
        threshold,
        trials: opts.trials,
        hits,
        measure_estimate: hits as f64 / opts.trials as f64,
        ci,
        pairs_enumerated: pairs,
        c_scanned: c_list.len(),
        good_pairs,
        sampled,
        analytic_shape,
    })
}
