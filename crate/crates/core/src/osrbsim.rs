//! Finite-blocklength random-binning simulator.
//!
//! Every `vⁿ` and `uⁿ` gets an independent uniform pair of bin indices
//! `(F, W)`; `F` is public, `W` is sent. The encoder forward-samples
//! `Uⁿ ~ P(U|X̃)ⁿ` and `Vⁿ ~ P(V|U)ⁿ` (not the conditional-binning encoder of
//! the achievability proof, whose induced law only agrees asymptotically).
//! The decoder picks the most likely `vⁿ` in its bin given `yⁿ`, then the most
//! likely `uⁿ` in its bin given `(v̂ⁿ, yⁿ)`, and applies `g` letterwise.
//!
//! Sequences are indexed lexicographically with the first letter most
//! significant. Bin maps are drawn in that order from a ChaCha8 stream.

use std::collections::HashMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, axis, FunctionSpec, SourceModel};
use crate::region::{aux_joint, AuxChannels, AuxSystem, ReconstructionFn};
use crate::seed::child_seed;

/// Largest enumerable sequence space, in bits.
pub const ENUM_CAP_BITS: f64 = 24.0;
/// Largest bin count per index, in bits.
pub const BIN_CAP_BITS: f64 = 31.0;
/// Exact leakage needs `(|X|·max(|Y|,|Z|))ⁿ ≤ 2^16` ...
pub const EXACT_TABLE_BITS: f64 = 16.0;
/// ... and `(|X̃|·|U|·|V|)ⁿ ≤ 2^26`.
pub const EXACT_WORK_BITS: f64 = 26.0;
/// Relative tolerance under which two posterior scores tie.
pub const TIE_TOL: f64 = 1e-12;
const Z95: f64 = 1.959_963_984_540_054;

/// Binning rates in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinRates {
    pub r_v_tilde: f64,
    pub r_v: f64,
    pub r_u_tilde: f64,
    pub r_u: f64,
}

impl BinRates {
    pub fn new(r_v_tilde: f64, r_v: f64, r_u_tilde: f64, r_u: f64) -> Result<Self> {
        for (what, r) in [
            ("r_v_tilde", r_v_tilde),
            ("r_v", r_v),
            ("r_u_tilde", r_u_tilde),
            ("r_u", r_u),
        ] {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Domain { what, value: r });
            }
        }
        Ok(Self {
            r_v_tilde,
            r_v,
            r_u_tilde,
            r_u,
        })
    }

    /// Single bin everywhere.
    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0).expect("zero rates")
    }

    /// Bin counts `ceil(2^{n·r})` at blocklength `n`.
    pub fn counts(&self, n: usize) -> Result<BinCounts> {
        let c = |r: f64| -> Result<u64> {
            let bits = n as f64 * r;
            if bits > BIN_CAP_BITS {
                return Err(Error::CapExceeded {
                    what: "bin count".into(),
                    required: bits.exp2().ceil().min(u128::MAX as f64) as u128,
                    cap: 1u128 << BIN_CAP_BITS as u32,
                });
            }
            // the slack keeps exact powers of two from rounding up
            Ok(((bits.exp2() * (1.0 - 1e-12)).ceil() as u64).max(1))
        };
        Ok(BinCounts {
            f_v: c(self.r_v_tilde)?,
            w_v: c(self.r_v)?,
            f_u: c(self.r_u_tilde)?,
            w_u: c(self.r_u)?,
        })
    }
}

impl fmt::Display for BinRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "R̃_v={:.6} R_v={:.6} R̃_u={:.6} R_u={:.6}",
            self.r_v_tilde, self.r_v, self.r_u_tilde, self.r_u
        )
    }
}

/// Number of values each bin index takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinCounts {
    pub f_v: u64,
    pub w_v: u64,
    pub f_u: u64,
    pub w_u: u64,
}

/// Rates from [`default_rates`] plus a note for every clamped value.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultRates {
    pub rates: BinRates,
    pub warnings: Vec<String>,
}

/// `R̃_v = H(V|X̃)−ε`, `R_v = I(V;X̃)−I(V;Y)+2ε`, `R̃_u = H(U|V,X̃)−ε`,
/// `R_u = I(U;X̃|V)−I(U;Y|V)+2ε`, negatives clamped to zero.
pub fn default_rates(
    m: &SourceModel<f64>,
    aux: &AuxChannels<f64>,
    epsilon: f64,
) -> Result<DefaultRates> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    let j = aux_joint(m, &AuxSystem::single(aux.clone()))?;
    let (u, v, xt, y) = (axis::U, axis::V, axis::XT, axis::Y);
    let raw = [
        ("r_v_tilde", j.cond_entropy(&[v], &[xt])? - epsilon),
        ("r_v", j.mutual_info(&[v], &[xt])? - j.mutual_info(&[v], &[y])? + 2.0 * epsilon),
        ("r_u_tilde", j.cond_entropy(&[u], &[v, xt])? - epsilon),
        (
            "r_u",
            j.cond_mutual_info(&[u], &[xt], &[v])? - j.cond_mutual_info(&[u], &[y], &[v])?
                + 2.0 * epsilon,
        ),
    ];
    let mut warnings = Vec::new();
    let r: Vec<f64> = raw
        .iter()
        .map(|&(name, r)| {
            if r < 0.0 {
                warnings.push(format!("{name} = {r:.6} clamped to 0"));
                0.0
            } else {
                r
            }
        })
        .collect();
    Ok(DefaultRates {
        rates: BinRates::new(r[0], r[1], r[2], r[3])?,
        warnings,
    })
}

fn seq_space(k: usize, n: usize, what: &str) -> Result<usize> {
    let bits = n as f64 * (k as f64).log2();
    if bits > ENUM_CAP_BITS {
        return Err(Error::CapExceeded {
            what: what.into(),
            required: (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX),
            cap: 1u128 << ENUM_CAP_BITS as u32,
        });
    }
    Ok(k.pow(n as u32))
}

/// Letters of sequence `idx` (first letter most significant).
pub fn seq_letters(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for s in out.iter_mut().rev() {
        *s = idx % k;
        idx /= k;
    }
    out
}

pub fn seq_index(letters: &[usize], k: usize) -> usize {
    letters.iter().fold(0, |acc, &s| acc * k + s)
}

/// Uniform bin map over one sequence space.
#[derive(Debug, Clone)]
struct BinMap {
    w: u64,
    key: Vec<u64>,
    // (key, sequence) sorted by key, then sequence
    members: Vec<(u64, u32)>,
}

impl BinMap {
    fn draw(size: usize, f: u64, w: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let key: Vec<u64> = (0..size)
            .map(|_| {
                let fi = rng.random_range(0..f);
                let wi = rng.random_range(0..w);
                fi * w + wi
            })
            .collect();
        let mut members: Vec<(u64, u32)> =
            key.iter().enumerate().map(|(s, &k)| (k, s as u32)).collect();
        members.sort_unstable();
        Self { w, key, members }
    }

    fn bins(&self, seq: usize) -> (u64, u64) {
        let k = self.key[seq];
        (k / self.w, k % self.w)
    }

    fn bin_members(&self, f: u64, w: u64) -> impl Iterator<Item = usize> + '_ {
        let k = f * self.w + w;
        let lo = self.members.partition_point(|&(b, _)| b < k);
        self.members[lo..]
            .iter()
            .take_while(move |&&(b, _)| b == k)
            .map(|&(_, s)| s as usize)
    }
}

/// One draw of the random bin maps, with the decoder's single-letter tables.
#[derive(Debug, Clone)]
pub struct BinningCode {
    n: usize,
    seed: u64,
    rates: BinRates,
    counts: BinCounts,
    aux: AuxChannels<f64>,
    xt_size: usize,
    y_size: usize,
    u_size: usize,
    v_size: usize,
    map_v: BinMap,
    map_u: BinMap,
    // P(v, y) and P(u, v, y), flattened row-major
    p_vy: Vec<f64>,
    p_uvy: Vec<f64>,
    u_samplers: Vec<WeightedIndex<f64>>,
    v_samplers: Vec<WeightedIndex<f64>>,
}

/// Encoder output for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub v: Vec<usize>,
    pub u: Vec<usize>,
    pub f_v: u64,
    pub w_v: u64,
    pub f_u: u64,
    pub w_u: u64,
}

/// Decoder output for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub v: Vec<usize>,
    pub u: Vec<usize>,
    pub f: Vec<usize>,
}

fn samplers(rows: &crate::probcore::CondDist<f64>) -> Result<Vec<WeightedIndex<f64>>> {
    (0..rows.input().size())
        .map(|i| {
            WeightedIndex::new(rows.row(i))
                .map_err(|e| Error::InvalidDistribution(format!("row {i}: {e}")))
        })
        .collect()
}

/// Draws the bin maps: `vⁿ` from `child_seed(seed, 0)`, `uⁿ` from
/// `child_seed(seed, 1)`, each sequence taking `F` then `W` in lexicographic
/// order.
pub fn generate_code(
    m: &SourceModel<f64>,
    aux: &AuxChannels<f64>,
    rates: &BinRates,
    n: usize,
    seed: u64,
) -> Result<BinningCode> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be ≥ 1".into()));
    }
    let (u_size, v_size) = (aux.u_size(), aux.v_size());
    let nu = seq_space(u_size, n, "|U|ⁿ")?;
    let nv = seq_space(v_size, n, "|V|ⁿ")?;
    let counts = rates.counts(n)?;
    let j = aux_joint(m, &AuxSystem::single(aux.clone()))?;
    let p_vy = j.marginal(&[axis::V, axis::Y])?.table().to_vec();
    let p_uvy = j.marginal(&[axis::U, axis::V, axis::Y])?.table().to_vec();
    Ok(BinningCode {
        n,
        seed,
        rates: *rates,
        counts,
        aux: aux.clone(),
        xt_size: m.xt_alphabet().size(),
        y_size: m.y_alphabet().size(),
        u_size,
        v_size,
        map_v: BinMap::draw(nv, counts.f_v, counts.w_v, child_seed(seed, 0)),
        map_u: BinMap::draw(nu, counts.f_u, counts.w_u, child_seed(seed, 1)),
        p_vy,
        p_uvy,
        u_samplers: samplers(&aux.u_given_xt)?,
        v_samplers: samplers(&aux.v_given_u)?,
    })
}

impl BinningCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rates(&self) -> &BinRates {
        &self.rates
    }

    pub fn counts(&self) -> BinCounts {
        self.counts
    }

    pub fn aux(&self) -> &AuxChannels<f64> {
        &self.aux
    }

    /// `(F_v, W_v)` of the `vⁿ` with lexicographic index `seq`.
    pub fn bins_v(&self, seq: usize) -> (u64, u64) {
        self.map_v.bins(seq)
    }

    /// `(F_u, W_u)` of the `uⁿ` with lexicographic index `seq`.
    pub fn bins_u(&self, seq: usize) -> (u64, u64) {
        self.map_u.bins(seq)
    }

    /// Number of `vⁿ` in each non-empty `(F_v, W_v)` bin.
    pub fn occupancy_v(&self) -> std::collections::BTreeMap<(u64, u64), usize> {
        let mut occ = std::collections::BTreeMap::new();
        for s in 0..self.map_v.key.len() {
            *occ.entry(self.map_v.bins(s)).or_default() += 1;
        }
        occ
    }

    pub fn encode_with<R: Rng>(&self, xt: &[usize], rng: &mut R) -> Result<Encoded> {
        if xt.len() != self.n || xt.iter().any(|&a| a >= self.xt_size) {
            return Err(Error::InvalidParameter(format!(
                "x̃ⁿ must have {} letters below {}",
                self.n, self.xt_size
            )));
        }
        let u: Vec<usize> = xt.iter().map(|&a| self.u_samplers[a].sample(rng)).collect();
        let v: Vec<usize> = u.iter().map(|&b| self.v_samplers[b].sample(rng)).collect();
        let (f_v, w_v) = self.map_v.bins(seq_index(&v, self.v_size));
        let (f_u, w_u) = self.map_u.bins(seq_index(&u, self.u_size));
        Ok(Encoded {
            v,
            u,
            f_v,
            w_v,
            f_u,
            w_u,
        })
    }

    /// Forward-samples `(vⁿ, uⁿ)` from a ChaCha8 stream seeded by `seed`.
    pub fn encode(&self, xt: &[usize], seed: u64) -> Result<Encoded> {
        self.encode_with(xt, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn best_in_bin(
        &self,
        members: impl Iterator<Item = usize>,
        k: usize,
        score: impl Fn(&[usize]) -> f64,
    ) -> Vec<usize> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for s in members {
            let seq = seq_letters(s, k, self.n);
            let p = score(&seq);
            match &best {
                Some((b, _)) if p <= *b || (p - *b) <= TIE_TOL * p.abs().max(b.abs()) => {}
                _ => best = Some((p, seq)),
            }
        }
        best.expect("bin maps are total, so the transmitted bin is non-empty").1
    }

    /// MAP-in-bin Slepian–Wolf decoding followed by `g`.
    pub fn sw_decode(
        &self,
        f_v: u64,
        w_v: u64,
        f_u: u64,
        w_u: u64,
        y: &[usize],
        g: &ReconstructionFn,
    ) -> Result<Decoded> {
        let c = &self.counts;
        if f_v >= c.f_v || w_v >= c.w_v || f_u >= c.f_u || w_u >= c.w_u {
            return Err(Error::InvalidParameter("bin index out of range".into()));
        }
        if y.len() != self.n || y.iter().any(|&b| b >= self.y_size) {
            return Err(Error::InvalidParameter(format!(
                "yⁿ must have {} letters below {}",
                self.n, self.y_size
            )));
        }
        if g.u_size() != self.u_size || g.y_size() != self.y_size {
            return Err(Error::AlphabetMismatch("reconstruction table shape".into()));
        }
        let ny = self.y_size;
        let v = self.best_in_bin(self.map_v.bin_members(f_v, w_v), self.v_size, |v| {
            v.iter().zip(y).map(|(&a, &b)| self.p_vy[a * ny + b]).product()
        });
        let nvy = self.v_size * ny;
        let u = self.best_in_bin(self.map_u.bin_members(f_u, w_u), self.u_size, |u| {
            u.iter()
                .zip(&v)
                .zip(y)
                .map(|((&a, &b), &c)| self.p_uvy[a * nvy + b * ny + c])
                .product()
        });
        let f = u.iter().zip(y).map(|(&a, &b)| g.eval(a, b)).collect();
        Ok(Decoded { v, u, f })
    }
}

/// Whether and how to report leakage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageRequest {
    /// Exact when within the enumeration caps, plug-in estimate otherwise.
    Auto,
    /// Plug-in estimate from the trial samples.
    Estimate,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageMode {
    Exact,
    /// Plug-in estimate from the simulated blocks; approximate.
    Estimated,
}

impl fmt::Display for LeakageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeakageMode::Exact => "exact",
            LeakageMode::Estimated => "estimated",
        })
    }
}

/// Per-symbol leakage of `(W, F)` for a fixed code:
/// `secrecy = I(X̃ⁿ,Yⁿ;W,F|Zⁿ)/n`, `priv_eve = I(Xⁿ;W,F|Zⁿ)/n`,
/// `priv_dec = I(Xⁿ;W,F|Yⁿ)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leakage {
    pub mode: LeakageMode,
    pub secrecy: f64,
    pub priv_eve: f64,
    pub priv_dec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Independent code draws; trials are split evenly across them.
    pub codes: u64,
    pub leakage: LeakageRequest,
}

impl SimConfig {
    pub fn new(n: usize, trials: u64, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            codes: 1,
            leakage: LeakageRequest::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n: usize,
    pub trials: u64,
    pub codes: u64,
    pub errors: u64,
    pub err_prob: f64,
    /// Half-width of the Wilson 95% interval.
    pub half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rates: BinRates,
    pub counts: BinCounts,
    /// Mean over code draws.
    pub leakage: Option<Leakage>,
}

/// Wilson 95% interval `(center, half_width)` for `k` successes in `n`.
pub fn wilson95(k: u64, n: u64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let hw = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, hw)
}

struct Sampler {
    cells: WeightedIndex<f64>,
    shape: [usize; 4],
}

impl Sampler {
    // (x̃, x, y, z) for one letter
    fn letter<R: Rng>(&self, rng: &mut R) -> [usize; 4] {
        let mut c = self.cells.sample(rng);
        let mut out = [0; 4];
        for a in (0..4).rev() {
            out[a] = c % self.shape[a];
            c /= self.shape[a];
        }
        out
    }
}

struct Block {
    err: bool,
    xt: Vec<usize>,
    x: Vec<usize>,
    y: Vec<usize>,
    z: Vec<usize>,
    msg: [u64; 4],
}

/// Seeds: code `k` uses `child_seed(seed, 2k)` for its bin maps and trial `t`
/// of that code `child_seed(child_seed(seed, 2k+1), t)` for source and
/// encoder randomness. Trials are split across codes with the remainder going
/// to the first ones.
pub fn run_trials(
    m: &SourceModel<f64>,
    aux: &AuxChannels<f64>,
    f: &FunctionSpec,
    g: &ReconstructionFn,
    rates: &BinRates,
    cfg: &SimConfig,
) -> Result<SimReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    if cfg.codes == 0 || cfg.codes > cfg.trials {
        return Err(Error::InvalidParameter(
            "codes must be between 1 and the number of trials".into(),
        ));
    }
    f.check_against(m)?;
    let joint = model::build_joint(m)?;
    let shape = joint.shape();
    let sampler = Sampler {
        cells: WeightedIndex::new(joint.table())
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?,
        shape: [shape[0], shape[1], shape[2], shape[3]],
    };
    let exact = cfg.leakage == LeakageRequest::Auto && exact_leakage_fits(m, aux, cfg.n);
    let keep = cfg.leakage != LeakageRequest::Off && !exact;

    let mut errors = 0u64;
    let mut counts = None;
    let mut leak_sum = [0.0f64; 3];
    for k in 0..cfg.codes {
        let per = cfg.trials / cfg.codes + u64::from(k < cfg.trials % cfg.codes);
        let code = generate_code(m, aux, rates, cfg.n, child_seed(cfg.seed, 2 * k))?;
        counts = Some(code.counts());
        let base = child_seed(cfg.seed, 2 * k + 1);
        let blocks: Vec<Block> = (0..per)
            .into_par_iter()
            .map(|t| -> Result<Block> {
                let mut rng = ChaCha8Rng::seed_from_u64(child_seed(base, t));
                let letters: Vec<[usize; 4]> =
                    (0..cfg.n).map(|_| sampler.letter(&mut rng)).collect();
                let col = |a: usize| letters.iter().map(|l| l[a]).collect::<Vec<_>>();
                let (xt, y) = (col(0), col(2));
                let enc = code.encode_with(&xt, &mut rng)?;
                let dec = code.sw_decode(enc.f_v, enc.w_v, enc.f_u, enc.w_u, &y, g)?;
                let err = xt.iter().zip(&y).zip(&dec.f).any(|((&a, &b), &fh)| f.eval(a, b) != fh);
                let msg = [enc.f_v, enc.w_v, enc.f_u, enc.w_u];
                Ok(if keep {
                    Block { err, x: col(1), z: col(3), xt, y, msg }
                } else {
                    Block { err, xt: vec![], x: vec![], y: vec![], z: vec![], msg }
                })
            })
            .collect::<Result<_>>()?;
        errors += blocks.iter().filter(|b| b.err).count() as u64;
        let l = if exact {
            Some(exact_leakage(m, &code)?)
        } else if keep {
            Some(plugin_leakage(&blocks, cfg.n))
        } else {
            None
        };
        if let Some(l) = l {
            leak_sum[0] += l.secrecy;
            leak_sum[1] += l.priv_eve;
            leak_sum[2] += l.priv_dec;
        }
    }
    let (center, hw) = wilson95(errors, cfg.trials);
    let codes = cfg.codes as f64;
    let leakage = (cfg.leakage != LeakageRequest::Off).then(|| Leakage {
        mode: if exact {
            LeakageMode::Exact
        } else {
            LeakageMode::Estimated
        },
        secrecy: leak_sum[0] / codes,
        priv_eve: leak_sum[1] / codes,
        priv_dec: leak_sum[2] / codes,
    });
    Ok(SimReport {
        n: cfg.n,
        trials: cfg.trials,
        codes: cfg.codes,
        errors,
        err_prob: errors as f64 / cfg.trials as f64,
        half_width: hw,
        ci_low: (center - hw).max(0.0),
        ci_high: (center + hw).min(1.0),
        rates: *rates,
        counts: counts.expect("at least one code"),
        leakage,
    })
}

fn plogp_sum<'a>(counts: impl Iterator<Item = &'a u64>, total: f64) -> f64 {
    counts
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

fn plugin_entropy<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>, total: f64) -> f64 {
    let mut h: HashMap<K, u64> = HashMap::new();
    for k in keys {
        *h.entry(k).or_default() += 1;
    }
    plogp_sum(h.values(), total)
}

type Seqs<'a> = Vec<&'a [usize]>;

// Î(A;M|C) = Ĥ(A,C) + Ĥ(M,C) − Ĥ(A,M,C) − Ĥ(C)
fn plugin_cmi(blocks: &[Block], a: fn(&Block) -> Seqs<'_>, c: fn(&Block) -> Seqs<'_>) -> f64 {
    let total = blocks.len() as f64;
    let ac = |b| [a(b), c(b)].concat();
    plugin_entropy(blocks.iter().map(ac), total)
        + plugin_entropy(blocks.iter().map(|b| (c(b), b.msg)), total)
        - plugin_entropy(blocks.iter().map(|b| (ac(b), b.msg)), total)
        - plugin_entropy(blocks.iter().map(c), total)
}

fn plugin_leakage(blocks: &[Block], n: usize) -> Leakage {
    let n = n as f64;
    Leakage {
        mode: LeakageMode::Estimated,
        secrecy: plugin_cmi(blocks, |b| vec![&b.xt, &b.y], |b| vec![&b.z]) / n,
        priv_eve: plugin_cmi(blocks, |b| vec![&b.x], |b| vec![&b.z]) / n,
        priv_dec: plugin_cmi(blocks, |b| vec![&b.x], |b| vec![&b.y]) / n,
    }
}

/// True when [`exact_leakage`] accepts `(m, aux, n)`.
pub fn exact_leakage_fits(m: &SourceModel<f64>, aux: &AuxChannels<f64>, n: usize) -> bool {
    let l = |k: usize| (k as f64).log2();
    let (x, y, z) = (m.x_alphabet().size(), m.y_alphabet().size(), m.z_alphabet().size());
    let table = n as f64 * l(x * y.max(z));
    let work = n as f64 * (l(m.xt_alphabet().size()) + l(aux.u_size()) + l(aux.v_size()));
    table <= EXACT_TABLE_BITS && work <= EXACT_WORK_BITS
}

/// Replaces each letter axis of a `kⁿ` tensor by `kernel[k][a]`, giving `aⁿ`.
fn letterwise(mut t: Vec<f64>, k: usize, a: usize, n: usize, kernel: &[f64]) -> Vec<f64> {
    let mut pre = 1;
    for i in 0..n {
        let post = k.pow((n - i - 1) as u32);
        let mut out = vec![0.0; pre * a * post];
        for p in 0..pre {
            for s in 0..k {
                let src = &t[(p * k + s) * post..(p * k + s + 1) * post];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for b in 0..a {
                    let w = kernel[s * a + b];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut out[(p * a + b) * post..(p * a + b + 1) * post];
                    for (d, &v) in dst.iter_mut().zip(src) {
                        *d += w * v;
                    }
                }
            }
        }
        t = out;
        pre *= a;
    }
    t
}

fn entropy_of(t: &[f64]) -> f64 {
    t.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Exact per-symbol leakage of `(W, F)` for one code under the
/// forward-sampling encoder, by enumeration over all source sequences.
///
/// With `M = (F_v, W_v, F_u, W_u)` and `M − X̃ⁿ − (Xⁿ,Yⁿ,Zⁿ)`:
/// `I(X̃ⁿ,Yⁿ;M|Zⁿ) = H(M,Zⁿ) − nH(Z) − H(M|X̃ⁿ)` and
/// `I(Xⁿ;M|Cⁿ) = H(M,Cⁿ) − nH(C) − H(M,Xⁿ,Cⁿ) + nH(X,C)`.
pub fn exact_leakage(m: &SourceModel<f64>, code: &BinningCode) -> Result<Leakage> {
    let n = code.n;
    if !exact_leakage_fits(m, &code.aux, n) {
        return Err(Error::CapExceeded {
            what: "exact leakage enumeration".into(),
            required: n as u128,
            cap: 0,
        });
    }
    let j = model::build_joint(m)?;
    let (k, nu, nv) = (code.xt_size, code.u_size, code.v_size);
    let p_xt = j.marginal(&[axis::XT])?.table().to_vec();
    let kernel = |names: &[&str]| -> Result<(usize, Vec<f64>)> {
        let mut all = vec![axis::XT];
        all.extend_from_slice(names);
        let t = j.marginal(&all)?;
        let a = t.table().len() / k;
        let mut ker = t.table().to_vec();
        for s in 0..k {
            for b in 0..a {
                ker[s * a + b] = if p_xt[s] > 0.0 { ker[s * a + b] / p_xt[s] } else { 0.0 };
            }
        }
        Ok((a, ker))
    };
    let targets = [
        kernel(&[axis::Z])?,
        kernel(&[axis::X, axis::Z])?,
        kernel(&[axis::Y])?,
        kernel(&[axis::X, axis::Y])?,
    ];
    let single = [
        j.entropy(&[axis::Z])?,
        j.entropy(&[axis::X, axis::Z])?,
        j.entropy(&[axis::Y])?,
        j.entropy(&[axis::X, axis::Y])?,
    ];

    // P(vⁿ-bin | uⁿ), sparse
    let nseq_u = nu.pow(n as u32);
    let nseq_v = nv.pow(n as u32);
    let v_bins: Vec<Vec<(u64, f64)>> = (0..nseq_u)
        .into_par_iter()
        .map(|us| {
            let u = seq_letters(us, nu, n);
            let mut acc: HashMap<u64, f64> = HashMap::new();
            for vs in 0..nseq_v {
                let v = seq_letters(vs, nv, n);
                let p: f64 = u.iter().zip(&v).map(|(&a, &b)| code.aux.v_given_u.get(a, b)).product();
                if p > 0.0 {
                    *acc.entry(code.map_v.key[vs]).or_default() += p;
                }
            }
            let mut out: Vec<_> = acc.into_iter().collect();
            out.sort_unstable_by_key(|e| e.0);
            out
        })
        .collect();

    // (message, x̃ⁿ, P(x̃ⁿ) P(m|x̃ⁿ)) triplets
    let nseq_xt = k.pow(n as u32);
    let per_xt: Vec<Vec<((u64, u64), f64)>> = (0..nseq_xt)
        .into_par_iter()
        .map(|xs| {
            let xt = seq_letters(xs, k, n);
            let px: f64 = xt.iter().map(|&a| p_xt[a]).product();
            let mut acc: HashMap<(u64, u64), f64> = HashMap::new();
            if px > 0.0 {
                for us in 0..nseq_u {
                    let u = seq_letters(us, nu, n);
                    let p: f64 =
                        xt.iter().zip(&u).map(|(&a, &b)| code.aux.u_given_xt.get(a, b)).product();
                    if p > 0.0 {
                        let ku = code.map_u.key[us];
                        for &(kv, pv) in &v_bins[us] {
                            *acc.entry((kv, ku)).or_default() += p * pv;
                        }
                    }
                }
            }
            let mut out: Vec<_> = acc.into_iter().map(|(mm, p)| (mm, px * p)).collect();
            out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            out
        })
        .collect();

    let mut h_m_given_xt = 0.0;
    let mut triplets: Vec<((u64, u64), u32, f64)> = Vec::new();
    for (xs, row) in per_xt.iter().enumerate() {
        let px: f64 = seq_letters(xs, k, n).iter().map(|&a| p_xt[a]).product();
        for &(mm, p) in row {
            if p > 0.0 {
                h_m_given_xt -= p * (p / px).log2();
                triplets.push((mm, xs as u32, p));
            }
        }
    }
    triplets.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let groups: Vec<&[((u64, u64), u32, f64)]> =
        triplets.chunk_by(|a, b| a.0 == b.0).collect();
    let h_joint: [f64; 4] = groups
        .par_iter()
        .map(|g| {
            let mut a_m = vec![0.0; nseq_xt];
            for &(_, xs, p) in g.iter() {
                a_m[xs as usize] = p;
            }
            let mut out = [0.0; 4];
            for (o, (a, ker)) in out.iter_mut().zip(&targets) {
                *o = entropy_of(&letterwise(a_m.clone(), k, *a, n, ker));
            }
            out
        })
        .reduce(|| [0.0; 4], |x, y| [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]);
    let nf = n as f64;
    let h_m_z = h_joint[0] - nf * single[0];
    let h_m_xz = h_joint[1] - nf * single[1];
    let h_m_y = h_joint[2] - nf * single[2];
    let h_m_xy = h_joint[3] - nf * single[3];
    Ok(Leakage {
        mode: LeakageMode::Exact,
        secrecy: ((h_m_z - h_m_given_xt) / nf).max(0.0),
        priv_eve: ((h_m_z - h_m_xz) / nf).max(0.0),
        priv_dec: ((h_m_y - h_m_xy) / nf).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistortionSpec;
    use crate::probcore::{Alphabet, CondDist, Dist};
    use crate::region::optimal_g;
    use crate::region::tests::binary_model;

    fn identity_setup(m: &SourceModel<f64>) -> (AuxChannels<f64>, FunctionSpec, ReconstructionFn) {
        let aux = AuxChannels::identity(m.xt_alphabet());
        let f = FunctionSpec::identity_xt(m.xt_alphabet(), m.y_alphabet().size());
        let g = optimal_g(m, &AuxSystem::single(aux.clone()), &f, &DistortionSpec::hamming(2)).unwrap();
        (aux, f, g)
    }

    fn noiseless() -> SourceModel<f64> {
        SourceModel::with_degraded_eve(
            Dist::uniform(Alphabet::binary("X")),
            CondDist::identity(&Alphabet::binary("X"), "Xt"),
            &CondDist::identity(&Alphabet::binary("X"), "Y"),
            &CondDist::bsc("Y", "Z", 0.25).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn default_rates_noiseless_is_two_eps() {
        let m = noiseless();
        let (aux, ..) = identity_setup(&m);
        let d = default_rates(&m, &aux, 0.1).unwrap();
        assert!((d.rates.r_u - 0.2).abs() < 1e-12);
        assert!((d.rates.r_v - 0.2).abs() < 1e-12);
        assert_eq!(d.rates.r_v_tilde, 0.0);
        assert_eq!(d.rates.r_u_tilde, 0.0);
        assert_eq!(d.warnings.len(), 2);
        assert!(default_rates(&m, &aux, 0.0).is_err());
    }

    #[test]
    fn default_rates_match_entropies() {
        let m = binary_model(0.06, 0.15, 0.25);
        let (aux, ..) = identity_setup(&m);
        let r = default_rates(&m, &aux, 0.05).unwrap().rates;
        let a = crate::probcore::bsc_convolve(0.06, 0.15).unwrap();
        let h = crate::probcore::binary_entropy(a).unwrap();
        assert!((r.r_u - (h + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn bin_counts_round_up() {
        let r = BinRates::new(0.0, 0.5, 0.0, 0.3).unwrap();
        let c = r.counts(4).unwrap();
        assert_eq!((c.f_v, c.w_v, c.f_u, c.w_u), (1, 4, 1, 3));
        assert!(BinRates::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(BinRates::new(0.0, 0.0, 0.0, 8.0).unwrap().counts(4).unwrap_err().is_cap_exceeded());
    }

    #[test]
    fn single_bin_and_partition() {
        let m = binary_model(0.1, 0.1, 0.2);
        let (aux, ..) = identity_setup(&m);
        let code = generate_code(&m, &aux, &BinRates::zero(), 1, 3).unwrap();
        assert_eq!(code.bins_u(0), (0, 0));
        assert_eq!(code.bins_u(1), (0, 0));
        let code = generate_code(&m, &aux, &BinRates::new(0.0, 0.0, 0.0, 0.5).unwrap(), 4, 3).unwrap();
        assert_eq!(code.counts().w_u, 4);
        let mut occ = vec![0; 4];
        for s in 0..16 {
            occ[code.bins_u(s).1 as usize] += 1;
        }
        assert_eq!(occ.iter().sum::<usize>(), 16);
    }

    #[test]
    fn codes_are_deterministic() {
        let m = binary_model(0.1, 0.1, 0.2);
        let (aux, ..) = identity_setup(&m);
        let r = BinRates::new(0.3, 0.2, 0.1, 0.7).unwrap();
        let a = generate_code(&m, &aux, &r, 6, 11).unwrap();
        let b = generate_code(&m, &aux, &r, 6, 11).unwrap();
        let c = generate_code(&m, &aux, &r, 6, 12).unwrap();
        assert_eq!(a.map_u.key, b.map_u.key);
        assert_ne!(a.map_u.key, c.map_u.key);
        let xt = [0, 1, 1, 0, 1, 0];
        assert_eq!(a.encode(&xt, 5).unwrap(), b.encode(&xt, 5).unwrap());
        assert_eq!(a.encode(&xt, 5).unwrap().u, xt.to_vec());
    }

    #[test]
    fn enumeration_cap() {
        let m = binary_model(0.1, 0.1, 0.2);
        let (aux, ..) = identity_setup(&m);
        let e = generate_code(&m, &aux, &BinRates::zero(), 25, 0).unwrap_err();
        assert!(e.is_cap_exceeded());
    }

    #[test]
    fn map_decoder_matches_exhaustive_posterior() {
        let m = binary_model(0.05, 0.2, 0.2);
        let (aux, _, g) = identity_setup(&m);
        let r = BinRates::new(0.0, 0.0, 0.0, 0.5).unwrap();
        let code = generate_code(&m, &aux, &r, 4, 9).unwrap();
        let a: f64 = crate::probcore::bsc_convolve(0.05, 0.2).unwrap();
        for ys in 0..16 {
            let y = seq_letters(ys, 2, 4);
            for w in 0..4 {
                let got = code.sw_decode(0, 0, 0, w, &y, &g).unwrap();
                // brute force: all 16 candidates, posterior ∝ a^d (1-a)^(n-d)
                let mut best: Option<(f64, usize)> = None;
                for s in 0..16 {
                    if code.bins_u(s) != (0, w) {
                        continue;
                    }
                    let d = seq_letters(s, 2, 4).iter().zip(&y).filter(|(p, q)| p != q).count();
                    let p = a.powi(d as i32) * (1.0 - a).powi(4 - d as i32);
                    if best.map_or(true, |(b, _)| p > b * (1.0 + 1e-12)) {
                        best = Some((p, s));
                    }
                }
                if let Some((_, s)) = best {
                    assert_eq!(got.u, seq_letters(s, 2, 4));
                    assert_eq!(got.f, got.u);
                }
            }
        }
    }

    #[test]
    fn noiseless_toy_decodes_perfectly() {
        let m = noiseless();
        let (aux, f, g) = identity_setup(&m);
        let r = default_rates(&m, &aux, 0.1).unwrap().rates;
        let rep = run_trials(&m, &aux, &f, &g, &r, &SimConfig::new(6, 2000, 1)).unwrap();
        assert_eq!(rep.errors, 0);
        assert_eq!(rep.leakage.unwrap().mode, LeakageMode::Exact);
    }

    #[test]
    fn single_bin_leaks_nothing() {
        let m = binary_model(0.1, 0.1, 0.2);
        let (aux, ..) = identity_setup(&m);
        for n in [1, 2, 3] {
            let code = generate_code(&m, &aux, &BinRates::zero(), n, 4).unwrap();
            let l = exact_leakage(&m, &code).unwrap();
            assert!(l.secrecy <= 1e-9 && l.priv_eve <= 1e-9 && l.priv_dec <= 1e-9, "{l:?}");
        }
    }

    #[test]
    fn full_rate_leakage_is_single_letter_information() {
        // every uⁿ alone in its bin with one W per sequence: W reveals X̃ⁿ
        let m = binary_model(0.1, 0.1, 0.2);
        let (aux, ..) = identity_setup(&m);
        let j = model::build_joint(&m).unwrap();
        let want = j.cond_mutual_info(&[axis::X], &[axis::XT], &[axis::Z]).unwrap();
        let r = BinRates::new(0.0, 0.0, 0.0, 12.0).unwrap();
        let code = generate_code(&m, &aux, &r, 2, 0).unwrap();
        let distinct: std::collections::HashSet<_> = (0..4).map(|s| code.bins_u(s)).collect();
        if distinct.len() == 4 {
            let l = exact_leakage(&m, &code).unwrap();
            assert!((l.priv_eve - want).abs() < 1e-12, "{} vs {want}", l.priv_eve);
        }
    }

    #[test]
    fn plugin_estimate_tracks_exact_value() {
        let m = binary_model(0.1, 0.1, 0.3);
        let (aux, f, g) = identity_setup(&m);
        let r = BinRates::new(0.0, 0.0, 0.0, 0.5).unwrap();
        let mut cfg = SimConfig::new(2, 200_000, 3);
        let exact = run_trials(&m, &aux, &f, &g, &r, &cfg).unwrap().leakage.unwrap();
        cfg.leakage = LeakageRequest::Estimate;
        let est = run_trials(&m, &aux, &f, &g, &r, &cfg).unwrap().leakage.unwrap();
        assert_eq!(est.mode, LeakageMode::Estimated);
        assert!((est.priv_eve - exact.priv_eve).abs() < 0.01);
        assert!((est.secrecy - exact.secrecy).abs() < 0.01);
    }

    #[test]
    fn run_trials_is_deterministic_and_rejects_bad_config() {
        let m = binary_model(0.06, 0.15, 0.25);
        let (aux, f, g) = identity_setup(&m);
        let r = default_rates(&m, &aux, 0.1).unwrap().rates;
        let mut cfg = SimConfig::new(4, 3000, 7);
        cfg.codes = 3;
        let a = run_trials(&m, &aux, &f, &g, &r, &cfg).unwrap();
        let b = run_trials(&m, &aux, &f, &g, &r, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.err_prob && a.err_prob <= a.ci_high);
        cfg.trials = 0;
        assert!(run_trials(&m, &aux, &f, &g, &r, &cfg).is_err());
    }

    #[test]
    fn wilson_interval() {
        let (c, hw) = wilson95(0, 100);
        assert!(c - hw <= 1e-15 && hw > 0.0);
        let (c, hw) = wilson95(50, 100);
        assert!((c - 0.5).abs() < 1e-12 && (hw - 0.0960).abs() < 1e-3);
    }
}
