//! Lossless and lossy single-function rate regions.
//!
//! For fixed auxiliary channels the region is the set of tuples dominating
//! the corner
//!
//! ```text
//! R_s   = I(U;X̃|Z) + [I(U;Z|V,Q) - I(U;Y|V,Q)]⁻
//! R_w   = I(U;X̃|Y)
//! R_dec = I(U;X|Y)
//! R_eve = I(U;X|Z) + [I(U;Z|V,Q) - I(U;Y|V,Q)]⁻
//! D     = E[d(f(X̃,Y), g(U,Y))]            (lossy only)
//! ```
//!
//! under `(Q,V) - U - X̃ - X - (Y,Z)`. The leading terms are evaluated on the
//! `Q`-mixture joint; only the bracket conditions on `(V, Q)`.

mod search;

pub use search::{
    membership, trace_boundary, BoundaryPoint, Membership, Pin, Problem, SearchBudget, Sweep,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{self, axis, DistortionSpec, FunctionSpec, SourceModel};
use crate::probcore::{min_zero, Alphabet, CondDist, Dist, JointDist};
use crate::scalar::Scalar;

/// Which region is being evaluated; selects the cardinality limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Lossless,
    Lossy,
}

impl Mode {
    /// `(max |V|, max |U|)` for the single-function regions.
    pub fn single_bounds(self, xt_size: usize) -> (usize, usize) {
        let k = match self {
            Mode::Lossless => xt_size + 4,
            Mode::Lossy => xt_size + 5,
        };
        (k, k * k)
    }

    /// `(max |V_j|, max |U_j|)` for the multi-function bounds.
    pub fn multi_bounds(self, xt_size: usize) -> (usize, usize) {
        let k = match self {
            Mode::Lossless => xt_size + 5,
            Mode::Lossy => xt_size + 6,
        };
        (k, k * k)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lossless" => Ok(Mode::Lossless),
            "lossy" => Ok(Mode::Lossy),
            other => Err(Error::InvalidParameter(format!(
                "mode must be `lossless` or `lossy`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lossless => "lossless",
            Mode::Lossy => "lossy",
        })
    }
}

/// Maximum number of time-sharing symbols.
pub const MAX_Q: usize = 2;

/// Auxiliary channels `P(U|X̃)` and `P(V|U)` for one time-sharing symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannels<T> {
    pub u_given_xt: CondDist<T>,
    pub v_given_u: CondDist<T>,
}

impl<T: Scalar> AuxChannels<T> {
    pub fn new(u_given_xt: CondDist<T>, v_given_u: CondDist<T>) -> Result<Self> {
        if !v_given_u.input().same_symbols(u_given_xt.output()) {
            return Err(Error::AlphabetMismatch(
                "input of P(V|U) does not match the output of P(U|X̃)".into(),
            ));
        }
        Ok(Self {
            u_given_xt: u_given_xt.with_names(axis::XT, axis::U),
            v_given_u: v_given_u.with_names(axis::U, axis::V),
        })
    }

    /// `V` constant.
    pub fn with_constant_v(u_given_xt: CondDist<T>) -> Self {
        let v = Dist::point_mass(Alphabet::indexed(axis::V, 1).expect("unit"), 0).expect("unit");
        let v_given_u = CondDist::constant(u_given_xt.output().clone(), &v);
        Self::new(u_given_xt, v_given_u).expect("constant V matches U")
    }

    /// `V = U`.
    pub fn with_v_equal_u(u_given_xt: CondDist<T>) -> Self {
        let v_given_u = CondDist::identity(u_given_xt.output(), axis::V);
        Self::new(u_given_xt, v_given_u).expect("identity V matches U")
    }

    /// `U = X̃`, `V` constant.
    pub fn identity(xt: &Alphabet) -> Self {
        Self::with_constant_v(CondDist::identity(xt, axis::U))
    }

    /// `U` constant (a single symbol), `V` constant.
    pub fn constant(xt: &Alphabet) -> Self {
        let u = Dist::point_mass(Alphabet::indexed(axis::U, 1).expect("unit"), 0).expect("unit");
        Self::with_constant_v(CondDist::constant(xt.clone(), &u))
    }

    pub fn u_size(&self) -> usize {
        self.u_given_xt.output().size()
    }

    pub fn v_size(&self) -> usize {
        self.v_given_u.output().size()
    }
}

/// Time-sharing law `P_Q` plus one pair of auxiliary channels per `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSystem<T> {
    p_q: Dist<T>,
    per_q: Vec<AuxChannels<T>>,
}

impl<T: Scalar> AuxSystem<T> {
    pub fn new(p_q: Dist<T>, per_q: Vec<AuxChannels<T>>) -> Result<Self> {
        if per_q.len() != p_q.len() {
            return Err(Error::InvalidParameter(format!(
                "{} channel pairs for |Q| = {}",
                per_q.len(),
                p_q.len()
            )));
        }
        if p_q.len() > MAX_Q {
            return Err(Error::Cardinality(format!("|Q| = {} > {MAX_Q}", p_q.len())));
        }
        let first = &per_q[0];
        for (q, ch) in per_q.iter().enumerate() {
            if !ch.u_given_xt.input().same_symbols(first.u_given_xt.input())
                || ch.u_size() != first.u_size()
                || ch.v_size() != first.v_size()
            {
                return Err(Error::AlphabetMismatch(format!(
                    "channels for q = {q} use different alphabets than q = 0"
                )));
            }
        }
        Ok(Self {
            p_q: p_q.renamed(axis::Q),
            per_q,
        })
    }

    pub fn single(ch: AuxChannels<T>) -> Self {
        let q = Dist::point_mass(Alphabet::indexed(axis::Q, 1).expect("unit"), 0).expect("unit");
        Self {
            p_q: q,
            per_q: vec![ch],
        }
    }

    /// Time-sharing between two single-`q` systems with weight `w` on `a`.
    pub fn mixture(a: &AuxChannels<T>, b: &AuxChannels<T>, w: T) -> Result<Self> {
        let q = Dist::new(Alphabet::binary(axis::Q), vec![w, T::one() - w])?;
        Self::new(q, vec![a.clone(), b.clone()])
    }

    pub fn p_q(&self) -> &Dist<T> {
        &self.p_q
    }

    pub fn per_q(&self) -> &[AuxChannels<T>] {
        &self.per_q
    }

    pub fn u_size(&self) -> usize {
        self.per_q[0].u_size()
    }

    pub fn v_size(&self) -> usize {
        self.per_q[0].v_size()
    }

    pub fn check_cardinality(&self, xt: &Alphabet, mode: Mode) -> Result<()> {
        let (vmax, umax) = mode.single_bounds(xt.size());
        check_sizes(self.u_size(), self.v_size(), vmax, umax, mode, "")?;
        if !self.per_q[0].u_given_xt.input().same_symbols(xt) {
            return Err(Error::AlphabetMismatch(
                "input of P(U|X̃) does not match the encoder alphabet".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_sizes(
    u: usize,
    v: usize,
    vmax: usize,
    umax: usize,
    mode: Mode,
    arm: &str,
) -> Result<()> {
    if v > vmax {
        return Err(Error::Cardinality(format!("|V{arm}| = {v} > {vmax} ({mode})")));
    }
    if u > umax {
        return Err(Error::Cardinality(format!("|U{arm}| = {u} > {umax} ({mode})")));
    }
    Ok(())
}

/// Rate tuple in bits per source symbol, plus distortion in lossy mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTuple<T> {
    pub r_s: T,
    pub r_w: T,
    pub r_dec: T,
    pub r_eve: T,
    pub d: Option<T>,
}

/// Coordinates of a [`RateTuple`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    Secrecy,
    Storage,
    PrivacyDec,
    PrivacyEve,
    Distortion,
}

impl FromStr for Coord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r_s" | "rs" | "secrecy" => Ok(Coord::Secrecy),
            "r_w" | "rw" | "storage" => Ok(Coord::Storage),
            "r_dec" | "rdec" => Ok(Coord::PrivacyDec),
            "r_eve" | "reve" => Ok(Coord::PrivacyEve),
            "d" | "distortion" => Ok(Coord::Distortion),
            other => Err(Error::InvalidParameter(format!("unknown coordinate `{other}`"))),
        }
    }
}

impl<T: Scalar> RateTuple<T> {
    pub fn coord(&self, c: Coord) -> Option<T> {
        match c {
            Coord::Secrecy => Some(self.r_s),
            Coord::Storage => Some(self.r_w),
            Coord::PrivacyDec => Some(self.r_dec),
            Coord::PrivacyEve => Some(self.r_eve),
            Coord::Distortion => self.d,
        }
    }

    pub fn rates(&self) -> [T; 4] {
        [self.r_s, self.r_w, self.r_dec, self.r_eve]
    }

    /// Componentwise `self ≤ target + tol`; distortion compared when the
    /// target carries one.
    pub fn within(&self, target: &RateTuple<T>, tol: T) -> bool {
        let rates_ok = self
            .rates()
            .iter()
            .zip(target.rates())
            .all(|(&a, b)| a <= b + tol);
        let d_ok = match (self.d, target.d) {
            (_, None) => true,
            (Some(a), Some(b)) => a <= b + tol,
            (None, Some(_)) => false,
        };
        rates_ok && d_ok
    }

    /// Total amount by which `self` exceeds `target`.
    pub fn excess_over(&self, target: &RateTuple<T>) -> T {
        let mut e = self
            .rates()
            .iter()
            .zip(target.rates())
            .map(|(&a, b)| (a - b).max(T::zero()))
            .sum::<T>();
        if let (Some(a), Some(b)) = (self.d, target.d) {
            e = e + (a - b).max(T::zero());
        }
        e
    }

    pub fn is_finite(&self) -> bool {
        self.rates().iter().all(|r| r.is_finite()) && self.d.is_none_or(|d| d.is_finite())
    }

    /// `w·a + (1-w)·b`.
    pub fn convex_combination(a: &Self, b: &Self, w: T) -> Self {
        let mix = |x: T, y: T| w * x + (T::one() - w) * y;
        Self {
            r_s: mix(a.r_s, b.r_s),
            r_w: mix(a.r_w, b.r_w),
            r_dec: mix(a.r_dec, b.r_dec),
            r_eve: mix(a.r_eve, b.r_eve),
            d: match (a.d, b.d) {
                (Some(x), Some(y)) => Some(mix(x, y)),
                _ => None,
            },
        }
    }
}

/// Decoder reconstruction `g(u, y)` over the function alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructionFn {
    u_size: usize,
    y_size: usize,
    table: Vec<usize>,
}

impl ReconstructionFn {
    /// `rows[u][y]`.
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let u_size = rows.len();
        let y_size = rows.first().map(Vec::len).unwrap_or(0);
        if u_size == 0 || y_size == 0 || rows.iter().any(|r| r.len() != y_size) {
            return Err(Error::InvalidParameter("reconstruction table must be a full U×Y grid".into()));
        }
        Ok(Self {
            u_size,
            y_size,
            table: rows.concat(),
        })
    }

    pub fn from_flat(u_size: usize, y_size: usize, table: Vec<usize>) -> Result<Self> {
        if table.len() != u_size * y_size {
            return Err(Error::InvalidParameter("reconstruction table has the wrong size".into()));
        }
        Ok(Self {
            u_size,
            y_size,
            table,
        })
    }

    pub fn eval(&self, u: usize, y: usize) -> usize {
        self.table[u * self.y_size + y]
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }
}

/// Joint over `(X̃, X, Y, Z, Q, U, V)` for an auxiliary system.
pub fn aux_joint<T: Scalar>(m: &SourceModel<T>, a: &AuxSystem<T>) -> Result<JointDist<T>> {
    let u_alpha = a.per_q[0].u_given_xt.output().clone();
    let v_alpha = a.per_q[0].v_given_u.output().clone();
    if !a.per_q[0].u_given_xt.input().same_symbols(m.xt_alphabet()) {
        return Err(Error::AlphabetMismatch(
            "input of P(U|X̃) does not match the encoder alphabet".into(),
        ));
    }
    model::build_joint(m)?
        .extend_independent(&a.p_q)?
        .extend_with(&[axis::Q, axis::XT], u_alpha, |p, row| {
            row.copy_from_slice(a.per_q[p[0]].u_given_xt.row(p[1]))
        })?
        .extend_with(&[axis::Q, axis::U], v_alpha, |p, row| {
            row.copy_from_slice(a.per_q[p[0]].v_given_u.row(p[1]))
        })
}

/// Axis groups naming the variables of a corner evaluation.
pub(crate) struct Groups<'a> {
    pub q: Vec<&'a str>,
    pub v: Vec<&'a str>,
    pub u: Vec<&'a str>,
    pub xt: Vec<&'a str>,
    pub x: Vec<&'a str>,
    pub y: Vec<&'a str>,
    pub z: Vec<&'a str>,
}

impl Groups<'static> {
    fn single() -> Self {
        Groups {
            q: vec![axis::Q],
            v: vec![axis::V],
            u: vec![axis::U],
            xt: vec![axis::XT],
            x: vec![axis::X],
            y: vec![axis::Y],
            z: vec![axis::Z],
        }
    }
}

/// Secrecy and eavesdropper-privacy coordinates, which share the bracket.
pub(crate) fn eve_terms<T: Scalar>(j: &JointDist<T>, g: &Groups<'_>) -> Result<(T, T)> {
    let vq: Vec<&str> = g.v.iter().chain(&g.q).copied().collect();
    let bracket = min_zero(j.cond_mutual_info(&g.u, &g.z, &vq)? - j.cond_mutual_info(&g.u, &g.y, &vq)?);
    let r_s = j.cond_mutual_info(&g.u, &g.xt, &g.z)? + bracket;
    let r_eve = j.cond_mutual_info(&g.u, &g.x, &g.z)? + bracket;
    Ok((r_s, r_eve))
}

fn corner_from_joint<T: Scalar>(j: &JointDist<T>) -> Result<RateTuple<T>> {
    let g = Groups::single();
    let (r_s, r_eve) = eve_terms(j, &g)?;
    Ok(RateTuple {
        r_s,
        r_w: j.cond_mutual_info(&g.u, &g.xt, &g.y)?,
        r_dec: j.cond_mutual_info(&g.u, &g.x, &g.y)?,
        r_eve,
        d: None,
    })
}

/// Rates of an auxiliary system without admissibility or cardinality checks.
pub fn eval_rates<T: Scalar>(m: &SourceModel<T>, a: &AuxSystem<T>) -> Result<RateTuple<T>> {
    corner_from_joint(&aux_joint(m, a)?)
}

fn check_admissible<T: Scalar>(m: &SourceModel<T>, a: &AuxSystem<T>, f: &FunctionSpec) -> Result<()> {
    for (q, ch) in a.per_q.iter().enumerate() {
        if a.p_q.probs()[q] <= T::zero() {
            continue;
        }
        let h = model::admissibility_residual(m, &ch.u_given_xt, f)?;
        if h > T::tol(model::ADMISSIBILITY_TOL) {
            return Err(Error::Inadmissible(format!("q = {q}: H(F|U,Y) = {h} bits")));
        }
    }
    Ok(())
}

/// Componentwise minimal tuple of the lossless region for `a`.
pub fn eval_lossless_corner<T: Scalar>(
    m: &SourceModel<T>,
    a: &AuxSystem<T>,
    f: &FunctionSpec,
) -> Result<RateTuple<T>> {
    a.check_cardinality(m.xt_alphabet(), Mode::Lossless)?;
    f.check_against(m)?;
    check_admissible(m, a, f)?;
    eval_rates(m, a)
}

/// Minimal tuple of the lossy region for `a` and reconstruction `g`.
pub fn eval_lossy_corner<T: Scalar>(
    m: &SourceModel<T>,
    a: &AuxSystem<T>,
    f: &FunctionSpec,
    g: &ReconstructionFn,
    d: &DistortionSpec<T>,
) -> Result<RateTuple<T>> {
    a.check_cardinality(m.xt_alphabet(), Mode::Lossy)?;
    f.check_against(m)?;
    check_distortion(f, d)?;
    let j = aux_joint(m, a)?;
    let mut t = corner_from_joint(&j)?;
    t.d = Some(expected_distortion(&j, axis::U, axis::Y, axis::XT, f, g, d)?);
    Ok(t)
}

pub(crate) fn check_distortion<T: Scalar>(f: &FunctionSpec, d: &DistortionSpec<T>) -> Result<()> {
    if d.size() != f.output().size() {
        return Err(Error::AlphabetMismatch(format!(
            "distortion table covers {} symbols, |F| = {}",
            d.size(),
            f.output().size()
        )));
    }
    Ok(())
}

/// `E[d(f(X̃,Y), g(U,Y))]` on any joint carrying the three named axes.
pub(crate) fn expected_distortion<T: Scalar>(
    j: &JointDist<T>,
    u: &str,
    y: &str,
    xt: &str,
    f: &FunctionSpec,
    g: &ReconstructionFn,
    d: &DistortionSpec<T>,
) -> Result<T> {
    let m = j.marginal(&[u, y, xt])?;
    let shape = m.shape();
    if g.u_size() != shape[0] || g.y_size() != shape[1] {
        return Err(Error::AlphabetMismatch(format!(
            "reconstruction table is {}×{}, joint has |U|={} |Y|={}",
            g.u_size(),
            g.y_size(),
            shape[0],
            shape[1]
        )));
    }
    let mut acc = T::zero();
    for ui in 0..shape[0] {
        for yi in 0..shape[1] {
            let fhat = g.eval(ui, yi);
            if fhat >= d.size() {
                return Err(Error::InvalidParameter(format!("g({ui},{yi}) = {fhat} outside the function alphabet")));
            }
            for xi in 0..shape[2] {
                let p = m.table()[(ui * shape[1] + yi) * shape[2] + xi];
                if p > T::zero() {
                    acc = acc + p * d.eval(f.eval(xi, yi), fhat);
                }
            }
        }
    }
    Ok(acc)
}

/// Bayes reconstruction minimizing conditional expected distortion, on any
/// joint carrying the named axes.
pub(crate) fn optimal_g_on<T: Scalar>(
    j: &JointDist<T>,
    u: &str,
    y: &str,
    xt: &str,
    f: &FunctionSpec,
    d: &DistortionSpec<T>,
) -> Result<ReconstructionFn> {
    let m = j.marginal(&[u, y, xt])?;
    let shape = m.shape();
    let nf = f.output().size();
    // P(u, y, F)
    let mut puyf = vec![T::zero(); shape[0] * shape[1] * nf];
    let mut pf = vec![T::zero(); nf];
    for ui in 0..shape[0] {
        for yi in 0..shape[1] {
            for xi in 0..shape[2] {
                let p = m.table()[(ui * shape[1] + yi) * shape[2] + xi];
                let fv = f.eval(xi, yi);
                let c = (ui * shape[1] + yi) * nf + fv;
                puyf[c] = puyf[c] + p;
                pf[fv] = pf[fv] + p;
            }
        }
    }
    let fallback = argbest(&pf, |a, b| a > b);
    let mut table = Vec::with_capacity(shape[0] * shape[1]);
    for cell in puyf.chunks(nf) {
        let mass: T = cell.iter().copied().sum();
        if mass <= T::zero() {
            table.push(fallback);
            continue;
        }
        let costs: Vec<T> = (0..nf)
            .map(|fhat| {
                cell.iter()
                    .enumerate()
                    .map(|(fv, &p)| p * d.eval(fv, fhat))
                    .sum()
            })
            .collect();
        table.push(argbest(&costs, |a, b| a < b));
    }
    ReconstructionFn::from_flat(shape[0], shape[1], table)
}

/// Index of the best entry under `better`, ties to the lowest index.
fn argbest<T: Scalar>(v: &[T], better: impl Fn(T, T) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if better(x, v[best]) {
            best = i;
        }
    }
    best
}

/// `g*(u,y) = argmin_f̂ E[d(F, f̂) | u, y]`; under Hamming distortion this is
/// the MAP rule `argmax_f P(F = f | u, y)`.
///
/// Unreachable `(u, y)` cells get the globally most likely function value.
pub fn optimal_g<T: Scalar>(
    m: &SourceModel<T>,
    a: &AuxSystem<T>,
    f: &FunctionSpec,
    d: &DistortionSpec<T>,
) -> Result<ReconstructionFn> {
    f.check_against(m)?;
    check_distortion(f, d)?;
    optimal_g_on(&aux_joint(m, a)?, axis::U, axis::Y, axis::XT, f, d)
}

/// Each time-sharing symbol evaluated as its own single-`q` system.
pub fn per_q_report<T: Scalar>(m: &SourceModel<T>, a: &AuxSystem<T>) -> Result<Vec<RateTuple<T>>> {
    a.per_q
        .iter()
        .map(|ch| eval_rates(m, &AuxSystem::single(ch.clone())))
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::probcore::binary_entropy;

    pub(crate) fn binary_model(p: f64, qy: f64, qz: f64) -> SourceModel<f64> {
        SourceModel::with_degraded_eve(
            Dist::uniform(Alphabet::binary("X")),
            CondDist::bsc("X", "Xt", p).unwrap(),
            &CondDist::bsc("X", "Y", qy).unwrap(),
            &CondDist::bsc("Y", "Z", qz).unwrap(),
        )
        .unwrap()
    }

    fn f_xt() -> FunctionSpec {
        FunctionSpec::identity_xt(&Alphabet::binary("Xt"), 2)
    }

    #[test]
    fn constant_u_gives_zero_rates() {
        let m = binary_model(0.1, 0.2, 0.3);
        let f_y = FunctionSpec::from_fn(2, 2, Alphabet::binary("F"), |_, y| y).unwrap();
        let a = AuxSystem::single(AuxChannels::constant(m.xt_alphabet()));
        let t = eval_lossless_corner(&m, &a, &f_y).unwrap();
        assert_eq!(t.rates(), [0.0; 4]);
        assert!(matches!(
            eval_lossless_corner(&m, &a, &f_xt()),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn storage_rate_of_identity_auxiliary() {
        let m = binary_model(0.06, 0.15, 0.25);
        let a = AuxSystem::single(AuxChannels::identity(m.xt_alphabet()));
        let t = eval_lossless_corner(&m, &a, &f_xt()).unwrap();
        let j = model::build_joint(&m).unwrap();
        let oracle = j.cond_entropy(&[axis::XT], &[axis::Y]).unwrap();
        assert!((t.r_w - oracle).abs() < 1e-14);
        // X̃ to Y is BSC(0.06 * 0.15)
        let hb = binary_entropy(crate::probcore::bsc_convolve(0.06, 0.15).unwrap()).unwrap();
        assert!((t.r_w - hb).abs() < 1e-14);
    }

    #[test]
    fn degraded_eve_secrecy_reduces_to_difference() {
        // X - Y - Z, V constant: R_s = I(U;X̃) - I(U;Y)
        let m = binary_model(0.06, 0.15, 0.25);
        let u = CondDist::bsc("Xt", "U", 0.1).unwrap();
        let a = AuxSystem::single(AuxChannels::with_constant_v(u));
        let t = eval_rates(&m, &a).unwrap();
        let j = aux_joint(&m, &a).unwrap();
        let expect = j.mutual_info(&[axis::U], &[axis::XT]).unwrap() - j.mutual_info(&[axis::U], &[axis::Y]).unwrap();
        assert!((t.r_s - expect).abs() < 1e-12);
        let expect_eve = j.mutual_info(&[axis::U], &[axis::X]).unwrap() - j.mutual_info(&[axis::U], &[axis::Y]).unwrap();
        assert!((t.r_eve - expect_eve).abs() < 1e-12);
    }

    #[test]
    fn bracket_vanishes_when_v_equals_u() {
        let m = binary_model(0.06, 0.15, 0.25);
        let u = CondDist::bsc("Xt", "U", 0.2).unwrap();
        let a = AuxSystem::single(AuxChannels::with_v_equal_u(u));
        let j = aux_joint(&m, &a).unwrap();
        let g = Groups::single();
        let t = eval_rates(&m, &a).unwrap();
        assert_eq!(t.r_s, j.cond_mutual_info(&g.u, &g.xt, &g.z).unwrap());
        assert_eq!(t.r_eve, j.cond_mutual_info(&g.u, &g.x, &g.z).unwrap());
    }

    #[test]
    fn cardinality_limits() {
        let m = binary_model(0.1, 0.2, 0.3);
        let big_u = CondDist::constant(
            m.xt_alphabet().clone(),
            &Dist::uniform(Alphabet::indexed("U", 37).unwrap()),
        );
        let a = AuxSystem::single(AuxChannels::with_constant_v(big_u.clone()));
        assert!(matches!(eval_lossless_corner(&m, &a, &f_xt()), Err(Error::Cardinality(_))));
        // lossy allows (2+5)^2 = 49
        let g = ReconstructionFn::from_flat(37, 2, vec![0; 74]).unwrap();
        let d = DistortionSpec::hamming(2);
        assert!(eval_lossy_corner(&m, &a, &f_xt(), &g, &d).is_ok());
        assert_eq!(Mode::Lossless.single_bounds(2), (6, 36));
        assert_eq!(Mode::Lossy.multi_bounds(2), (8, 64));
    }

    #[test]
    fn perfect_reconstruction_has_zero_distortion() {
        let m = binary_model(0.06, 0.15, 0.25);
        let a = AuxSystem::single(AuxChannels::identity(m.xt_alphabet()));
        let d = DistortionSpec::hamming(2);
        let g = optimal_g(&m, &a, &f_xt(), &d).unwrap();
        let t = eval_lossy_corner(&m, &a, &f_xt(), &g, &d).unwrap();
        assert_eq!(t.d, Some(0.0));
        assert_eq!(g.table(), &[0, 0, 1, 1]);
    }

    #[test]
    fn constant_u_distortion_matches_exhaustive_rules() {
        let m = binary_model(0.1, 0.2, 0.3);
        let f_xor = FunctionSpec::from_fn(2, 2, Alphabet::binary("F"), |a, y| a & y).unwrap();
        let a = AuxSystem::single(AuxChannels::constant(m.xt_alphabet()));
        let d = DistortionSpec::hamming(2);
        let g = optimal_g(&m, &a, &f_xor, &d).unwrap();
        let got = eval_lossy_corner(&m, &a, &f_xor, &g, &d).unwrap().d.unwrap();
        let j = model::build_joint(&m).unwrap().marginal(&[axis::XT, axis::Y]).unwrap();
        // all |F|^|Y| = 4 rules g(y)
        let mut best = f64::INFINITY;
        for rule in 0..4usize {
            let mut e = 0.0;
            for xt in 0..2 {
                for y in 0..2 {
                    let ghat = (rule >> y) & 1;
                    if f_xor.eval(xt, y) != ghat {
                        e += j.prob(&[xt, y]);
                    }
                }
            }
            best = best.min(e);
        }
        assert!((got - best).abs() < 1e-15);
    }

    #[test]
    fn map_rule_and_asymmetric_costs() {
        // One U symbol, one Y symbol, F = X̃ with P(F) = (0.7, 0.3) or (0.4, 0.6).
        let build = |p1: f64| {
            SourceModel::with_independent_noise(
                Dist::new(Alphabet::binary("X"), vec![1.0 - p1, p1]).unwrap(),
                CondDist::identity(&Alphabet::binary("X"), "Xt"),
                &CondDist::constant(Alphabet::binary("X"), &Dist::point_mass(Alphabet::indexed("Y", 1).unwrap(), 0).unwrap()),
                &CondDist::constant(Alphabet::binary("X"), &Dist::point_mass(Alphabet::indexed("Z", 1).unwrap(), 0).unwrap()),
            )
            .unwrap()
        };
        let f = FunctionSpec::identity_xt(&Alphabet::binary("Xt"), 1);
        let m = build(0.3);
        let a = AuxSystem::single(AuxChannels::constant(m.xt_alphabet()));
        let g = optimal_g(&m, &a, &f, &DistortionSpec::hamming(2)).unwrap();
        assert_eq!(g.eval(0, 0), 0);
        // d(0,1) = 10, d(1,0) = 1 with P = (0.4, 0.6):
        // f̂=0 costs 0.6·1 = 0.6, f̂=1 costs 0.4·10 = 4.0
        let m = build(0.6);
        let d = DistortionSpec::new(vec![vec![0.0, 10.0], vec![1.0, 0.0]]).unwrap();
        let g = optimal_g(&m, &a, &f, &d).unwrap();
        let cost = |fhat: usize| 0.4 * d.eval(0, fhat) + 0.6 * d.eval(1, fhat);
        let oracle = if cost(0) <= cost(1) { 0 } else { 1 };
        assert_eq!(g.eval(0, 0), oracle);
        assert_eq!(oracle, 0);
    }

    #[test]
    fn time_sharing_identical_channels_is_transparent() {
        let m = binary_model(0.06, 0.15, 0.25);
        let ch = AuxChannels::new(
            CondDist::bsc("Xt", "U", 0.1).unwrap(),
            CondDist::bsc("U", "V", 0.3).unwrap(),
        )
        .unwrap();
        let single = eval_rates(&m, &AuxSystem::single(ch.clone())).unwrap();
        let mixed = eval_rates(&m, &AuxSystem::mixture(&ch, &ch, 0.35).unwrap()).unwrap();
        for (a, b) in single.rates().iter().zip(mixed.rates()) {
            assert!((a - b).abs() < 1e-12);
        }
        let report = per_q_report(&m, &AuxSystem::mixture(&ch, &ch, 0.35).unwrap()).unwrap();
        assert_eq!(report.len(), 2);
    }

    #[test]
    fn parse_mode_and_coord() {
        assert_eq!("lossy".parse::<Mode>().unwrap(), Mode::Lossy);
        assert!("lossier".parse::<Mode>().is_err());
        assert_eq!("R_eve".parse::<Coord>().unwrap(), Coord::PrivacyEve);
    }
}
