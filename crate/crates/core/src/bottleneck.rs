//! The binary information-bottleneck example.
//!
//! `X ~ Bern(1/2)`, `X̃ = X ⊕ BSC(p)`, the decoder sees `M` independent
//! `BSC(q_dec)` copies of `X`, and the eavesdropper a further-degraded copy
//! of the first decoder bit. Under a physically degraded eavesdropper the
//! boundary is traced by a uniform binary `U` with `P(X̃|U) = BSC(α)`,
//!
//! ```text
//! α(h) = (H_b⁻¹(h) − p) / (1 − 2p),    h = H(X|U) ∈ [H_b(p), 1]
//! R_s = R_w   = I(U;X̃) − I(U;Y)
//! R_dec = R_eve = I(U;X) − I(U;Y)
//! ```
//!
//! All mutual informations are summed exactly over the `2 × 2^M` joint.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, axis, DistortionSpec, FunctionSpec, SourceModel};
use crate::probcore::{binary_entropy, inv_binary_entropy, Alphabet, CondDist, Dist, MAX_CELLS};
use crate::region::{
    aux_joint, expected_distortion, optimal_g_on, AuxChannels, AuxSystem, RateTuple,
};
use crate::scalar::Scalar;

/// Crossover of the default eavesdropper cascade off the first decoder bit.
pub const DEFAULT_Z_CROSSOVER: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricExample<T> {
    pub p: T,
    pub m: usize,
    pub q_dec: T,
    pub z_crossover: T,
}

impl<T: Scalar> SymmetricExample<T> {
    pub fn new(p: T, m: usize, q_dec: T) -> Result<Self> {
        let e = Self {
            p,
            m,
            q_dec,
            z_crossover: T::lit(DEFAULT_Z_CROSSOVER),
        };
        e.validate()?;
        Ok(e)
    }

    pub fn with_z_crossover(mut self, z: T) -> Result<Self> {
        self.z_crossover = z;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        if !(self.p >= T::zero() && self.p < half) {
            return Err(Error::Domain {
                what: "encoder crossover p (must lie in [0, 0.5))",
                value: self.p.as_f64(),
            });
        }
        if !(self.q_dec >= T::zero() && self.q_dec <= half) {
            return Err(Error::Domain {
                what: "decoder crossover q_dec (must lie in [0, 0.5])",
                value: self.q_dec.as_f64(),
            });
        }
        if !(self.z_crossover >= T::zero() && self.z_crossover <= T::one()) {
            return Err(Error::Domain {
                what: "eavesdropper crossover",
                value: self.z_crossover.as_f64(),
            });
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        // joint (U, Xt, X, Y, Z) has 16·2^M cells
        let required = 16u128 << self.m.min(100);
        if self.m > 40 || required > MAX_CELLS as u128 {
            return Err(Error::CapExceeded {
                what: format!("example joint with M = {}", self.m),
                required,
                cap: MAX_CELLS as u128,
            });
        }
        Ok(())
    }
}

/// `α = (H_b⁻¹(h) − p) / (1 − 2p)`.
pub fn optimal_alpha<T: Scalar>(p: T, h: T) -> Result<T> {
    let half = T::lit(0.5);
    if !(p >= T::zero() && p < half) {
        return Err(Error::Domain {
            what: "p (must lie in [0, 0.5))",
            value: p.as_f64(),
        });
    }
    let floor = binary_entropy(p)?;
    if h < floor - T::tol(1e-12) || h > T::one() + T::tol(1e-12) {
        return Err(Error::Domain {
            what: "H(X|U) (must lie in [H_b(p), 1])",
            value: h.as_f64(),
        });
    }
    let a = (inv_binary_entropy(h.min(T::one()).max(T::zero()))? - p) / (T::one() - T::lit(2.0) * p);
    let slack = T::tol(1e-12);
    if a < -slack || a > half + slack {
        return Err(Error::Domain {
            what: "crossover α outside [0, 0.5]",
            value: a.as_f64(),
        });
    }
    Ok(a.max(T::zero()).min(half))
}

/// Labels of the `M`-bit decoder alphabet, first arm leftmost.
fn bit_labels(m: usize) -> Vec<String> {
    (0..1usize << m)
        .map(|y| (0..m).map(|b| if (y >> (m - 1 - b)) & 1 == 1 { '1' } else { '0' }).collect())
        .collect()
}

pub fn build_example_model<T: Scalar>(e: &SymmetricExample<T>) -> Result<SourceModel<T>> {
    e.validate()?;
    let xa = Alphabet::binary(axis::X);
    let ya = Alphabet::new(axis::Y, bit_labels(e.m))?;
    let ny = ya.size();
    let (q, nq) = (e.q_dec, T::one() - e.q_dec);
    let y_rows: Vec<Vec<T>> = (0..2)
        .map(|x| {
            (0..ny)
                .map(|y| {
                    (0..e.m).fold(T::one(), |acc, b| {
                        let bit = (y >> (e.m - 1 - b)) & 1;
                        acc * if bit == x { nq } else { q }
                    })
                })
                .collect()
        })
        .collect();
    let y_given_x = CondDist::new(xa.clone(), ya.clone(), y_rows)?;
    let (z, nz) = (e.z_crossover, T::one() - e.z_crossover);
    let z_rows: Vec<Vec<T>> = (0..ny)
        .map(|y| {
            let first = (y >> (e.m - 1)) & 1;
            if first == 0 {
                vec![nz, z]
            } else {
                vec![z, nz]
            }
        })
        .collect();
    let z_given_y = CondDist::new(ya, Alphabet::binary(axis::Z), z_rows)?;
    SourceModel::with_degraded_eve(
        Dist::uniform(xa),
        CondDist::bsc(axis::X, axis::XT, e.p)?,
        &y_given_x,
        &z_given_y,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct IBPoint<T> {
    pub m: usize,
    pub h_x_given_u: T,
    pub alpha: T,
    /// `d` is set when a function was supplied.
    pub rates: RateTuple<T>,
    pub i_u_xt: T,
    pub i_u_x: T,
    pub i_u_y: T,
}

/// Grid value left out of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped<T> {
    pub h_x_given_u: T,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IBCurve<T> {
    pub points: Vec<IBPoint<T>>,
    pub skipped: Vec<Skipped<T>>,
}

/// `n` evenly spaced values over `[H_b(p), 1]`.
pub fn default_grid<T: Scalar>(p: T, n: usize) -> Result<Vec<T>> {
    let lo = binary_entropy(p)?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    T::one()
                } else {
                    lo + (T::one() - lo) * T::lit(i as f64) / T::lit((n - 1) as f64)
                }
            })
            .collect(),
    })
}

/// `P(U|X̃)` for uniform `U` and `P(X̃|U) = BSC(α)`, by Bayes inversion
/// against `P_X̃`.
fn u_given_xt<T: Scalar>(m: &SourceModel<T>, alpha: T) -> Result<CondDist<T>> {
    let p_xt = m.xt_given_x().push_forward(m.p_x())?;
    let half = T::lit(0.5);
    let rows = (0..2)
        .map(|xt| {
            let lik = |u: usize| if u == xt { T::one() - alpha } else { alpha };
            let px = p_xt.probs()[xt];
            if px <= T::zero() {
                return vec![half, half];
            }
            let r0 = half * lik(0) / px;
            vec![r0, T::one() - r0]
        })
        .collect();
    CondDist::new(m.xt_alphabet().clone(), Alphabet::binary(axis::U), rows)
}

fn point<T: Scalar>(
    e: &SymmetricExample<T>,
    m: &SourceModel<T>,
    h: T,
    f: Option<&FunctionSpec>,
) -> Result<IBPoint<T>> {
    let alpha = optimal_alpha(e.p, h)?;
    let a = AuxSystem::single(AuxChannels::with_constant_v(u_given_xt(m, alpha)?));
    let j = aux_joint(m, &a)?;
    let i_u_xt = j.mutual_info(&[axis::U], &[axis::XT])?;
    let i_u_x = j.mutual_info(&[axis::U], &[axis::X])?;
    let i_u_y = j.mutual_info(&[axis::U], &[axis::Y])?;
    let r_s = i_u_xt - i_u_y;
    let r_eve = i_u_x - i_u_y;
    let d = match f {
        Some(f) => {
            f.check_against(m)?;
            let d = DistortionSpec::hamming(f.output().size());
            let g = optimal_g_on(&j, axis::U, axis::Y, axis::XT, f, &d)?;
            Some(expected_distortion(&j, axis::U, axis::Y, axis::XT, f, &g, &d)?)
        }
        None => None,
    };
    Ok(IBPoint {
        m: e.m,
        h_x_given_u: h,
        alpha,
        rates: RateTuple {
            r_s,
            r_w: r_s,
            r_dec: r_eve,
            r_eve,
            d,
        },
        i_u_xt,
        i_u_x,
        i_u_y,
    })
}

/// Boundary points for each grid value of `H(X|U)`, in grid order.
/// Infeasible values are recorded in `skipped`. With `f`, each point also
/// carries the Hamming distortion of the Bayes reconstruction.
pub fn ib_curve<T: Scalar>(
    e: &SymmetricExample<T>,
    grid: &[T],
    f: Option<&FunctionSpec>,
) -> Result<IBCurve<T>> {
    let m = build_example_model(e)?;
    ib_curve_on_model(e, &m, grid, f)
}

/// As [`ib_curve`] on a caller-built model with the same `p` (e.g. a
/// different degraded eavesdropper).
pub fn ib_curve_on_model<T: Scalar>(
    e: &SymmetricExample<T>,
    m: &SourceModel<T>,
    grid: &[T],
    f: Option<&FunctionSpec>,
) -> Result<IBCurve<T>> {
    let results: Vec<Result<IBPoint<T>>> = grid.par_iter().map(|&h| point(e, m, h, f)).collect();
    let mut curve = IBCurve {
        points: Vec::with_capacity(grid.len()),
        skipped: Vec::new(),
    };
    for (&h, r) in grid.iter().zip(results) {
        match r {
            Ok(pt) => curve.points.push(pt),
            Err(err @ Error::Domain { .. }) => curve.skipped.push(Skipped {
                h_x_given_u: h,
                reason: err.to_string(),
            }),
            Err(err) => return Err(err),
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig3Row<T> {
    pub m: usize,
    pub max_r_s: T,
    pub max_r_eve: T,
    /// Percent decrease relative to the first row.
    pub decrease_r_s: T,
    pub decrease_r_eve: T,
}

/// Curve maxima per `M` over a `grid_points`-point default grid, with
/// percent decreases relative to `m_list[0]`.
pub fn fig3_summary<T: Scalar>(
    p: T,
    q_dec: T,
    m_list: &[usize],
    grid_points: usize,
) -> Result<Vec<Fig3Row<T>>> {
    if m_list.is_empty() {
        return Err(Error::InvalidParameter("M list is empty".into()));
    }
    let grid = default_grid(p, grid_points.max(1))?;
    let mut rows: Vec<Fig3Row<T>> = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let e = SymmetricExample::new(p, m, q_dec)?;
        let curve = ib_curve(&e, &grid, None)?;
        let max = |sel: fn(&IBPoint<T>) -> T| {
            curve
                .points
                .iter()
                .map(sel)
                .fold(T::neg_infinity(), T::max)
        };
        let (max_r_s, max_r_eve) = (max(|pt| pt.rates.r_s), max(|pt| pt.rates.r_eve));
        let (base_s, base_eve) = rows
            .first()
            .map_or((max_r_s, max_r_eve), |r| (r.max_r_s, r.max_r_eve));
        let pct = |base: T, v: T| T::lit(100.0) * (base - v) / base;
        rows.push(Fig3Row {
            m,
            max_r_s,
            max_r_eve,
            decrease_r_s: pct(base_s, max_r_s),
            decrease_r_eve: pct(base_eve, max_r_eve),
        });
    }
    Ok(rows)
}

/// Whether the example's eavesdropper is physically degraded.
pub fn example_is_degraded<T: Scalar>(e: &SymmetricExample<T>) -> Result<bool> {
    Ok(model::is_physically_degraded_eve(&build_example_model(e)?))
}
