//! Remote-source measurement model, function and distortion specifications.
//!
//! A hidden i.i.d. source `X` is observed by the encoder through
//! `P(X̃|X)` and by the decoder and eavesdropper through a joint channel
//! `P(Y,Z|X)`, which may carry correlated noise.

use crate::error::{Error, Result};
use crate::probcore::{Alphabet, CondDist, Dist, JointDist};
use crate::scalar::Scalar;

/// Canonical axis names used in every joint built by this crate.
pub mod axis {
    pub const Q: &str = "Q";
    pub const V: &str = "V";
    pub const U: &str = "U";
    pub const XT: &str = "Xt";
    pub const X: &str = "X";
    pub const Y: &str = "Y";
    pub const Z: &str = "Z";
    pub const F: &str = "F";

    /// Per-arm name, e.g. `arm("U", 2) == "U2"`.
    pub fn arm(base: &str, j: usize) -> String {
        format!("{base}{j}")
    }
}

/// Threshold (bits) below which `H(F|U,Y)` counts as zero.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;
/// Threshold (bits) below which a conditional mutual information counts as zero.
pub const MARKOV_TOL: f64 = 1e-9;
/// Max-abs reconstruction error accepted by the degradedness test.
pub const DEGRADED_TOL: f64 = 1e-9;

/// `(P_X, P_{X̃|X}, P_{YZ|X})` with alphabets renamed to the canonical axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel<T> {
    p_x: Dist<T>,
    xt_given_x: CondDist<T>,
    yz_given_x: CondDist<T>,
    y: Alphabet,
    z: Alphabet,
}

impl<T: Scalar> SourceModel<T> {
    /// `yz_given_x` rows are laid out `y`-major over `𝒴 × 𝒵`.
    pub fn new(
        p_x: Dist<T>,
        xt_given_x: CondDist<T>,
        y: Alphabet,
        z: Alphabet,
        yz_given_x: CondDist<T>,
    ) -> Result<Self> {
        if !xt_given_x.input().same_symbols(p_x.alphabet()) {
            return Err(Error::AlphabetMismatch(
                "input of P(X̃|X) does not match the source alphabet".into(),
            ));
        }
        if !yz_given_x.input().same_symbols(p_x.alphabet()) {
            return Err(Error::AlphabetMismatch(
                "input of P(YZ|X) does not match the source alphabet".into(),
            ));
        }
        if yz_given_x.output().size() != y.size() * z.size() {
            return Err(Error::AlphabetMismatch(format!(
                "P(YZ|X) has {} outputs, |Y|·|Z| = {}",
                yz_given_x.output().size(),
                y.size() * z.size()
            )));
        }
        let yz = Alphabet::product("YZ", &y.renamed(axis::Y), &z.renamed(axis::Z));
        Ok(Self {
            p_x: p_x.renamed(axis::X),
            xt_given_x: xt_given_x.with_names(axis::X, axis::XT),
            yz_given_x: CondDist::from_flat(
                p_x.alphabet().renamed(axis::X),
                yz,
                yz_given_x.flat().to_vec(),
            )?,
            y: y.renamed(axis::Y),
            z: z.renamed(axis::Z),
        })
    }

    /// Decoder and eavesdropper observe `X` through independent channels.
    pub fn with_independent_noise(
        p_x: Dist<T>,
        xt_given_x: CondDist<T>,
        y_given_x: &CondDist<T>,
        z_given_x: &CondDist<T>,
    ) -> Result<Self> {
        let (y, z) = (y_given_x.output().clone(), z_given_x.output().clone());
        let rows = (0..p_x.len())
            .map(|x| {
                let mut r = Vec::with_capacity(y.size() * z.size());
                for &py in y_given_x.row(x) {
                    r.extend(z_given_x.row(x).iter().map(|&pz| py * pz));
                }
                r
            })
            .collect();
        let yz = CondDist::new(p_x.alphabet().clone(), Alphabet::product("YZ", &y, &z), rows)?;
        Self::new(p_x, xt_given_x, y, z, yz)
    }

    /// Physically degraded eavesdropper, `P_{YZ|X} = P_{Y|X} P_{Z|Y}`.
    pub fn with_degraded_eve(
        p_x: Dist<T>,
        xt_given_x: CondDist<T>,
        y_given_x: &CondDist<T>,
        z_given_y: &CondDist<T>,
    ) -> Result<Self> {
        if !z_given_y.input().same_symbols(y_given_x.output()) {
            return Err(Error::AlphabetMismatch(
                "input of P(Z|Y) does not match the decoder alphabet".into(),
            ));
        }
        let (y, z) = (y_given_x.output().clone(), z_given_y.output().clone());
        let rows = (0..p_x.len())
            .map(|x| {
                let mut r = Vec::with_capacity(y.size() * z.size());
                for (yi, &py) in y_given_x.row(x).iter().enumerate() {
                    r.extend(z_given_y.row(yi).iter().map(|&pz| py * pz));
                }
                r
            })
            .collect();
        let yz = CondDist::new(p_x.alphabet().clone(), Alphabet::product("YZ", &y, &z), rows)?;
        Self::new(p_x, xt_given_x, y, z, yz)
    }

    pub fn p_x(&self) -> &Dist<T> {
        &self.p_x
    }

    pub fn xt_given_x(&self) -> &CondDist<T> {
        &self.xt_given_x
    }

    pub fn yz_given_x(&self) -> &CondDist<T> {
        &self.yz_given_x
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        self.p_x.alphabet()
    }

    pub fn xt_alphabet(&self) -> &Alphabet {
        self.xt_given_x.output()
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        &self.z
    }

    /// `P(y, z | x)`.
    pub fn p_yz(&self, x: usize, y: usize, z: usize) -> T {
        self.yz_given_x.get(x, y * self.z.size() + z)
    }

    /// Marginal decoder channel `P(Y|X)`.
    pub fn y_given_x(&self) -> CondDist<T> {
        let (ny, nz) = (self.y.size(), self.z.size());
        let rows = (0..self.p_x.len())
            .map(|x| (0..ny).map(|y| (0..nz).map(|z| self.p_yz(x, y, z)).sum()).collect())
            .collect();
        CondDist::new(self.x_alphabet().clone(), self.y.clone(), rows)
            .expect("marginal of a stochastic matrix is stochastic")
    }
}

/// Joint `P(x̃, x, y, z) = P_X(x) P_{X̃|X}(x̃|x) P_{YZ|X}(y,z|x)`, axes
/// `(Xt, X, Y, Z)`.
pub fn build_joint<T: Scalar>(m: &SourceModel<T>) -> Result<JointDist<T>> {
    JointDist::from_dist(&m.p_x)
        .extend(axis::X, &m.xt_given_x, axis::XT)?
        .extend(axis::X, &m.yz_given_x, "YZ")?
        .split_axis("YZ", m.y.clone(), m.z.clone())?
        .reorder(&[axis::XT, axis::X, axis::Y, axis::Z])
}

/// Tests whether some stochastic `P(Z|Y)` satisfies `P(y,z|x) = P(y|x) P(z|y)`
/// on the support of `P_X`.
///
/// For each `y` the least-squares fit `w_z = Σ_x P(y|x) P(y,z|x) / Σ_x P(y|x)²`
/// is the unique candidate row (rows of unseen `y` are unconstrained); the
/// fit is projected onto the simplex and the factorization error checked.
pub fn is_physically_degraded_eve<T: Scalar>(m: &SourceModel<T>) -> bool {
    degradation_error(m) <= T::tol(DEGRADED_TOL)
}

/// Max-abs reconstruction error of the best-fit `P(Z|Y)`.
pub fn degradation_error<T: Scalar>(m: &SourceModel<T>) -> T {
    let y_given_x = m.y_given_x();
    let support: Vec<usize> = (0..m.p_x.len())
        .filter(|&x| m.p_x.probs()[x] > T::zero())
        .collect();
    let (ny, nz) = (m.y.size(), m.z.size());
    let mut worst = T::zero();
    for y in 0..ny {
        let norm: T = support.iter().map(|&x| y_given_x.get(x, y).powi(2)).sum();
        if norm <= T::zero() {
            continue;
        }
        let fit: Vec<T> = (0..nz)
            .map(|z| {
                support
                    .iter()
                    .map(|&x| y_given_x.get(x, y) * m.p_yz(x, y, z))
                    .sum::<T>()
                    / norm
            })
            .collect();
        let row = project_simplex(&fit);
        for &x in &support {
            for (z, &w) in row.iter().enumerate() {
                let err = (y_given_x.get(x, y) * w - m.p_yz(x, y, z)).abs();
                worst = worst.max(err);
            }
        }
    }
    worst
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (k, &s) in sorted.iter().enumerate() {
        cum = cum + s;
        let t = (cum - T::one()) / T::lit((k + 1) as f64);
        if s - t > T::zero() {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

/// True iff `I(A; C | B) ≤ 1e-9`, i.e. `A - B - C`.
pub fn markov_chain_holds<T: Scalar>(
    j: &JointDist<T>,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<bool> {
    Ok(j.cond_mutual_info(a, c, b)? <= T::tol(MARKOV_TOL))
}

/// Per-letter function `f(x̃, y)` with values in `output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    output: Alphabet,
    xt_size: usize,
    y_size: usize,
    table: Vec<usize>,
}

impl FunctionSpec {
    /// `rows[x̃][y]` is the output symbol index.
    pub fn new(output: Alphabet, rows: Vec<Vec<usize>>) -> Result<Self> {
        let xt_size = rows.len();
        let y_size = rows.first().map(Vec::len).unwrap_or(0);
        if xt_size == 0 || y_size == 0 {
            return Err(Error::InvalidParameter("function table is empty".into()));
        }
        let mut table = Vec::with_capacity(xt_size * y_size);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != y_size {
                return Err(Error::InvalidParameter(format!(
                    "function table row {i} has {} entries, expected {y_size}",
                    r.len()
                )));
            }
            if let Some(&bad) = r.iter().find(|&&f| f >= output.size()) {
                return Err(Error::InvalidParameter(format!(
                    "function value {bad} outside `{}`",
                    output.name()
                )));
            }
            table.extend(r);
        }
        Ok(Self {
            output: output.renamed(axis::F),
            xt_size,
            y_size,
            table,
        })
    }

    pub fn from_fn(
        xt_size: usize,
        y_size: usize,
        output: Alphabet,
        f: impl Fn(usize, usize) -> usize,
    ) -> Result<Self> {
        Self::new(
            output,
            (0..xt_size)
                .map(|xt| (0..y_size).map(|y| f(xt, y)).collect())
                .collect(),
        )
    }

    /// `f(x̃, y) = x̃`.
    pub fn identity_xt(xt: &Alphabet, y_size: usize) -> Self {
        Self::from_fn(xt.size(), y_size, xt.clone(), |a, _| a).expect("identity in range")
    }

    pub fn eval(&self, xt: usize, y: usize) -> usize {
        self.table[xt * self.y_size + y]
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn xt_size(&self) -> usize {
        self.xt_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn check_against<T: Scalar>(&self, m: &SourceModel<T>) -> Result<()> {
        if self.xt_size != m.xt_alphabet().size() || self.y_size != m.y_alphabet().size() {
            return Err(Error::AlphabetMismatch(format!(
                "function table is {}×{}, model has |X̃|={} |Y|={}",
                self.xt_size,
                self.y_size,
                m.xt_alphabet().size(),
                m.y_alphabet().size()
            )));
        }
        Ok(())
    }
}

/// Per-letter distortion `d(f, f̂)` on the function alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSpec<T> {
    size: usize,
    table: Vec<T>,
}

impl<T: Scalar> DistortionSpec<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let size = rows.len();
        let mut table = Vec::with_capacity(size * size);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != size {
                return Err(Error::InvalidParameter(format!(
                    "distortion row {i} has {} entries, expected {size}",
                    r.len()
                )));
            }
            for (k, &v) in r.iter().enumerate() {
                if !(v >= T::zero()) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("d({i},{k}) = {v}")));
                }
                if i == k && v != T::zero() {
                    return Err(Error::InvalidParameter(format!("d({i},{i}) = {v} ≠ 0")));
                }
            }
            table.extend(r);
        }
        if size == 0 {
            return Err(Error::InvalidParameter("distortion table is empty".into()));
        }
        Ok(Self { size, table })
    }

    pub fn hamming(size: usize) -> Self {
        let table = (0..size * size)
            .map(|c| if c / size == c % size { T::zero() } else { T::one() })
            .collect();
        Self { size, table }
    }

    pub fn eval(&self, f: usize, fhat: usize) -> T {
        self.table[f * self.size + fhat]
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// One encoder–decoder pair of a multi-function model.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm<T> {
    pub xt_given_x: CondDist<T>,
    pub y: Alphabet,
    pub z: Alphabet,
    pub yz_given_x: CondDist<T>,
    pub f: FunctionSpec,
    pub d: DistortionSpec<T>,
}

impl<T: Scalar> Arm<T> {
    /// Single-function view of this arm.
    pub fn source_model(&self, p_x: &Dist<T>) -> Result<SourceModel<T>> {
        SourceModel::new(
            p_x.clone(),
            self.xt_given_x.clone(),
            self.y.clone(),
            self.z.clone(),
            self.yz_given_x.clone(),
        )
    }
}

/// `J ≥ 1` arms sharing the hidden source.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModel<T> {
    p_x: Dist<T>,
    arms: Vec<Arm<T>>,
}

impl<T: Scalar> MultiModel<T> {
    pub fn new(p_x: Dist<T>, arms: Vec<Arm<T>>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidParameter("multi-function model needs J ≥ 1".into()));
        }
        let p_x = p_x.renamed(axis::X);
        for (j, arm) in arms.iter().enumerate() {
            let m = arm.source_model(&p_x)?;
            arm.f.check_against(&m).map_err(|e| {
                Error::AlphabetMismatch(format!("arm {}: {e}", j + 1))
            })?;
            if arm.d.size() != arm.f.output().size() {
                return Err(Error::AlphabetMismatch(format!(
                    "arm {}: distortion table is {}×{}, |F| = {}",
                    j + 1,
                    arm.d.size(),
                    arm.d.size(),
                    arm.f.output().size()
                )));
            }
        }
        Ok(Self { p_x, arms })
    }

    pub fn p_x(&self) -> &Dist<T> {
        &self.p_x
    }

    pub fn arms(&self) -> &[Arm<T>] {
        &self.arms
    }

    pub fn j(&self) -> usize {
        self.arms.len()
    }

    /// First `j` arms only.
    pub fn truncated(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.arms.len() {
            return Err(Error::InvalidParameter(format!(
                "J = {j} outside 1..={}",
                self.arms.len()
            )));
        }
        Self::new(self.p_x.clone(), self.arms[..j].to_vec())
    }

    /// Arms reordered by `perm` (arm `k` of the result is arm `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let arms = perm
            .iter()
            .map(|&k| {
                self.arms
                    .get(k)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("no arm {k}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.p_x.clone(), arms)
    }
}

/// `H(F | U, Y)` for `U` drawn from `X̃` through `u_given_xt`.
pub fn admissibility_residual<T: Scalar>(
    m: &SourceModel<T>,
    u_given_xt: &CondDist<T>,
    f: &FunctionSpec,
) -> Result<T> {
    f.check_against(m)?;
    if !u_given_xt.input().same_symbols(m.xt_alphabet()) {
        return Err(Error::AlphabetMismatch(
            "input of P(U|X̃) does not match the encoder alphabet".into(),
        ));
    }
    let j = build_joint(m)?
        .marginal(&[axis::XT, axis::Y])?
        .extend(axis::XT, u_given_xt, axis::U)?
        .extend_with(&[axis::XT, axis::Y], f.output().clone(), |p, row| {
            row[f.eval(p[0], p[1])] = T::one()
        })?;
    j.cond_entropy(&[axis::F], &[axis::U, axis::Y])
}

/// Definition of an admissible auxiliary: `(U, Y)` determine `f(X̃, Y)`.
pub fn is_admissible<T: Scalar>(
    m: &SourceModel<T>,
    u_given_xt: &CondDist<T>,
    f: &FunctionSpec,
) -> Result<bool> {
    Ok(admissibility_residual(m, u_given_xt, f)? <= T::tol(ADMISSIBILITY_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(i: &str, o: &str, p: f64) -> CondDist<f64> {
        CondDist::bsc(i, o, p).unwrap()
    }

    fn uniform_x() -> Dist<f64> {
        Dist::uniform(Alphabet::binary("X"))
    }

    pub(crate) fn binary_model(p: f64, qy: f64, qz: f64) -> SourceModel<f64> {
        SourceModel::with_degraded_eve(uniform_x(), bsc("X", "Xt", p), &bsc("X", "Y", qy), &bsc("Y", "Z", qz))
            .unwrap()
    }

    #[test]
    fn noiseless_measurement_gives_diagonal() {
        let m = binary_model(0.0, 0.1, 0.1);
        let j = build_joint(&m).unwrap().marginal(&[axis::XT, axis::X]).unwrap();
        assert_eq!(j.table(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn independent_eve_leaks_nothing() {
        let z_const = CondDist::constant(Alphabet::binary("X"), &Dist::bernoulli("Z", 0.3).unwrap());
        let m = SourceModel::with_independent_noise(uniform_x(), bsc("X", "Xt", 0.1), &bsc("X", "Y", 0.2), &z_const)
            .unwrap();
        let j = build_joint(&m).unwrap();
        assert!(j.mutual_info(&[axis::X], &[axis::Z]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn decoder_information_matches_closed_form() {
        let m = binary_model(0.06, 0.15, 0.25);
        let j = build_joint(&m).unwrap();
        let i = j.mutual_info(&[axis::X], &[axis::Y]).unwrap();
        let hb = crate::probcore::binary_entropy(0.15).unwrap();
        assert!((i - (1.0 - hb)).abs() < 1e-14);
    }

    #[test]
    fn joint_respects_measurement_chain() {
        let m = binary_model(0.06, 0.15, 0.25);
        let j = build_joint(&m).unwrap();
        assert!(j.cond_mutual_info(&[axis::XT], &[axis::Y, axis::Z], &[axis::X]).unwrap() <= 1e-12);
    }

    #[test]
    fn degradedness_examples() {
        // Z = Y
        let same = SourceModel::with_degraded_eve(
            uniform_x(),
            bsc("X", "Xt", 0.1),
            &bsc("X", "Y", 0.2),
            &CondDist::identity(&Alphabet::binary("Y"), "Z"),
        )
        .unwrap();
        assert!(is_physically_degraded_eve(&same));
        // Z independent of everything
        let z_const = CondDist::constant(Alphabet::binary("X"), &Dist::bernoulli("Z", 0.3).unwrap());
        let indep = SourceModel::with_independent_noise(uniform_x(), bsc("X", "Xt", 0.1), &bsc("X", "Y", 0.2), &z_const)
            .unwrap();
        assert!(is_physically_degraded_eve(&indep));
        // Z = X while Y is a noisy view of X
        let z_is_x = SourceModel::with_independent_noise(
            uniform_x(),
            bsc("X", "Xt", 0.1),
            &bsc("X", "Y", 0.2),
            &CondDist::identity(&Alphabet::binary("X"), "Z"),
        )
        .unwrap();
        assert!(!is_physically_degraded_eve(&z_is_x));
    }

    #[test]
    fn degradedness_oracle_agrees_on_binary_grid() {
        // exhaustive search over a grid of 2×2 stochastic P(Z|Y)
        let z_is_x = SourceModel::with_independent_noise(
            uniform_x(),
            bsc("X", "Xt", 0.1),
            &bsc("X", "Y", 0.2),
            &CondDist::identity(&Alphabet::binary("X"), "Z"),
        )
        .unwrap();
        let y_given_x = z_is_x.y_given_x();
        let mut best = f64::INFINITY;
        let steps = 200;
        for a in 0..=steps {
            for b in 0..=steps {
                let w = [[a as f64 / steps as f64, 1.0 - a as f64 / steps as f64], [b as f64 / steps as f64, 1.0 - b as f64 / steps as f64]];
                let mut err: f64 = 0.0;
                for x in 0..2 {
                    for y in 0..2 {
                        for z in 0..2 {
                            err = err.max((y_given_x.get(x, y) * w[y][z] - z_is_x.p_yz(x, y, z)).abs());
                        }
                    }
                }
                best = best.min(err);
            }
        }
        assert!(best > 1e-3);
        assert!(degradation_error(&z_is_x) > 1e-3);
    }

    #[test]
    fn degradedness_ignores_z_relabeling() {
        let m = binary_model(0.1, 0.2, 0.3);
        let flip = CondDist::bsc("Y", "Z", 0.7).unwrap();
        let relabeled =
            SourceModel::with_degraded_eve(uniform_x(), bsc("X", "Xt", 0.1), &bsc("X", "Y", 0.2), &flip).unwrap();
        assert_eq!(is_physically_degraded_eve(&m), is_physically_degraded_eve(&relabeled));
    }

    #[test]
    fn markov_examples() {
        let j = build_joint(&binary_model(0.1, 0.2, 0.3)).unwrap();
        assert!(markov_chain_holds(&j, &[axis::XT], &[axis::X], &[axis::Y]).unwrap());
        // A = B = C
        let a = Dist::<f64>::uniform(Alphabet::binary("A"));
        let copies = JointDist::from_dist(&a)
            .extend("A", &CondDist::identity(a.alphabet(), "B"), "B")
            .unwrap()
            .extend("A", &CondDist::identity(a.alphabet(), "C"), "C")
            .unwrap();
        assert!(markov_chain_holds(&copies, &["A"], &["B"], &["C"]).unwrap());
        // A = C, B independent
        let b = Dist::<f64>::uniform(Alphabet::binary("B"));
        let indep = JointDist::from_dist(&a)
            .extend_independent(&b)
            .unwrap()
            .extend("A", &CondDist::identity(a.alphabet(), "C"), "C")
            .unwrap();
        let direct = indep.cond_mutual_info(&["A"], &["C"], &["B"]).unwrap();
        assert!(direct > 0.99);
        assert!(!markov_chain_holds(&indep, &["A"], &["B"], &["C"]).unwrap());
        assert!(matches!(
            markov_chain_holds(&indep, &["A"], &["A"], &["C"]),
            Err(Error::OverlappingAxes(_))
        ));
    }

    #[test]
    fn admissibility_examples() {
        let m = binary_model(0.1, 0.2, 0.3);
        let xt = m.xt_alphabet().clone();
        let f_xt = FunctionSpec::identity_xt(&xt, 2);
        let f_y = FunctionSpec::from_fn(2, 2, Alphabet::binary("F"), |_, y| y).unwrap();
        let f_xor = FunctionSpec::from_fn(2, 2, Alphabet::binary("F"), |a, y| a ^ y).unwrap();
        let u_id = CondDist::identity(&xt, "U");
        let u_const = CondDist::constant(xt.clone(), &Dist::point_mass(Alphabet::indexed("U", 1).unwrap(), 0).unwrap());
        for f in [&f_xt, &f_y, &f_xor] {
            assert!(is_admissible(&m, &u_id, f).unwrap());
        }
        assert!(!is_admissible(&m, &u_const, &f_xt).unwrap());
        assert!(is_admissible(&m, &u_const, &f_y).unwrap());
    }

    #[test]
    fn distortion_spec_invariants() {
        assert!(DistortionSpec::new(vec![vec![0.0, 1.0], vec![1.0, 0.5]]).is_err());
        assert!(DistortionSpec::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).is_err());
        let h = DistortionSpec::<f64>::hamming(3);
        assert_eq!(h.eval(1, 1), 0.0);
        assert_eq!(h.eval(1, 2), 1.0);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5f64, 0.8, -0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_simplex(&[0.2f64, 0.8]), vec![0.2, 0.8]);
    }
}
