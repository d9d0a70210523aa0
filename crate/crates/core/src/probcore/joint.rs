use std::collections::HashSet;

use super::dist::{check_row, Alphabet, CondDist, Dist, MASS_TOL};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest dense table the crate will allocate.
pub const MAX_CELLS: usize = 1 << 24;

/// Masses at or below this are exact zeros in log arithmetic.
pub const ZERO_MASS: f64 = 1e-15;

/// Dense joint pmf over an ordered list of named axes, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist<T> {
    axes: Vec<Alphabet>,
    table: Vec<T>,
}

fn cell_count(axes: &[Alphabet], what: &str) -> Result<usize> {
    let mut cells: u128 = 1;
    for a in axes {
        cells = cells.saturating_mul(a.size() as u128);
    }
    if cells > MAX_CELLS as u128 {
        return Err(Error::CapExceeded {
            what: format!("{what} over ({})", axis_list(axes)),
            required: cells,
            cap: MAX_CELLS as u128,
        });
    }
    Ok(cells as usize)
}

fn axis_list(axes: &[Alphabet]) -> String {
    axes.iter().map(Alphabet::name).collect::<Vec<_>>().join(",")
}

fn strides(axes: &[Alphabet]) -> Vec<usize> {
    let mut s = vec![1; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * axes[i + 1].size();
    }
    s
}

/// `p log2 p` with the zero convention.
fn plogp<T: Scalar>(p: T) -> T {
    if p <= T::lit(ZERO_MASS) {
        T::zero()
    } else {
        p * p.log2()
    }
}

impl<T: Scalar> JointDist<T> {
    pub fn new(axes: Vec<Alphabet>, table: Vec<T>) -> Result<Self> {
        let mut names = HashSet::new();
        for a in &axes {
            if !names.insert(a.name()) {
                return Err(Error::DuplicateAxis(a.name().to_string()));
            }
        }
        let cells = cell_count(&axes, "joint table")?;
        if table.len() != cells {
            return Err(Error::InvalidDistribution(format!(
                "joint table has {} cells, axes need {cells}",
                table.len()
            )));
        }
        check_row(&table, &format!("joint over ({})", axis_list(&axes)))?;
        Ok(Self { axes, table })
    }

    pub fn from_dist(d: &Dist<T>) -> Self {
        Self {
            axes: vec![d.alphabet().clone()],
            table: d.probs().to_vec(),
        }
    }

    /// The trivial joint over no axes (unit mass).
    pub fn unit() -> Self {
        Self {
            axes: Vec::new(),
            table: vec![T::one()],
        }
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(Alphabet::name).collect()
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Alphabet::size).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name() == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis(&self, name: &str) -> Result<&Alphabet> {
        Ok(&self.axes[self.axis_index(name)?])
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name() == name)
    }

    /// Probability of one cell given per-axis symbol indices.
    pub fn prob(&self, idx: &[usize]) -> T {
        let s = strides(&self.axes);
        let flat: usize = idx.iter().zip(&s).map(|(i, st)| i * st).sum();
        self.table[flat]
    }

    fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        names
            .iter()
            .map(|n| {
                if !seen.insert(*n) {
                    return Err(Error::DuplicateAxis(n.to_string()));
                }
                self.axis_index(n)
            })
            .collect()
    }

    /// Appends a new axis drawn from `kernel(parent symbols) -> row`.
    ///
    /// `kernel` fills a row of length `output.size()`; rows are trusted to be
    /// stochastic and the result is checked for unit mass.
    pub fn extend_with(
        &self,
        parents: &[&str],
        output: Alphabet,
        kernel: impl Fn(&[usize], &mut [T]),
    ) -> Result<Self> {
        if self.has_axis(output.name()) {
            return Err(Error::DuplicateAxis(output.name().to_string()));
        }
        let pidx = self.indices(parents)?;
        let mut axes = self.axes.clone();
        axes.push(output);
        cell_count(&axes, "extended joint")?;
        let k = axes.last().map(Alphabet::size).unwrap_or(1);
        let shape = self.shape();
        let mut table = Vec::with_capacity(self.table.len() * k);
        let mut counter = vec![0usize; shape.len()];
        let mut pvals = vec![0usize; pidx.len()];
        let mut row = vec![T::zero(); k];
        for &p in &self.table {
            for (slot, &ax) in pvals.iter_mut().zip(&pidx) {
                *slot = counter[ax];
            }
            row.iter_mut().for_each(|r| *r = T::zero());
            kernel(&pvals, &mut row);
            table.extend(row.iter().map(|&r| p * r));
            advance(&mut counter, &shape);
        }
        let total: T = table.iter().copied().sum();
        if (total - T::one()).abs() > T::tol(1e-9) {
            return Err(Error::InvalidDistribution(format!(
                "kernel for `{}` is not stochastic (mass {total})",
                axes.last().map(Alphabet::name).unwrap_or("")
            )));
        }
        Ok(Self { axes, table })
    }

    /// Appends the output of `channel` fed by axis `parent`, named `name`.
    pub fn extend(&self, parent: &str, channel: &CondDist<T>, name: &str) -> Result<Self> {
        let pa = self.axis(parent)?;
        if !pa.same_symbols(channel.input()) {
            return Err(Error::AlphabetMismatch(format!(
                "axis `{parent}` does not match input of P({}|{})",
                channel.output().name(),
                channel.input().name()
            )));
        }
        self.extend_with(&[parent], channel.output().renamed(name), |p, row| {
            row.copy_from_slice(channel.row(p[0]))
        })
    }

    /// Appends an axis independent of every existing one.
    pub fn extend_independent(&self, d: &Dist<T>) -> Result<Self> {
        self.extend_with(&[], d.alphabet().clone(), |_, row| {
            row.copy_from_slice(d.probs())
        })
    }

    /// Reinterprets one axis as the product `a × b` (first factor major).
    pub fn split_axis(&self, name: &str, a: Alphabet, b: Alphabet) -> Result<Self> {
        let i = self.axis_index(name)?;
        if a.size() * b.size() != self.axes[i].size() {
            return Err(Error::AlphabetMismatch(format!(
                "cannot split `{name}` of size {} into {}×{}",
                self.axes[i].size(),
                a.size(),
                b.size()
            )));
        }
        let mut axes = self.axes.clone();
        axes.splice(i..=i, [a, b]);
        let mut names = HashSet::new();
        for ax in &axes {
            if !names.insert(ax.name()) {
                return Err(Error::DuplicateAxis(ax.name().to_string()));
            }
        }
        Ok(Self {
            axes,
            table: self.table.clone(),
        })
    }

    /// Renames axes by `(old, new)` pairs.
    pub fn rename(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut axes = self.axes.clone();
        for (old, new) in pairs {
            let i = self.axis_index(old)?;
            axes[i] = axes[i].renamed(*new);
        }
        Self::new(axes, self.table.clone())
    }

    /// Marginal on `names`, axes in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<Self> {
        let keep = self.indices(names)?;
        let axes: Vec<Alphabet> = keep.iter().map(|&i| self.axes[i].clone()).collect();
        let out_strides = strides(&axes);
        let mut src_stride = vec![0usize; self.axes.len()];
        for (k, &i) in keep.iter().enumerate() {
            src_stride[i] = out_strides[k];
        }
        let out_len: usize = axes.iter().map(Alphabet::size).product();
        let mut table = vec![T::zero(); out_len];
        let shape = self.shape();
        let mut counter = vec![0usize; shape.len()];
        let mut offset = 0usize;
        for &p in &self.table {
            table[offset] = table[offset] + p;
            // odometer step, keeping the target offset in sync
            for ax in (0..shape.len()).rev() {
                counter[ax] += 1;
                offset += src_stride[ax];
                if counter[ax] < shape[ax] {
                    break;
                }
                offset -= src_stride[ax] * shape[ax];
                counter[ax] = 0;
            }
        }
        Ok(Self { axes, table })
    }

    /// Same pmf with axes permuted into `names` (which must list every axis).
    pub fn reorder(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.axes.len() {
            return Err(Error::InvalidParameter(format!(
                "reorder lists {} axes, joint has {}",
                names.len(),
                self.axes.len()
            )));
        }
        self.marginal(names)
    }

    /// Shannon entropy (bits) of the marginal on `names`.
    pub fn entropy(&self, names: &[&str]) -> Result<T> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("entropy of an empty axis set".into()));
        }
        let m = self.marginal(names)?;
        Ok(-m.table.iter().map(|&p| plogp(p)).sum::<T>())
    }

    /// `H(A | C)` computed cellwise as `-Σ p(a,c) log p(a,c)/p(c)`.
    pub fn cond_entropy(&self, a: &[&str], c: &[&str]) -> Result<T> {
        disjoint(&[a, c])?;
        if a.is_empty() {
            return Err(Error::InvalidParameter("conditional entropy of an empty axis set".into()));
        }
        let order: Vec<&str> = c.iter().chain(a).copied().collect();
        let m = self.marginal(&order)?;
        let sa = a
            .iter()
            .map(|n| self.axis(n).map(Alphabet::size))
            .product::<Result<usize>>()?;
        let mut h = T::zero();
        for block in m.table.chunks(sa) {
            let pc: T = block.iter().copied().sum();
            if pc <= T::lit(ZERO_MASS) {
                continue;
            }
            for &p in block {
                if p > T::lit(ZERO_MASS) {
                    h = h - p * (p / pc).log2();
                }
            }
        }
        Ok(h)
    }

    pub fn mutual_info(&self, a: &[&str], b: &[&str]) -> Result<T> {
        self.cond_mutual_info(a, b, &[])
    }

    /// `I(A; B | C)` in bits; `c` may be empty.
    ///
    /// Evaluated cellwise as `Σ p(a,b,c) log p(a,b,c) p(c) / (p(a,c) p(b,c))`,
    /// which returns an exact zero whenever the ratio is exactly one (e.g.
    /// `A` a copy of `C`).
    pub fn cond_mutual_info(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<T> {
        disjoint(&[a, b, c])?;
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidParameter(
                "mutual information needs nonempty axis sets".into(),
            ));
        }
        let size = |set: &[&str]| -> Result<usize> {
            set.iter()
                .map(|n| self.axis(n).map(Alphabet::size))
                .product::<Result<usize>>()
        };
        let (sa, sb, sc) = (size(a)?, size(b)?, size(c)?);
        let order: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        let m = self.marginal(&order)?;
        // m is laid out [a][b][c]
        let mut pac = vec![T::zero(); sa * sc];
        let mut pbc = vec![T::zero(); sb * sc];
        for ia in 0..sa {
            for ib in 0..sb {
                for ic in 0..sc {
                    let p = m.table[(ia * sb + ib) * sc + ic];
                    pac[ia * sc + ic] = pac[ia * sc + ic] + p;
                    pbc[ib * sc + ic] = pbc[ib * sc + ic] + p;
                }
            }
        }
        let mut pc = vec![T::zero(); sc];
        for ia in 0..sa {
            for ic in 0..sc {
                pc[ic] = pc[ic] + pac[ia * sc + ic];
            }
        }
        let zero = T::lit(ZERO_MASS);
        let mut acc = T::zero();
        for ia in 0..sa {
            for ib in 0..sb {
                for ic in 0..sc {
                    let p = m.table[(ia * sb + ib) * sc + ic];
                    if p <= zero {
                        continue;
                    }
                    let num = p * pc[ic];
                    let den = pac[ia * sc + ic] * pbc[ib * sc + ic];
                    acc = acc + p * (num / den).log2();
                }
            }
        }
        Ok(acc)
    }

    /// Conditional law `P(out | given)` as a stochastic matrix over the
    /// product alphabets; rows with zero mass are filled uniformly.
    pub fn conditional(&self, out: &[&str], given: &[&str]) -> Result<CondDist<T>> {
        disjoint(&[out, given])?;
        let order: Vec<&str> = given.iter().chain(out).copied().collect();
        let m = self.marginal(&order)?;
        let gin = product_alphabet(&m.axes[..given.len()], "given");
        let gout = product_alphabet(&m.axes[given.len()..], "out");
        let k = gout.size();
        let mut rows = Vec::with_capacity(gin.size());
        for block in m.table.chunks(k) {
            let s: T = block.iter().copied().sum();
            if s <= T::lit(ZERO_MASS) {
                rows.push(vec![T::one() / T::lit(k as f64); k]);
            } else {
                let mut r: Vec<T> = block.iter().map(|&p| p / s).collect();
                // absorb rounding so the row validates at the strict tolerance
                let t: T = r.iter().copied().sum();
                let imax = (0..k).fold(0, |b, i| if r[i] > r[b] { i } else { b });
                r[imax] = r[imax] + (T::one() - t);
                rows.push(r);
            }
        }
        CondDist::new(gin, gout, rows)
    }

    /// Largest absolute cellwise difference after aligning axis order.
    pub fn max_abs_diff(&self, other: &JointDist<T>) -> Result<T> {
        let names = self.axis_names();
        let o = other.reorder(&names)?;
        for (a, b) in self.axes.iter().zip(&o.axes) {
            if !a.same_symbols(b) {
                return Err(Error::AlphabetMismatch(format!("axis `{}` differs", a.name())));
            }
        }
        Ok(self
            .table
            .iter()
            .zip(&o.table)
            .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs())))
    }

    /// Total mass, for diagnostics.
    pub fn mass(&self) -> T {
        self.table.iter().copied().sum()
    }

    /// Validates mass at the strict tolerance.
    pub fn validate(&self) -> Result<()> {
        let total = self.mass();
        if (total - T::one()).abs() > T::tol(MASS_TOL) {
            return Err(Error::InvalidDistribution(format!("joint mass is {total}")));
        }
        Ok(())
    }
}

fn product_alphabet(axes: &[Alphabet], fallback: &str) -> Alphabet {
    match axes {
        [] => Alphabet::indexed(fallback, 1).expect("unit alphabet"),
        [a] => a.clone(),
        [a, rest @ ..] => {
            let tail = product_alphabet(rest, fallback);
            Alphabet::product(format!("{}{}", a.name(), tail.name()), a, &tail)
        }
    }
}

fn advance(counter: &mut [usize], shape: &[usize]) {
    for ax in (0..shape.len()).rev() {
        counter[ax] += 1;
        if counter[ax] < shape[ax] {
            return;
        }
        counter[ax] = 0;
    }
}

fn disjoint(sets: &[&[&str]]) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        for n in *set {
            if !seen.insert(*n) {
                return Err(Error::OverlappingAxes(n.to_string()));
            }
        }
    }
    Ok(())
}

/// One stage of a chain: the axis feeding `channel`; the new axis takes the
/// channel's output name.
#[derive(Debug, Clone, Copy)]
pub struct Link<'a, T> {
    pub parent: &'a str,
    pub channel: &'a CondDist<T>,
}

/// Builds the joint of a chain (or tree) of channels hung off `root`.
///
/// Axes appear in declaration order: root first, then each link's output.
pub fn compose<T: Scalar>(root: &Dist<T>, links: &[Link<'_, T>]) -> Result<JointDist<T>> {
    let mut j = JointDist::from_dist(root);
    for l in links {
        j = j.extend(l.parent, l.channel, l.channel.output().name())?;
    }
    Ok(j)
}
