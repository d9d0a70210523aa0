use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mass tolerance for a distribution to count as normalized.
pub const MASS_TOL: f64 = 1e-12;

/// A named finite alphabet with distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    name: String,
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if labels.is_empty() {
            return Err(Error::InvalidAlphabet {
                name,
                reason: "size must be at least 1".into(),
            });
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidAlphabet {
                    name,
                    reason: format!("duplicate label `{l}`"),
                });
            }
        }
        Ok(Self { name, labels })
    }

    /// Alphabet with labels `0..size`.
    pub fn indexed(name: impl Into<String>, size: usize) -> Result<Self> {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::indexed(name, 2).expect("binary alphabet")
    }

    /// Cartesian product `a × b`, first factor major, labels joined by `,`.
    pub fn product(name: impl Into<String>, a: &Alphabet, b: &Alphabet) -> Self {
        let mut labels = Vec::with_capacity(a.size() * b.size());
        for la in &a.labels {
            for lb in &b.labels {
                labels.push(format!("{la},{lb}"));
            }
        }
        Self {
            name: name.into(),
            labels,
        }
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            labels: self.labels.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Same size and labels; names are ignored.
    pub fn same_symbols(&self, other: &Alphabet) -> bool {
        self.labels == other.labels
    }
}

pub(crate) fn check_row<T: Scalar>(row: &[T], what: &str) -> Result<()> {
    let mut total = T::zero();
    for (i, &p) in row.iter().enumerate() {
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} is {p}"
            )));
        }
        total = total + p;
    }
    if (total - T::one()).abs() > T::tol(MASS_TOL) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}"
        )));
    }
    Ok(())
}

/// Probability vector over an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<T> {
    alphabet: Alphabet,
    probs: Vec<T>,
}

impl<T: Scalar> Dist<T> {
    /// Validates nonnegativity and unit mass. Never renormalizes.
    pub fn new(alphabet: Alphabet, probs: Vec<T>) -> Result<Self> {
        if probs.len() != alphabet.size() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for alphabet `{}` of size {}",
                probs.len(),
                alphabet.name(),
                alphabet.size()
            )));
        }
        check_row(&probs, alphabet.name())?;
        Ok(Self { alphabet, probs })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        let p = T::one() / T::lit(n as f64);
        Self {
            alphabet,
            probs: vec![p; n],
        }
    }

    pub fn point_mass(alphabet: Alphabet, at: usize) -> Result<Self> {
        let mut probs = vec![T::zero(); alphabet.size()];
        *probs.get_mut(at).ok_or_else(|| {
            Error::InvalidParameter(format!("point mass at {at} outside `{}`", alphabet.name()))
        })? = T::one();
        Ok(Self { alphabet, probs })
    }

    /// Bernoulli(`p`) on `{0, 1}`.
    pub fn bernoulli(name: impl Into<String>, p: T) -> Result<Self> {
        Self::new(Alphabet::binary(name), vec![T::one() - p, p])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            alphabet: self.alphabet.renamed(name),
            probs: self.probs.clone(),
        }
    }
}

/// Stochastic matrix `P(out | in)`, one row per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CondDist<T> {
    input: Alphabet,
    output: Alphabet,
    table: Vec<T>,
}

impl<T: Scalar> CondDist<T> {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.len() != input.size() {
            return Err(Error::InvalidDistribution(format!(
                "{} rows for input alphabet `{}` of size {}",
                rows.len(),
                input.name(),
                input.size()
            )));
        }
        let mut table = Vec::with_capacity(input.size() * output.size());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != output.size() {
                return Err(Error::InvalidDistribution(format!(
                    "row {i} of P({}|{}) has {} entries, expected {}",
                    output.name(),
                    input.name(),
                    row.len(),
                    output.size()
                )));
            }
            check_row(&row, &format!("row {i} of P({}|{})", output.name(), input.name()))?;
            table.extend(row);
        }
        Ok(Self {
            input,
            output,
            table,
        })
    }

    /// Row-major flat table.
    pub fn from_flat(input: Alphabet, output: Alphabet, table: Vec<T>) -> Result<Self> {
        let k = output.size();
        if table.len() != input.size() * k {
            return Err(Error::InvalidDistribution(format!(
                "flat table has {} entries, expected {}",
                table.len(),
                input.size() * k
            )));
        }
        Self::new(input, output, table.chunks(k).map(<[T]>::to_vec).collect())
    }

    /// Every input maps to the same output law.
    pub fn constant(input: Alphabet, row: &Dist<T>) -> Self {
        let table = (0..input.size())
            .flat_map(|_| row.probs().iter().copied())
            .collect();
        Self {
            input,
            output: row.alphabet().clone(),
            table,
        }
    }

    /// Noiseless channel `out = map(in)`.
    pub fn deterministic(
        input: Alphabet,
        output: Alphabet,
        map: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let k = output.size();
        let mut table = vec![T::zero(); input.size() * k];
        for i in 0..input.size() {
            let o = map(i);
            if o >= k {
                return Err(Error::InvalidParameter(format!(
                    "deterministic map sends {i} to {o}, outside `{}`",
                    output.name()
                )));
            }
            table[i * k + o] = T::one();
        }
        Ok(Self {
            input,
            output,
            table,
        })
    }

    /// Identity channel onto a copy of `input` named `output_name`.
    pub fn identity(input: &Alphabet, output_name: impl Into<String>) -> Self {
        let output = input.renamed(output_name);
        Self::deterministic(input.clone(), output, |i| i).expect("identity in range")
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(input_name: impl Into<String>, output_name: impl Into<String>, p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::Domain {
                what: "BSC crossover",
                value: p.as_f64(),
            });
        }
        let q = T::one() - p;
        Self::new(
            Alphabet::binary(input_name),
            Alphabet::binary(output_name),
            vec![vec![q, p], vec![p, q]],
        )
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn row(&self, i: usize) -> &[T] {
        let k = self.output.size();
        &self.table[i * k..(i + 1) * k]
    }

    pub fn get(&self, i: usize, o: usize) -> T {
        self.table[i * self.output.size() + o]
    }

    pub fn flat(&self) -> &[T] {
        &self.table
    }

    pub fn with_names(&self, input: impl Into<String>, output: impl Into<String>) -> Self {
        Self {
            input: self.input.renamed(input),
            output: self.output.renamed(output),
            table: self.table.clone(),
        }
    }

    /// Cascade `self` then `next`: `P(c|a) = Σ_b P(b|a) P(c|b)`.
    pub fn then(&self, next: &CondDist<T>) -> Result<Self> {
        if !self.output.same_symbols(&next.input) {
            return Err(Error::AlphabetMismatch(format!(
                "cannot cascade P({}|{}) into P({}|{})",
                self.output.name(),
                self.input.name(),
                next.output.name(),
                next.input.name()
            )));
        }
        let k = next.output.size();
        let mut table = vec![T::zero(); self.input.size() * k];
        for a in 0..self.input.size() {
            for (b, &pb) in self.row(a).iter().enumerate() {
                for (c, &pc) in next.row(b).iter().enumerate() {
                    table[a * k + c] = table[a * k + c] + pb * pc;
                }
            }
        }
        Ok(Self {
            input: self.input.clone(),
            output: next.output.clone(),
            table,
        })
    }

    /// Output law when the input is distributed as `p`.
    pub fn push_forward(&self, p: &Dist<T>) -> Result<Dist<T>> {
        if !p.alphabet().same_symbols(&self.input) {
            return Err(Error::AlphabetMismatch(format!(
                "P({}) does not feed P({}|{})",
                p.alphabet().name(),
                self.output.name(),
                self.input.name()
            )));
        }
        let mut out = vec![T::zero(); self.output.size()];
        for (i, &pi) in p.probs().iter().enumerate() {
            for (o, &po) in self.row(i).iter().enumerate() {
                out[o] = out[o] + pi * po;
            }
        }
        Ok(Dist {
            alphabet: self.output.clone(),
            probs: out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert!(Alphabet::new("A", vec![]).is_err());
        assert!(Alphabet::new("A", vec!["a".into(), "a".into()]).is_err());
        assert_eq!(Alphabet::indexed("A", 3).unwrap().size(), 3);
    }

    #[test]
    fn dist_refuses_to_renormalize() {
        let a = Alphabet::binary("X");
        assert!(Dist::new(a.clone(), vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(Dist::new(a.clone(), vec![-0.1, 1.1]).is_err());
        assert!(Dist::new(a, vec![0.25f64, 0.75]).is_ok());
    }

    #[test]
    fn bsc_cascade_matches_convolution() {
        let a = CondDist::<f64>::bsc("X", "Y", 0.1).unwrap();
        let b = CondDist::<f64>::bsc("Y", "Z", 0.06).unwrap();
        let c = a.then(&b).unwrap();
        assert!((c.get(0, 1) - 0.148).abs() < 1e-15);
    }

    #[test]
    fn product_alphabet_is_row_major() {
        let a = Alphabet::binary("Y");
        let b = Alphabet::indexed("Z", 3).unwrap();
        let p = Alphabet::product("YZ", &a, &b);
        assert_eq!(p.size(), 6);
        assert_eq!(p.label(4), "1,1");
    }
}
