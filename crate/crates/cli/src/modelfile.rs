//! TOML model files.
//!
//! ```toml
//! p_x = ["0.5", "0.5"]
//! p_xtilde_given_x = [["0.94", "0.06"], ["0.06", "0.94"]]
//! # columns run over (y, z) pairs, y-major
//! p_yz_given_x = [["0.6375", "0.2125", "0.0375", "0.1125"], ["0.1125", "0.0375", "0.2125", "0.6375"]]
//! function_table = [["0", "0"], ["1", "1"]]   # f(x̃, y) as labels of `f`
//! distortion_table = [["0", "1"], ["1", "0"]] # optional, Hamming by default
//!
//! [alphabets]
//! x = ["0", "1"]
//! xtilde = ["0", "1"]
//! y = ["0", "1"]
//! z = ["0", "1"]
//! f = ["0", "1"]
//!
//! [[aux]]                # optional; default U = X̃, V constant
//! weight = "1"
//! p_u_given_xtilde = [["1", "0"], ["0", "1"]]
//! p_v_given_u = [["1"], ["1"]]
//!
//! [[multi]]              # optional further arms j = 2, 3, ...
//! alphabets = { xtilde = ["0", "1"], y = ["0", "1"], z = ["0", "1"], f = ["0", "1"] }
//! p_xtilde_given_x = ...
//! p_yz_given_x = ...
//! function_table = ...
//! ```
//!
//! Probabilities are decimal strings. A row whose sum is within `1e-9` of one
//! is rescaled to sum to one exactly; anything further off is rejected with
//! its line and column.

use std::ops::Range;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use toml::Spanned;

use remotefc_core::model::{axis, Arm, DistortionSpec, FunctionSpec, MultiModel, SourceModel};
use remotefc_core::multiregion::MultiAuxSystem;
use remotefc_core::probcore::{Alphabet, CondDist, Dist};
use remotefc_core::region::{AuxChannels, AuxSystem};

pub const ROW_SUM_TOL: f64 = 1e-9;

type Entry = Spanned<String>;
type Row = Spanned<Vec<Entry>>;
type Matrix = Spanned<Vec<Row>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlphabets {
    x: Vec<String>,
    xtilde: Vec<String>,
    y: Vec<String>,
    z: Vec<String>,
    f: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArmAlphabets {
    xtilde: Vec<String>,
    y: Vec<String>,
    z: Vec<String>,
    f: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAux {
    weight: Option<Entry>,
    p_u_given_xtilde: Matrix,
    p_v_given_u: Option<Matrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    alphabets: RawArmAlphabets,
    p_xtilde_given_x: Matrix,
    p_yz_given_x: Matrix,
    function_table: Option<Matrix>,
    distortion_table: Option<Matrix>,
    p_u_given_xtilde: Option<Matrix>,
    p_v_given_u: Option<Matrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alphabets: RawAlphabets,
    p_x: Row,
    p_xtilde_given_x: Matrix,
    p_yz_given_x: Matrix,
    function_table: Option<Matrix>,
    distortion_table: Option<Matrix>,
    aux: Option<Vec<RawAux>>,
    multi: Option<Vec<RawArm>>,
}

/// Everything a model file declares, validated.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: SourceModel<f64>,
    pub f: FunctionSpec,
    pub d: DistortionSpec<f64>,
    pub aux: AuxSystem<f64>,
    /// Arm 1 is the top-level model.
    pub arms: Vec<Arm<f64>>,
    /// Inner-bound channels per arm; arm 1 takes the first `aux` entry.
    pub arm_aux: Vec<AuxChannels<f64>>,
    /// Rows rescaled onto the simplex, as `what (line:col)`.
    pub rescaled: Vec<String>,
}

impl ModelFile {
    pub fn j(&self) -> usize {
        self.arms.len()
    }

    /// The first `j` arms.
    pub fn multi(&self, j: usize) -> Result<(MultiModel<f64>, MultiAuxSystem<f64>)> {
        if j == 0 || j > self.arms.len() {
            bail!("--J {j} outside 1..={} (arms declared by the model file)", self.arms.len());
        }
        let m = MultiModel::new(self.model.p_x().clone(), self.arms[..j].to_vec())?;
        let a = MultiAuxSystem::single(self.arm_aux[..j].to_vec())?;
        Ok((m, a))
    }
}

struct Ctx<'a> {
    path: &'a str,
    src: &'a str,
    rescaled: Vec<String>,
}

impl Ctx<'_> {
    fn at(&self, span: Range<usize>) -> String {
        let before = &self.src[..span.start.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        format!("{}:{line}:{col}", self.path)
    }

    fn number(&self, e: &Entry, what: &str) -> Result<f64> {
        let v: f64 = e
            .get_ref()
            .trim()
            .parse()
            .map_err(|_| anyhow!("{}: {what}: `{}` is not a decimal number", self.at(e.span()), e.get_ref()))?;
        if !v.is_finite() {
            bail!("{}: {what}: `{}` is not finite", self.at(e.span()), e.get_ref());
        }
        Ok(v)
    }

    fn prob_row(&mut self, row: &Row, width: usize, what: &str) -> Result<Vec<f64>> {
        if row.get_ref().len() != width {
            bail!(
                "{}: {what} has {} entries, expected {width}",
                self.at(row.span()),
                row.get_ref().len()
            );
        }
        let mut v = Vec::with_capacity(width);
        for e in row.get_ref() {
            let p = self.number(e, what)?;
            if !(0.0..=1.0).contains(&p) {
                bail!("{}: {what}: probability {p} outside [0, 1]", self.at(e.span()));
            }
            v.push(p);
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            bail!("{}: {what} sums to {sum}, not 1", self.at(row.span()));
        }
        if sum != 1.0 {
            v.iter_mut().for_each(|p| *p /= sum);
            self.rescaled.push(format!("{what} ({})", self.at(row.span())));
        }
        Ok(v)
    }

    fn stochastic(&mut self, m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        if m.get_ref().len() != rows {
            bail!("{}: {what} has {} rows, expected {rows}", self.at(m.span()), m.get_ref().len());
        }
        m.get_ref()
            .iter()
            .enumerate()
            .map(|(i, r)| self.prob_row(r, cols, &format!("{what} row {}", i + 1)))
            .collect()
    }

    /// Row-stochastic matrix whose width is read from the first row.
    fn stochastic_any(&mut self, m: &Matrix, rows: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        let cols = m.get_ref().first().map_or(0, |r| r.get_ref().len());
        if cols == 0 {
            bail!("{}: {what} is empty", self.at(m.span()));
        }
        self.stochastic(m, rows, cols, what)
    }

    fn function(&self, m: &Matrix, xt: usize, y: usize, out: &Alphabet) -> Result<FunctionSpec> {
        if m.get_ref().len() != xt {
            bail!("{}: function_table has {} rows, expected |X̃| = {xt}", self.at(m.span()), m.get_ref().len());
        }
        let mut rows = Vec::with_capacity(xt);
        for r in m.get_ref() {
            if r.get_ref().len() != y {
                bail!("{}: function_table row has {} entries, expected |Y| = {y}", self.at(r.span()), r.get_ref().len());
            }
            let row = r
                .get_ref()
                .iter()
                .map(|e| {
                    out.index_of(e.get_ref()).ok_or_else(|| {
                        anyhow!("{}: `{}` is not a symbol of alphabet f", self.at(e.span()), e.get_ref())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(FunctionSpec::new(out.clone(), rows)?)
    }

    fn distortion(&self, m: &Matrix, size: usize) -> Result<DistortionSpec<f64>> {
        if m.get_ref().len() != size {
            bail!("{}: distortion_table has {} rows, expected |F| = {size}", self.at(m.span()), m.get_ref().len());
        }
        let rows = m
            .get_ref()
            .iter()
            .map(|r| {
                if r.get_ref().len() != size {
                    bail!("{}: distortion_table row has {} entries, expected {size}", self.at(r.span()), r.get_ref().len());
                }
                r.get_ref().iter().map(|e| self.number(e, "distortion_table")).collect()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        DistortionSpec::new(rows).with_context(|| self.at(m.span()))
    }

    fn aux_channels(&mut self, u: &Matrix, v: Option<&Matrix>, xt: &Alphabet, tag: &str) -> Result<AuxChannels<f64>> {
        let rows = self.stochastic_any(u, xt.size(), &format!("{tag}p_u_given_xtilde"))?;
        let ua = Alphabet::indexed(axis::U, rows[0].len())?;
        let u_given_xt = CondDist::new(xt.clone(), ua.clone(), rows)?;
        Ok(match v {
            None => AuxChannels::with_constant_v(u_given_xt),
            Some(v) => {
                let rows = self.stochastic_any(v, ua.size(), &format!("{tag}p_v_given_u"))?;
                let va = Alphabet::indexed(axis::V, rows[0].len())?;
                AuxChannels::new(u_given_xt, CondDist::new(ua, va, rows)?)?
            }
        })
    }
}

struct ArmParts {
    xt_given_x: CondDist<f64>,
    y: Alphabet,
    z: Alphabet,
    yz_given_x: CondDist<f64>,
    f: FunctionSpec,
    d: DistortionSpec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn arm_parts(
    cx: &mut Ctx<'_>,
    x: &Alphabet,
    names: (&[String], &[String], &[String], Option<&[String]>),
    p_xt: &Matrix,
    p_yz: &Matrix,
    ftab: Option<&Matrix>,
    dtab: Option<&Matrix>,
    tag: &str,
) -> Result<ArmParts> {
    let xt = Alphabet::new(axis::XT, names.0.to_vec())?;
    let y = Alphabet::new(axis::Y, names.1.to_vec())?;
    let z = Alphabet::new(axis::Z, names.2.to_vec())?;
    let xt_given_x = CondDist::new(
        x.clone(),
        xt.clone(),
        cx.stochastic(p_xt, x.size(), xt.size(), &format!("{tag}p_xtilde_given_x"))?,
    )?;
    let yz_given_x = CondDist::new(
        x.clone(),
        Alphabet::product("YZ", &y, &z),
        cx.stochastic(p_yz, x.size(), y.size() * z.size(), &format!("{tag}p_yz_given_x"))?,
    )?;
    let f = match (ftab, names.3) {
        (Some(t), Some(labels)) => cx.function(t, xt.size(), y.size(), &Alphabet::new(axis::F, labels.to_vec())?)?,
        (Some(t), None) => bail!("{}: function_table needs alphabet f", cx.at(t.span())),
        (None, _) => FunctionSpec::identity_xt(&xt, y.size()),
    };
    let d = match dtab {
        Some(t) => cx.distortion(t, f.output().size())?,
        None => DistortionSpec::hamming(f.output().size()),
    };
    Ok(ArmParts {
        xt_given_x,
        y,
        z,
        yz_given_x,
        f,
        d,
    })
}

pub fn parse(path: &str, src: &str) -> Result<ModelFile> {
    let raw: RawModel = toml::from_str(src).map_err(|e| anyhow!("{path}: {e}"))?;
    let mut cx = Ctx {
        path,
        src,
        rescaled: Vec::new(),
    };
    let x = Alphabet::new(axis::X, raw.alphabets.x.clone())?;
    let p_x = Dist::new(x.clone(), cx.prob_row(&raw.p_x, x.size(), "p_x")?)?;
    let a = &raw.alphabets;
    let top = arm_parts(
        &mut cx,
        &x,
        (&a.xtilde, &a.y, &a.z, a.f.as_deref()),
        &raw.p_xtilde_given_x,
        &raw.p_yz_given_x,
        raw.function_table.as_ref(),
        raw.distortion_table.as_ref(),
        "",
    )?;
    let model = SourceModel::new(
        p_x.clone(),
        top.xt_given_x.clone(),
        top.y.clone(),
        top.z.clone(),
        top.yz_given_x.clone(),
    )?;
    let xt = model.xt_alphabet().clone();

    let aux = match raw.aux.as_deref() {
        None | Some([]) => AuxSystem::single(AuxChannels::identity(&xt)),
        Some(list) => {
            let mut weights = Vec::new();
            let mut per_q = Vec::new();
            for (q, e) in list.iter().enumerate() {
                let tag = format!("aux[{}].", q + 1);
                weights.push(match &e.weight {
                    Some(w) => cx.number(w, &format!("{tag}weight"))?,
                    None if list.len() == 1 => 1.0,
                    None => bail!("{path}: {tag}weight is required when several aux entries are given"),
                });
                per_q.push(cx.aux_channels(&e.p_u_given_xtilde, e.p_v_given_u.as_ref(), &xt, &tag)?);
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL || weights.iter().any(|&w| w < 0.0) {
                bail!("{path}: aux weights {weights:?} are not a distribution");
            }
            let weights = weights.iter().map(|w| w / sum).collect();
            AuxSystem::new(Dist::new(Alphabet::indexed(axis::Q, list.len())?, weights)?, per_q)?
        }
    };

    let mut arms = vec![Arm {
        xt_given_x: top.xt_given_x,
        y: top.y,
        z: top.z,
        yz_given_x: top.yz_given_x,
        f: top.f.clone(),
        d: top.d.clone(),
    }];
    let mut arm_aux = vec![aux.per_q()[0].clone()];
    for (k, r) in raw.multi.iter().flatten().enumerate() {
        let tag = format!("multi[{}].", k + 1);
        let a = &r.alphabets;
        let parts = arm_parts(
            &mut cx,
            &x,
            (&a.xtilde, &a.y, &a.z, a.f.as_deref()),
            &r.p_xtilde_given_x,
            &r.p_yz_given_x,
            r.function_table.as_ref(),
            r.distortion_table.as_ref(),
            &tag,
        )?;
        let xt = parts.xt_given_x.output().clone();
        arm_aux.push(match &r.p_u_given_xtilde {
            Some(u) => cx.aux_channels(u, r.p_v_given_u.as_ref(), &xt, &tag)?,
            None => AuxChannels::identity(&xt),
        });
        arms.push(Arm {
            xt_given_x: parts.xt_given_x,
            y: parts.y,
            z: parts.z,
            yz_given_x: parts.yz_given_x,
            f: parts.f,
            d: parts.d,
        });
    }
    Ok(ModelFile {
        model,
        f: top.f,
        d: top.d,
        aux,
        arms,
        arm_aux,
        rescaled: cx.rescaled,
    })
}

pub fn load(path: &Path) -> Result<ModelFile> {
    let src = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&path.display().to_string(), &src)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BINARY: &str = include_str!("../../../models/binary.model");

    #[test]
    fn parses_example() {
        let m = parse("binary.model", BINARY).unwrap();
        assert_eq!(m.model.xt_alphabet().size(), 2);
        assert_eq!(m.j(), 1);
        assert!(m.rescaled.is_empty());
    }

    #[test]
    fn reports_line_and_column() {
        let bad = BINARY.replacen("\"0.5\", \"0.5\"", "\"0.5\", \"0.4\"", 1);
        let e = parse("m", &bad).unwrap_err().to_string();
        assert!(e.starts_with("m:1:7: p_x sums to"), "{e}");
        let bad = BINARY.replacen("\"0.5\", \"0.5\"", "\"0.5\", \"half\"", 1);
        let e = parse("m", &bad).unwrap_err().to_string();
        assert!(e.starts_with("m:1:15:"), "{e}");
        let e = parse("m", "p_x = [").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn near_stochastic_rows_are_rescaled() {
        let ok = BINARY.replacen("\"0.5\", \"0.5\"", "\"0.5\", \"0.5000000001\"", 1);
        let m = parse("m", &ok).unwrap();
        assert_eq!(m.rescaled.len(), 1);
        assert_eq!(m.model.p_x().probs().iter().sum::<f64>(), 1.0);
    }
}
