use std::path::Path;

use anyhow::{bail, Context, Result};

use remotefc_core::bottleneck::{self, SymmetricExample};
use remotefc_core::model::{self, axis, DistortionSpec, FunctionSpec};
use remotefc_core::multiregion::{eval_inner_mf, optimal_g_mf};
use remotefc_core::osrbsim::{self, LeakageRequest, SimConfig};
use remotefc_core::region::{
    self, aux_joint, AuxSystem, Coord, Mode, Pin, Problem, RateTuple, SearchBudget, Sweep,
};

use crate::modelfile::{self, ModelFile};
use crate::output::{emit, num, Meta, Table};
use crate::{Cli, Command, LeakageArg};

/// Human-readable text: stdout when data goes to a file, stderr otherwise.
struct Say(bool);

impl Say {
    fn line(&self, s: impl AsRef<str>) {
        if self.0 {
            println!("{}", s.as_ref());
        } else {
            eprintln!("{}", s.as_ref());
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.output.as_deref();
    let say = Say(out.is_some());
    let mut meta = Meta::default();
    meta.add("command", format!("{:?}", cli.command));
    match &cli.command {
        Command::Validate { model } => validate(model, out, &say, meta),
        Command::RegionEval { model, mode } => region_eval(model, *mode, out, meta),
        Command::Boundary {
            model,
            mode,
            minimize,
            pin,
            grid,
            lo,
            hi,
            restarts,
            iterations,
            u_size,
            v_size,
            q_size,
            seed,
        } => {
            meta.add("seed", seed);
            let budget = SearchBudget {
                restarts: *restarts,
                iterations: *iterations,
                u_size: *u_size,
                v_size: *v_size,
                q_size: *q_size,
                seed: *seed,
                ..SearchBudget::default()
            };
            boundary(model, *mode, *minimize, pin, *grid, (*lo, *hi), budget, out, meta)
        }
        Command::IbCurve {
            p,
            qdec,
            m,
            grid,
            z_crossover,
            with_d,
        } => ib_curve(*p, *qdec, m, *grid, *z_crossover, *with_d, out, &say, meta),
        Command::Fig3 { p, qdec, m, grid } => fig3(*p, *qdec, m, *grid, out, &say, meta),
        Command::MfEval { model, j, mode } => mf_eval(model, *j, *mode, out, meta),
        Command::Simulate {
            model,
            n,
            trials,
            eps,
            seed,
            codes,
            leakage,
            mode,
        } => {
            meta.add("seed", seed);
            let leakage = match leakage {
                LeakageArg::Auto => LeakageRequest::Auto,
                LeakageArg::Estimate => LeakageRequest::Estimate,
                LeakageArg::Off => LeakageRequest::Off,
            };
            let cfg = SimConfig {
                n: 0,
                trials: *trials,
                seed: *seed,
                codes: *codes,
                leakage,
            };
            simulate(model, n, *eps, cfg, *mode, out, &say, meta)
        }
    }
}

fn load(path: &Path, meta: &mut Meta) -> Result<ModelFile> {
    let m = modelfile::load(path)?;
    for r in &m.rescaled {
        eprintln!("warning: rescaled {r}");
        meta.add("rescaled", r);
    }
    Ok(m)
}

fn tuple_cells(t: &RateTuple<f64>, with_d: bool) -> Vec<String> {
    let mut v: Vec<String> = t.rates().iter().map(|&r| num(r)).collect();
    if with_d {
        v.push(t.d.map(num).unwrap_or_default());
    }
    v
}

fn rate_header<'a>(lead: &[&'a str], with_d: bool, tail: &[&'a str]) -> Vec<&'a str> {
    let mut h = lead.to_vec();
    h.extend(["R_s", "R_w", "R_dec", "R_eve"]);
    if with_d {
        h.push("D");
    }
    h.extend(tail);
    h
}

fn validate(path: &Path, out: Option<&Path>, say: &Say, mut meta: Meta) -> Result<()> {
    let mf = load(path, &mut meta)?;
    let m = &mf.model;
    let mut t = Table::new(&["check", "value"]);
    let mut row = |k: &str, v: String| {
        say.line(format!("{k}: {v}"));
        t.push(vec![k.into(), v]);
    };
    row(
        "alphabet_sizes",
        format!(
            "|X|={} |X~|={} |Y|={} |Z|={} |F|={}",
            m.x_alphabet().size(),
            m.xt_alphabet().size(),
            m.y_alphabet().size(),
            m.z_alphabet().size(),
            mf.f.output().size()
        ),
    );
    row("arms", mf.j().to_string());
    for (k, arm) in mf.arms.iter().enumerate() {
        let sm = arm.source_model(m.p_x())?;
        let tag = if mf.j() > 1 { format!("arm{}_", k + 1) } else { String::new() };
        row(
            &format!("{tag}physically_degraded_eve"),
            model::is_physically_degraded_eve(&sm).to_string(),
        );
        row(&format!("{tag}degradation_residual"), num(model::degradation_error(&sm)));
        let aux = &mf.arm_aux[k];
        let h = model::admissibility_residual(&sm, &aux.u_given_xt, &arm.f)?;
        row(&format!("{tag}aux_admissible"), model::is_admissible(&sm, &aux.u_given_xt, &arm.f)?.to_string());
        row(&format!("{tag}aux_residual_H(F|U,Y)"), num(h));
        let constant = region::AuxChannels::constant(sm.xt_alphabet());
        row(
            &format!("{tag}constant_u_admissible"),
            model::is_admissible(&sm, &constant.u_given_xt, &arm.f)?.to_string(),
        );
    }
    for (q, ch) in mf.aux.per_q().iter().enumerate().skip(1) {
        row(
            &format!("aux_q{}_admissible", q + 1),
            model::is_admissible(m, &ch.u_given_xt, &mf.f)?.to_string(),
        );
    }
    row("rescaled_rows", mf.rescaled.len().to_string());
    emit(out, &t, &meta)
}

fn region_eval(path: &Path, mode: Mode, out: Option<&Path>, mut meta: Meta) -> Result<()> {
    let mf = load(path, &mut meta)?;
    meta.add("mode", mode);
    let lossy = mode == Mode::Lossy;
    let corner = match mode {
        Mode::Lossless => region::eval_lossless_corner(&mf.model, &mf.aux, &mf.f)?,
        Mode::Lossy => {
            let g = region::optimal_g(&mf.model, &mf.aux, &mf.f, &mf.d)?;
            region::eval_lossy_corner(&mf.model, &mf.aux, &mf.f, &g, &mf.d)?
        }
    };
    let mut t = Table::new(&rate_header(&["system"], lossy, &[]));
    let mut r = vec!["corner".to_string()];
    r.extend(tuple_cells(&corner, lossy));
    t.push(r);
    if mf.aux.per_q().len() > 1 {
        for (q, tq) in region::per_q_report(&mf.model, &mf.aux)?.iter().enumerate() {
            let mut r = vec![format!("q{}", q + 1)];
            r.extend(tuple_cells(tq, lossy));
            t.push(r);
        }
    }
    emit(out, &t, &meta)
}

#[allow(clippy::too_many_arguments)]
fn boundary(
    path: &Path,
    mode: Mode,
    minimize: Coord,
    pin: &str,
    grid: usize,
    (lo, hi): (Option<f64>, Option<f64>),
    budget: SearchBudget<f64>,
    out: Option<&Path>,
    mut meta: Meta,
) -> Result<()> {
    let mf = load(path, &mut meta)?;
    let pin = match pin {
        "source_info" | "i_u_x" => Pin::SourceInfoAtLeast,
        other => Pin::AtMost(other.parse()?),
    };
    if grid == 0 {
        bail!("--grid must be at least 1");
    }
    let identity = AuxSystem::single(region::AuxChannels::identity(mf.model.xt_alphabet()));
    let hi = match hi {
        Some(h) => h,
        None => match pin {
            Pin::SourceInfoAtLeast => aux_joint(&mf.model, &identity)?.mutual_info(&[axis::U], &[axis::X])?,
            Pin::AtMost(Coord::Distortion) => 1.0,
            Pin::AtMost(c) => region::eval_rates(&mf.model, &identity)?.coord(c).unwrap_or(0.0),
        },
    };
    let lo = lo.unwrap_or(0.0);
    let levels: Vec<f64> = (0..grid)
        .map(|i| if grid == 1 { hi } else { lo + (hi - lo) * i as f64 / (grid - 1) as f64 })
        .collect();
    let d = (mode == Mode::Lossy).then_some(&mf.d);
    let problem = Problem {
        model: &mf.model,
        f: &mf.f,
        d,
        mode,
    };
    let sweep = Sweep {
        minimize,
        pin,
        grid: levels,
    };
    let points = region::trace_boundary(&problem, &sweep, &budget)?;
    let lossy = mode == Mode::Lossy;
    let mut t = Table::new(&rate_header(&["level"], lossy, &["I_U_X", "objective"]));
    for pt in &points {
        let mut r = vec![num(pt.level)];
        r.extend(tuple_cells(&pt.tuple, lossy));
        r.push(num(pt.source_info));
        r.push(num(pt.objective));
        t.push(r);
    }
    emit(out, &t, &meta)
}

#[allow(clippy::too_many_arguments)]
fn ib_curve(
    p: f64,
    qdec: f64,
    ms: &[usize],
    grid: usize,
    zc: f64,
    with_d: bool,
    out: Option<&Path>,
    say: &Say,
    meta: Meta,
) -> Result<()> {
    let levels = bottleneck::default_grid(p, grid)?;
    let mut t = Table::new(&rate_header(&["M", "h_x_given_u", "alpha"], with_d, &[]));
    for &m in ms {
        let e = SymmetricExample::new(p, m, qdec)?.with_z_crossover(zc)?;
        let f = FunctionSpec::identity_xt(&remotefc_core::probcore::Alphabet::binary(axis::XT), 1usize << m);
        let curve = bottleneck::ib_curve(&e, &levels, with_d.then_some(&f))?;
        for s in &curve.skipped {
            say.line(format!("M={m}: skipped H(X|U)={}: {}", num(s.h_x_given_u), s.reason));
        }
        for pt in &curve.points {
            let mut r = vec![m.to_string(), num(pt.h_x_given_u), num(pt.alpha)];
            r.extend(tuple_cells(&pt.rates, with_d));
            t.push(r);
        }
    }
    emit(out, &t, &meta)
}

fn fig3(p: f64, qdec: f64, ms: &[usize], grid: usize, out: Option<&Path>, say: &Say, meta: Meta) -> Result<()> {
    let rows = bottleneck::fig3_summary(p, qdec, ms, grid)?;
    let mut t = Table::new(&["M", "max_R_s", "max_R_eve", "decrease_R_s_pct", "decrease_R_eve_pct"]);
    say.line(format!("maxima over H(X|U) (p={p}, q_dec={qdec}, {grid} grid points)"));
    for r in &rows {
        say.line(format!(
            "M={}: max R_s = {:.6}, max R_eve = {:.6}; decrease vs M={}: R_s {:.2}%, R_eve {:.2}%",
            r.m, r.max_r_s, r.max_r_eve, rows[0].m, r.decrease_r_s, r.decrease_r_eve
        ));
        t.push(vec![
            r.m.to_string(),
            num(r.max_r_s),
            num(r.max_r_eve),
            num(r.decrease_r_s),
            num(r.decrease_r_eve),
        ]);
    }
    emit(out, &t, &meta)
}

fn mf_eval(path: &Path, j: Option<usize>, mode: Mode, out: Option<&Path>, mut meta: Meta) -> Result<()> {
    let mf = load(path, &mut meta)?;
    let (m, a) = mf.multi(j.unwrap_or(mf.j()))?;
    meta.add("J", m.j());
    meta.add("mode", mode);
    let gs = match mode {
        Mode::Lossless => None,
        Mode::Lossy => Some(optimal_g_mf(&m, &a)?),
    };
    let r = eval_inner_mf(&m, &a, mode, gs.as_deref())?;
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["R_s".into(), num(r.r_s)]);
    for (k, v) in r.r_w.iter().enumerate() {
        t.push(vec![format!("R_w_{}", k + 1), num(*v)]);
    }
    t.push(vec!["sum_R_w".into(), num(r.sum_w)]);
    for (k, v) in r.r_dec.iter().enumerate() {
        t.push(vec![format!("R_dec_{}", k + 1), num(*v)]);
    }
    t.push(vec!["R_eve".into(), num(r.r_eve)]);
    for (k, v) in r.d.iter().flatten().enumerate() {
        t.push(vec![format!("D_{}", k + 1), num(*v)]);
    }
    emit(out, &t, &meta)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    path: &Path,
    ns: &[usize],
    eps: f64,
    mut cfg: SimConfig,
    mode: Mode,
    out: Option<&Path>,
    say: &Say,
    mut meta: Meta,
) -> Result<()> {
    let mf = load(path, &mut meta)?;
    if mf.aux.per_q().len() != 1 {
        bail!("the simulator needs a single aux entry (no time sharing)");
    }
    let aux = &mf.aux.per_q()[0];
    let d = match mode {
        Mode::Lossless => DistortionSpec::hamming(mf.f.output().size()),
        Mode::Lossy => mf.d.clone(),
    };
    let g = region::optimal_g(&mf.model, &mf.aux, &mf.f, &d)?;
    if mode == Mode::Lossless && !model::is_admissible(&mf.model, &aux.u_given_xt, &mf.f)? {
        bail!("aux is not admissible for f; use --mode lossy");
    }
    let chosen = osrbsim::default_rates(&mf.model, aux, eps).context("default rates")?;
    for w in &chosen.warnings {
        eprintln!("warning: {w}");
        meta.add("clamped", w);
    }
    let rates = chosen.rates;
    say.line(format!("rates (ε={eps}): {rates}"));
    let mut t = Table::new(&[
        "n",
        "trials",
        "codes",
        "errors",
        "err_prob",
        "half_width",
        "ci_low",
        "ci_high",
        "bins_F_v",
        "bins_W_v",
        "bins_F_u",
        "bins_W_u",
        "leakage_mode",
        "leakage_secrecy",
        "leakage_priv_eve",
        "leakage_priv_dec",
    ]);
    for &n in ns {
        cfg.n = n;
        let rep = osrbsim::run_trials(&mf.model, aux, &mf.f, &g, &rates, &cfg)?;
        let c = rep.counts;
        let (mode_s, l) = match rep.leakage {
            Some(l) => (l.mode.to_string(), [num(l.secrecy), num(l.priv_eve), num(l.priv_dec)]),
            None => ("off".into(), Default::default()),
        };
        let leak = match rep.leakage {
            Some(_) => format!("leakage [{mode_s}] secrecy {} privEve {} privDec {}", l[0], l[1], l[2]),
            None => "leakage off".into(),
        };
        say.line(format!(
            "n={n}: P_err = {:.6} ± {:.6} ({} / {} blocks, {} code(s)); {leak}; encoder: forward sampling",
            rep.err_prob, rep.half_width, rep.errors, rep.trials, rep.codes
        ));
        let [l0, l1, l2] = l;
        t.push(vec![
            n.to_string(),
            rep.trials.to_string(),
            rep.codes.to_string(),
            rep.errors.to_string(),
            num(rep.err_prob),
            num(rep.half_width),
            num(rep.ci_low),
            num(rep.ci_high),
            c.f_v.to_string(),
            c.w_v.to_string(),
            c.f_u.to_string(),
            c.w_u.to_string(),
            mode_s,
            l0,
            l1,
            l2,
        ]);
    }
    emit(out, &t, &meta)
}
