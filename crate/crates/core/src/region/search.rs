//! Multi-start coordinate descent over auxiliary channels.
//!
//! A search point is a set of row-stochastic matrices (`P_Q`, and per `q`
//! `P(U|X̃)` and `P(V|U)`). One iteration sweeps every entry, nudges it by
//! `±step`, projects the row back onto the simplex and keeps the move if the
//! objective drops; a sweep without improvement halves the step.
//!
//! In lossless mode admissibility is enforced structurally rather than by a
//! penalty: two encoder symbols are *compatible* when they never disagree on
//! `f` under a `y` both can co-occur with, and each `u` may only be reached
//! from a clique of compatible symbols. Every point visited is then exactly
//! admissible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    aux_joint, check_distortion, corner_from_joint, expected_distortion, optimal_g_on,
    AuxChannels, AuxSystem, Coord, Mode, ReconstructionFn, RateTuple, MAX_Q,
};
use crate::error::{Error, Result};
use crate::model::{self, axis, DistortionSpec, FunctionSpec, SourceModel};
use crate::probcore::{Alphabet, CondDist, Dist};
use crate::scalar::Scalar;
use crate::seed::child_seed;

/// Slack allowed when comparing an evaluated corner against a target.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
const MIN_STEP: f64 = 1e-10;
const BATCH: usize = 8;
const OUTER_ROUNDS: usize = 30;

/// Search parameters. All randomness derives from `seed`.
#[derive(Debug, Clone)]
pub struct SearchBudget<T> {
    pub restarts: usize,
    pub iterations: usize,
    /// `None` means `|X̃|`.
    pub u_size: Option<usize>,
    pub v_size: usize,
    pub q_size: usize,
    pub seed: u64,
    /// Penalty parameter for pins in boundary sweeps; also weights the pin
    /// violation when ranking restarts.
    pub penalty: T,
    pub step: T,
    /// Extra starting points, tried before the built-in ones.
    pub warm_starts: Vec<AuxSystem<T>>,
}

impl<T: Scalar> Default for SearchBudget<T> {
    fn default() -> Self {
        Self {
            restarts: 64,
            iterations: 500,
            u_size: None,
            v_size: 2,
            q_size: 1,
            seed: 0,
            penalty: T::lit(10.0),
            step: T::lit(0.25),
            warm_starts: Vec::new(),
        }
    }
}

impl<T: Scalar> SearchBudget<T> {
    fn validate(&self, xt_size: usize, mode: Mode) -> Result<(usize, usize)> {
        let u = self.u_size.unwrap_or(xt_size);
        let (vmax, umax) = mode.single_bounds(xt_size);
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.restarts == 0 || self.iterations == 0 {
            return bad("restarts and iterations must be positive".into());
        }
        if u == 0 || self.v_size == 0 || u > umax || self.v_size > vmax {
            return bad(format!(
                "|U| = {u}, |V| = {} outside [1, {umax}] × [1, {vmax}] ({mode})",
                self.v_size
            ));
        }
        if self.q_size == 0 || self.q_size > MAX_Q {
            return bad(format!("|Q| = {} outside [1, {MAX_Q}]", self.q_size));
        }
        if !(self.step > T::zero() && self.step <= T::one()) {
            return bad(format!("step {} outside (0, 1]", self.step));
        }
        if !(self.penalty > T::zero()) || !self.penalty.is_finite() {
            return bad(format!("penalty {} must be positive", self.penalty));
        }
        Ok((u, self.v_size))
    }
}

/// Region being searched.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a, T> {
    pub model: &'a SourceModel<T>,
    pub f: &'a FunctionSpec,
    /// Required in lossy mode.
    pub d: Option<&'a DistortionSpec<T>>,
    pub mode: Mode,
}

/// Outcome of a membership query. `NotFound` is not a proof of exclusion.
#[derive(Debug, Clone)]
pub enum Membership<T> {
    Achievable {
        witness: AuxSystem<T>,
        g: Option<ReconstructionFn>,
        tuple: RateTuple<T>,
    },
    NotFound {
        best_excess: T,
    },
}

impl<T> Membership<T> {
    pub fn is_achievable(&self) -> bool {
        matches!(self, Membership::Achievable { .. })
    }
}

/// Constraint held at each grid value of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pin {
    /// `coord ≤ level`.
    AtMost(Coord),
    /// `I(U;X) ≥ level`.
    SourceInfoAtLeast,
}

/// Minimize one coordinate while a pin is held at each grid value.
#[derive(Debug, Clone)]
pub struct Sweep<T> {
    pub minimize: Coord,
    pub pin: Pin,
    pub grid: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct BoundaryPoint<T> {
    pub level: T,
    pub tuple: RateTuple<T>,
    /// `I(U;X)` of the witness.
    pub source_info: T,
    pub witness: AuxSystem<T>,
    pub g: Option<ReconstructionFn>,
    /// Minimized coordinate plus weighted pin violation.
    pub objective: T,
}

#[derive(Debug, Clone)]
struct Eval<T> {
    tuple: RateTuple<T>,
    source_info: T,
    g: Option<ReconstructionFn>,
}

#[derive(Debug, Clone, Copy)]
enum Goal<'a, T> {
    Reach(&'a RateTuple<T>),
    /// Augmented Lagrangian of `min coord s.t. c ≤ 0`.
    Boundary {
        minimize: Coord,
        pin: Pin,
        level: T,
        rho: T,
        lambda: T,
    },
}

impl<T: Scalar> Goal<'_, T> {
    fn score(&self, e: &Eval<T>) -> T {
        match *self {
            Goal::Reach(target) => e.tuple.excess_over(target),
            Goal::Boundary {
                minimize,
                rho,
                lambda,
                ..
            } => {
                let c = self.constraint(e);
                let shifted = (lambda + rho * c).max(T::zero());
                e.tuple.coord(minimize).unwrap_or(T::zero())
                    + (shifted * shifted - lambda * lambda) / (T::lit(2.0) * rho)
            }
        }
    }

    /// Signed pin constraint, feasible when `≤ 0`.
    fn constraint(&self, e: &Eval<T>) -> T {
        match *self {
            Goal::Reach(_) => T::zero(),
            Goal::Boundary { pin, level, .. } => match pin {
                Pin::AtMost(c) => e.tuple.coord(c).map_or(T::zero(), |v| v - level),
                Pin::SourceInfoAtLeast => level - e.source_info,
            },
        }
    }

    /// Minimized coordinate plus `penalty` times the pin violation.
    fn exact_score(&self, e: &Eval<T>, penalty: T) -> T {
        match *self {
            Goal::Reach(_) => self.score(e),
            Goal::Boundary { minimize, .. } => {
                e.tuple.coord(minimize).unwrap_or(T::zero())
                    + penalty * self.constraint(e).max(T::zero())
            }
        }
    }

    fn satisfied(&self, e: &Eval<T>) -> bool {
        match self {
            Goal::Reach(target) => e.tuple.within(target, T::tol(MEMBERSHIP_TOL)),
            Goal::Boundary { .. } => false,
        }
    }
}

/// Row-stochastic parameters with per-entry masks.
#[derive(Debug, Clone)]
struct Params<T> {
    q: Vec<T>,
    /// Per `q`: `|X̃| × |U|` row-major.
    u: Vec<Vec<T>>,
    u_mask: Vec<Vec<bool>>,
    /// Per `q`: `|U| × |V|` row-major.
    v: Vec<Vec<T>>,
    xt: usize,
    nu: usize,
    nv: usize,
}

#[derive(Debug, Clone, Copy)]
enum Row {
    Q,
    U(usize, usize),
    V(usize, usize),
}

impl<T: Scalar> Params<T> {
    fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        if self.q.len() > 1 {
            rows.push(Row::Q);
        }
        for q in 0..self.q.len() {
            rows.extend((0..self.xt).map(|x| Row::U(q, x)));
            if self.nv > 1 {
                rows.extend((0..self.nu).map(|u| Row::V(q, u)));
            }
        }
        rows
    }

    fn row(&self, r: Row) -> (&[T], Option<&[bool]>) {
        match r {
            Row::Q => (&self.q, None),
            Row::U(q, x) => {
                let s = x * self.nu..(x + 1) * self.nu;
                (&self.u[q][s.clone()], Some(&self.u_mask[q][s]))
            }
            Row::V(q, u) => (&self.v[q][u * self.nv..(u + 1) * self.nv], None),
        }
    }

    /// Adds `delta` to entry `c` of row `r`, then projects the row onto the
    /// simplex over its unmasked entries.
    fn nudged(&self, r: Row, c: usize, delta: T) -> Option<Self> {
        let (row, mask) = self.row(r);
        let allowed: Vec<usize> = (0..row.len())
            .filter(|&i| mask.is_none_or(|m| m[i]))
            .collect();
        if allowed.len() < 2 || !allowed.contains(&c) {
            return None;
        }
        let moved: Vec<T> = allowed
            .iter()
            .map(|&i| if i == c { row[i] + delta } else { row[i] })
            .collect();
        let projected = model::project_simplex(&moved);
        let mut out = self.clone();
        let target = match r {
            Row::Q => &mut out.q[..],
            Row::U(q, x) => &mut out.u[q][x * self.nu..(x + 1) * self.nu],
            Row::V(q, u) => &mut out.v[q][u * self.nv..(u + 1) * self.nv],
        };
        let mut changed = false;
        for (&i, &p) in allowed.iter().zip(&projected) {
            changed |= target[i] != p;
            target[i] = p;
        }
        changed.then_some(out)
    }

    /// `2·self − prev`, each row projected back onto its masked simplex.
    fn extrapolated(&self, prev: &Self) -> Option<Self> {
        let mut out = self.clone();
        let mut changed = false;
        for r in self.rows() {
            let (row, mask) = self.row(r);
            let old = prev.row(r).0;
            let allowed: Vec<usize> = (0..row.len())
                .filter(|&i| mask.is_none_or(|m| m[i]))
                .collect();
            let moved: Vec<T> = allowed.iter().map(|&i| row[i] + row[i] - old[i]).collect();
            let projected = model::project_simplex(&moved);
            let target = match r {
                Row::Q => &mut out.q[..],
                Row::U(q, x) => &mut out.u[q][x * self.nu..(x + 1) * self.nu],
                Row::V(q, u) => &mut out.v[q][u * self.nv..(u + 1) * self.nv],
            };
            for (&i, &v) in allowed.iter().zip(&projected) {
                changed |= target[i] != v;
                target[i] = v;
            }
        }
        changed.then_some(out)
    }

    fn to_aux(&self, xt: &Alphabet) -> Result<AuxSystem<T>> {
        let ua = Alphabet::indexed(axis::U, self.nu)?;
        let va = Alphabet::indexed(axis::V, self.nv)?;
        let per_q = (0..self.q.len())
            .map(|q| {
                AuxChannels::new(
                    CondDist::from_flat(xt.renamed(axis::XT), ua.clone(), self.u[q].clone())?,
                    CondDist::from_flat(ua.clone(), va.clone(), self.v[q].clone())?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        AuxSystem::new(Dist::new(Alphabet::indexed(axis::Q, self.q.len())?, self.q.clone())?, per_q)
    }

    /// Lays an existing system into `nu × nv` matrices (zero-padding extra
    /// symbols). Fails if it does not fit.
    fn from_aux(a: &AuxSystem<T>, xt: usize, nu: usize, nv: usize) -> Option<Self> {
        if a.u_size() > nu || a.v_size() > nv || a.per_q()[0].u_given_xt.input().size() != xt {
            return None;
        }
        let mut p = Self::blank(a.p_q().len(), xt, nu, nv);
        p.q = a.p_q().probs().to_vec();
        for (q, ch) in a.per_q().iter().enumerate() {
            for x in 0..xt {
                for u in 0..a.u_size() {
                    p.u[q][x * nu + u] = ch.u_given_xt.get(x, u);
                }
            }
            for u in 0..nu {
                if u < a.u_size() {
                    for v in 0..a.v_size() {
                        p.v[q][u * nv + v] = ch.v_given_u.get(u, v);
                    }
                } else {
                    p.v[q][u * nv] = T::one();
                }
            }
        }
        Some(p)
    }

    fn blank(nq: usize, xt: usize, nu: usize, nv: usize) -> Self {
        Self {
            q: vec![T::one() / T::lit(nq as f64); nq],
            u: vec![vec![T::zero(); xt * nu]; nq],
            u_mask: vec![vec![true; xt * nu]; nq],
            v: vec![vec![T::zero(); nu * nv]; nq],
            xt,
            nu,
            nv,
        }
    }
}

/// Symmetric relation on `X̃`: `a ~ b` iff `f(a,y) = f(b,y)` for every `y`
/// with `P(a,y) > 0` and `P(b,y) > 0`.
fn compatibility<T: Scalar>(m: &SourceModel<T>, f: &FunctionSpec) -> Result<Vec<Vec<bool>>> {
    let j = model::build_joint(m)?.marginal(&[axis::XT, axis::Y])?;
    let (nx, ny) = (m.xt_alphabet().size(), m.y_alphabet().size());
    let live = |x: usize, y: usize| j.table()[x * ny + y] > T::zero();
    Ok((0..nx)
        .map(|a| {
            (0..nx)
                .map(|b| (0..ny).all(|y| !(live(a, y) && live(b, y)) || f.eval(a, y) == f.eval(b, y)))
                .collect()
        })
        .collect())
}

fn is_clique(compat: &[Vec<bool>], members: &[usize]) -> bool {
    members
        .iter()
        .all(|&a| members.iter().all(|&b| compat[a][b]))
}

/// Greedily grows `members` into a maximal clique, trying vertices in `order`.
fn grow_clique(compat: &[Vec<bool>], members: &mut Vec<usize>, order: &[usize]) {
    for &x in order {
        if !members.contains(&x) && members.iter().all(|&m| compat[x][m]) {
            members.push(x);
        }
    }
}

struct Searcher<'a, T> {
    p: Problem<'a, T>,
    xt: Alphabet,
    compat: Option<Vec<Vec<bool>>>,
    nu: usize,
    nv: usize,
    budget: &'a SearchBudget<T>,
}

impl<'a, T: Scalar> Searcher<'a, T> {
    fn new(p: Problem<'a, T>, budget: &'a SearchBudget<T>) -> Result<Self> {
        p.f.check_against(p.model)?;
        let xt = p.model.xt_alphabet().clone();
        let (nu, nv) = budget.validate(xt.size(), p.mode)?;
        let compat = match p.mode {
            Mode::Lossless => Some(compatibility(p.model, p.f)?),
            Mode::Lossy => {
                let d = p.d.ok_or_else(|| {
                    Error::InvalidParameter("lossy search needs a distortion table".into())
                })?;
                check_distortion(p.f, d)?;
                None
            }
        };
        Ok(Self {
            p,
            xt,
            compat,
            nu,
            nv,
            budget,
        })
    }

    fn evaluate(&self, a: &AuxSystem<T>) -> Result<Eval<T>> {
        let j = aux_joint(self.p.model, a)?;
        let mut tuple = corner_from_joint(&j)?;
        let source_info = j.mutual_info(&[axis::U], &[axis::X])?;
        let g = match self.p.d {
            Some(d) if self.p.mode == Mode::Lossy => {
                let g = optimal_g_on(&j, axis::U, axis::Y, axis::XT, self.p.f, d)?;
                tuple.d = Some(expected_distortion(&j, axis::U, axis::Y, axis::XT, self.p.f, &g, d)?);
                Some(g)
            }
            _ => None,
        };
        Ok(Eval {
            tuple,
            source_info,
            g,
        })
    }

    fn score(&self, params: &Params<T>, goal: &Goal<'_, T>) -> (T, Option<Eval<T>>) {
        match params.to_aux(&self.xt).and_then(|a| self.evaluate(&a)) {
            Ok(e) if e.tuple.is_finite() => (goal.score(&e), Some(e)),
            _ => (T::infinity(), None),
        }
    }

    /// Derives masks from the current support; `None` if some `u` is
    /// reached from incompatible symbols.
    fn masked(&self, mut p: Params<T>, order: &[usize]) -> Option<Params<T>> {
        let Some(compat) = &self.compat else {
            return Some(p);
        };
        for q in 0..p.q.len() {
            for u in 0..self.nu {
                let mut members: Vec<usize> = (0..p.xt)
                    .filter(|&x| p.u[q][x * self.nu + u] > T::zero())
                    .collect();
                if !is_clique(compat, &members) {
                    return None;
                }
                if members.is_empty() {
                    members.push(order[u % order.len()]);
                }
                grow_clique(compat, &mut members, order);
                for x in 0..p.xt {
                    p.u_mask[q][x * self.nu + u] = members.contains(&x);
                }
            }
        }
        Some(p)
    }

    fn identity_start(&self, nq: usize) -> Option<Params<T>> {
        let mut p = Params::blank(nq, self.xt.size(), self.nu, self.nv);
        for q in 0..nq {
            for x in 0..p.xt {
                p.u[q][x * self.nu + x % self.nu] = T::one();
            }
            for u in 0..self.nu {
                p.v[q][u * self.nv] = T::one();
            }
        }
        let order: Vec<usize> = (0..p.xt).collect();
        self.masked(p, &order)
    }

    fn constant_start(&self, nq: usize) -> Option<Params<T>> {
        let mut p = Params::blank(nq, self.xt.size(), self.nu, self.nv);
        for q in 0..nq {
            for x in 0..p.xt {
                p.u[q][x * self.nu] = T::one();
            }
            for u in 0..self.nu {
                p.v[q][u * self.nv] = T::one();
            }
        }
        let order: Vec<usize> = (0..p.xt).collect();
        self.masked(p, &order)
    }

    fn random_start(&self, seed: u64) -> Option<Params<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nq = self.budget.q_size;
        let nx = self.xt.size();
        let mut p = Params::blank(nq, nx, self.nu, self.nv);
        p.q = dirichlet(&mut rng, &vec![true; nq]);
        for q in 0..nq {
            if let Some(compat) = &self.compat {
                // each u draws a random maximal clique; symbols left uncovered
                // join the first clique that accepts them
                let mut cliques: Vec<Vec<usize>> = Vec::with_capacity(self.nu);
                let mut seeds: Vec<usize> = (0..nx).collect();
                seeds.shuffle(&mut rng);
                for u in 0..self.nu {
                    let start = if u < nx { seeds[u] } else { rng.random_range(0..nx) };
                    let mut order: Vec<usize> = (0..nx).collect();
                    order.shuffle(&mut rng);
                    let mut members = vec![start];
                    grow_clique(compat, &mut members, &order);
                    cliques.push(members);
                }
                for x in 0..nx {
                    if cliques.iter().any(|c| c.contains(&x)) {
                        continue;
                    }
                    let slot = cliques.iter_mut().find(|c| c.iter().all(|&m| compat[x][m]))?;
                    slot.push(x);
                }
                for (u, c) in cliques.iter().enumerate() {
                    for x in 0..nx {
                        p.u_mask[q][x * self.nu + u] = c.contains(&x);
                    }
                }
            }
            for x in 0..nx {
                let mask = &p.u_mask[q][x * self.nu..(x + 1) * self.nu];
                let row = dirichlet(&mut rng, mask);
                p.u[q][x * self.nu..(x + 1) * self.nu].copy_from_slice(&row);
            }
            for u in 0..self.nu {
                let row = dirichlet(&mut rng, &vec![true; self.nv]);
                p.v[q][u * self.nv..(u + 1) * self.nv].copy_from_slice(&row);
            }
        }
        Some(p)
    }

    /// Start `i` in the fixed order: warm starts, `U = X̃`, constant `U`,
    /// then seeded random draws.
    fn start(&self, extra: &[AuxSystem<T>], i: usize) -> Option<Params<T>> {
        let nx = self.xt.size();
        let order: Vec<usize> = (0..nx).collect();
        if i < extra.len() {
            let p = Params::from_aux(&extra[i], nx, self.nu, self.nv)?;
            return self.masked(p, &order);
        }
        match i - extra.len() {
            0 => self.identity_start(self.budget.q_size),
            1 => self.constant_start(self.budget.q_size),
            _ => self.random_start(child_seed(self.budget.seed, i as u64)),
        }
    }

    fn descend(&self, p: Params<T>, goal: &Goal<'_, T>) -> (T, Params<T>, Option<Eval<T>>) {
        let (score, p, eval, _) = self.descend_from(p, goal, self.budget.step);
        (score, p, eval)
    }

    /// Method of multipliers: repeated descents on the augmented Lagrangian,
    /// then `λ ← max(0, λ + ρ c)`. Scored by the exact penalty.
    fn descend_pinned(&self, mut p: Params<T>, goal: &Goal<'_, T>) -> (T, Params<T>, Option<Eval<T>>) {
        let Goal::Boundary {
            minimize,
            pin,
            level,
            rho,
            ..
        } = *goal
        else {
            return self.descend(p, goal);
        };
        let mut lambda = T::zero();
        let mut step = self.budget.step;
        let mut eval = None;
        for _ in 0..OUTER_ROUNDS {
            let g = Goal::Boundary {
                minimize,
                pin,
                level,
                rho,
                lambda,
            };
            let (_, q, e, last_step) = self.descend_from(p, &g, step);
            p = q;
            let Some(e) = e else { break };
            let c = g.constraint(&e);
            let next = (lambda + rho * c).max(T::zero());
            eval = Some(e);
            if (next - lambda).abs() <= T::tol(1e-12) {
                break;
            }
            lambda = next;
            step = (last_step * T::lit(4.0)).min(self.budget.step);
        }
        let score = eval
            .as_ref()
            .map_or(T::infinity(), |e| goal.exact_score(e, self.budget.penalty));
        (score, p, eval)
    }

    /// Coordinate descent with a step per entry (doubled on success, halved
    /// on failure) and a pattern move along each sweep's displacement.
    /// Returns the largest remaining step.
    fn descend_from(
        &self,
        mut p: Params<T>,
        goal: &Goal<'_, T>,
        step: T,
    ) -> (T, Params<T>, Option<Eval<T>>, T) {
        let (mut best, mut eval) = self.score(&p, goal);
        let coords: Vec<(Row, usize)> = p
            .rows()
            .into_iter()
            .flat_map(|r| (0..p.row(r).0.len()).map(move |c| (r, c)))
            .collect();
        let mut steps = vec![step; coords.len()];
        let max_step = self.budget.step;
        for _ in 0..self.budget.iterations {
            if eval.as_ref().is_some_and(|e| goal.satisfied(e)) {
                break;
            }
            let before = p.clone();
            for (k, &(r, c)) in coords.iter().enumerate() {
                let mut moved = false;
                for delta in [steps[k], -steps[k]] {
                    let Some(cand) = p.nudged(r, c, delta) else {
                        continue;
                    };
                    let (s, e) = self.score(&cand, goal);
                    if s < best {
                        best = s;
                        eval = e;
                        p = cand;
                        moved = true;
                        break;
                    }
                }
                steps[k] = if moved {
                    (steps[k] * T::lit(2.0)).min(max_step)
                } else {
                    steps[k] / T::lit(2.0)
                };
            }
            if let Some(cand) = p.extrapolated(&before) {
                let (s, e) = self.score(&cand, goal);
                if s < best {
                    best = s;
                    eval = e;
                    p = cand;
                }
            }
            if steps.iter().all(|&s| s < T::lit(MIN_STEP)) {
                break;
            }
        }
        let largest = steps.iter().copied().fold(T::zero(), T::max);
        (best, p, eval, largest)
    }

    /// Runs starts `0..total` in parallel batches; `stop` inspects each batch
    /// in index order.
    fn run(
        &self,
        extra: &[AuxSystem<T>],
        goal: &Goal<'_, T>,
        mut stop: impl FnMut(usize, &(T, Params<T>, Option<Eval<T>>)) -> bool,
    ) {
        let total = extra.len() + self.budget.restarts;
        let mut i = 0;
        while i < total {
            let hi = (i + BATCH).min(total);
            let batch: Vec<_> = (i..hi)
                .into_par_iter()
                .map(|k| self.start(extra, k).map(|p| self.descend_pinned(p, goal)))
                .collect();
            for (k, r) in (i..hi).zip(batch) {
                if let Some(r) = r {
                    if stop(k, &r) {
                        return;
                    }
                }
            }
            i = hi;
        }
    }

    fn witness(&self, p: &Params<T>) -> Result<AuxSystem<T>> {
        let a = p.to_aux(&self.xt)?;
        Ok(trim_q(a))
    }
}

/// Drops time-sharing symbols of zero weight.
fn trim_q<T: Scalar>(a: AuxSystem<T>) -> AuxSystem<T> {
    let live: Vec<usize> = (0..a.p_q().len()).filter(|&q| a.p_q().probs()[q] > T::zero()).collect();
    if live.len() == a.p_q().len() || live.is_empty() {
        return a;
    }
    let probs: Vec<T> = live.iter().map(|&q| a.p_q().probs()[q]).collect();
    let total: T = probs.iter().copied().sum();
    let probs: Vec<T> = probs.into_iter().map(|p| p / total).collect();
    let per_q = live.iter().map(|&q| a.per_q()[q].clone()).collect();
    Dist::new(Alphabet::indexed(axis::Q, live.len()).expect("nonempty"), probs)
        .and_then(|d| AuxSystem::new(d, per_q))
        .unwrap_or(a)
}

/// Dirichlet(1) over the masked entries.
fn dirichlet<T: Scalar>(rng: &mut ChaCha8Rng, mask: &[bool]) -> Vec<T> {
    let draws: Vec<f64> = mask
        .iter()
        .map(|&m| if m { -(1.0 - rng.random::<f64>()).ln() } else { 0.0 })
        .collect();
    let total: f64 = draws.iter().sum();
    let mut row: Vec<T> = draws.iter().map(|&w| T::lit(w / total)).collect();
    // absorb rounding so the row sums to one in T
    let sum: T = row.iter().copied().sum();
    if let Some(i) = mask.iter().position(|&m| m) {
        row[i] = (row[i] + T::one() - sum).max(T::zero());
    }
    row
}

/// Searches for an auxiliary system whose corner is componentwise within
/// `1e-9` of `target`.
pub fn membership<T: Scalar>(
    p: &Problem<'_, T>,
    target: &RateTuple<T>,
    budget: &SearchBudget<T>,
) -> Result<Membership<T>> {
    if !target.is_finite() {
        return Err(Error::InvalidParameter("target has non-finite coordinates".into()));
    }
    if p.mode == Mode::Lossy && target.d.is_none() {
        return Err(Error::InvalidParameter("lossy target needs a distortion level".into()));
    }
    let s = Searcher::new(*p, budget)?;
    let goal = Goal::Reach(target);
    let mut found: Option<(Params<T>, Eval<T>)> = None;
    let mut best_excess = T::infinity();
    s.run(&budget.warm_starts, &goal, |_, (score, params, eval)| {
        best_excess = best_excess.min(*score);
        match eval {
            Some(e) if goal.satisfied(e) => {
                found = Some((params.clone(), e.clone()));
                true
            }
            _ => false,
        }
    });
    let Some((params, e)) = found else {
        return Ok(Membership::NotFound { best_excess });
    };
    let witness = s.witness(&params)?;
    let tuple = match p.mode {
        // re-evaluate through the checked entry point
        Mode::Lossless => super::eval_lossless_corner(p.model, &witness, p.f)?,
        Mode::Lossy => e.tuple,
    };
    Ok(Membership::Achievable {
        witness,
        g: e.g,
        tuple,
    })
}

/// Best tuple per grid value; each point warm-starts from its predecessor.
pub fn trace_boundary<T: Scalar>(
    p: &Problem<'_, T>,
    sweep: &Sweep<T>,
    budget: &SearchBudget<T>,
) -> Result<Vec<BoundaryPoint<T>>> {
    if sweep.grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if sweep.minimize == Coord::Distortion && p.mode == Mode::Lossless {
        return Err(Error::InvalidParameter("distortion is only defined in lossy mode".into()));
    }
    let s = Searcher::new(*p, budget)?;
    let mut out: Vec<BoundaryPoint<T>> = Vec::with_capacity(sweep.grid.len());
    for &level in &sweep.grid {
        let goal = Goal::Boundary {
            minimize: sweep.minimize,
            pin: sweep.pin,
            level,
            rho: budget.penalty,
            lambda: T::zero(),
        };
        let mut extra = Vec::with_capacity(budget.warm_starts.len() + 1);
        if let Some(prev) = out.last() {
            extra.push(prev.witness.clone());
        }
        extra.extend(budget.warm_starts.iter().cloned());
        let mut best: Option<(T, Params<T>, Eval<T>)> = None;
        s.run(&extra, &goal, |_, (score, params, eval)| {
            if let Some(e) = eval {
                if best.as_ref().is_none_or(|(b, _, _)| *score < *b) {
                    best = Some((*score, params.clone(), e.clone()));
                }
            }
            false
        });
        let (objective, params, e) = best.ok_or_else(|| {
            Error::Inadmissible("no admissible starting point for this function".into())
        })?;
        out.push(BoundaryPoint {
            level,
            tuple: e.tuple,
            source_info: e.source_info,
            witness: s.witness(&params)?,
            g: e.g,
            objective,
        });
    }
    Ok(out)
}
