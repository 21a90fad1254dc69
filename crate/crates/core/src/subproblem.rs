//! The convex precoder/common-rate problem solved inside each
//! alternating-optimization step.
//!
//! With equalizers and MSE weights held fixed, every augmented WMSE is a
//! convex quadratic in the precoder. The builders below write those
//! quadratics over real variables: each complex column `p_j` is embedded as
//! `[Re p_j; Im p_j]` and `h_kᴴp_j` becomes the 2-vector
//! `[[Re h, Im h], [−Im h, Re h]]·z_j`. The rate-transformation variables
//! `X0, X_{k,0}` follow the precoder block.
//!
//! A [`Qcqp`] is converted to a second-order cone program (each
//! `‖Fv‖² + lᵀv + c ≤ 0` becomes a rotated cone) and handed to the Clarabel
//! interior-point solver.

use std::f64::consts::LOG2_E;
use std::fmt::Write as _;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
    SupportedConeT,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ChannelSet, PrecoderMatrix};
use crate::wmmse::WmmseState;

/// Relative feasibility tolerance applied when accepting a solver point.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Interior-point iteration cap.
pub const MAX_SOLVER_ITERATIONS: u32 = 100;
/// Primal/dual residual and relative duality-gap tolerance.
pub const SOLVER_TOL: f64 = 1e-8;

/// Which user's whole unicast message rides on the super-common stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecodingOrder {
    pub first: usize,
    /// `None` only in the single-user case.
    pub second: Option<usize>,
}

impl DecodingOrder {
    pub fn new(first: usize, second: usize) -> Self {
        DecodingOrder {
            first,
            second: Some(second),
        }
    }

    /// Every order for `num_users` (at most two) users.
    pub fn all(num_users: usize) -> Vec<DecodingOrder> {
        match num_users {
            1 => vec![DecodingOrder { first: 0, second: None }],
            2 => vec![DecodingOrder::new(0, 1), DecodingOrder::new(1, 0)],
            _ => vec![],
        }
    }

    pub fn label(&self) -> String {
        match self.second {
            Some(s) => format!("{}>{}", self.first + 1, s + 1),
            None => format!("{}", self.first + 1),
        }
    }
}

/// Strategy as seen by the subproblem: SC–SIC carries its decoding order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Rs,
    Mulp,
    ScSic(DecodingOrder),
}

impl Variant {
    pub fn strategy(self) -> crate::types::Strategy {
        match self {
            Variant::Rs => crate::types::Strategy::Rs,
            Variant::Mulp => crate::types::Strategy::Mulp,
            Variant::ScSic(_) => crate::types::Strategy::ScSic,
        }
    }

    /// Precoder columns that are optimization variables. SC–SIC drops the
    /// private column of the user decoded inside the common stream.
    pub fn active_columns(self, num_users: usize) -> Vec<usize> {
        match self {
            Variant::Rs | Variant::Mulp => (0..=num_users).collect(),
            Variant::ScSic(o) => std::iter::once(0).chain(o.second.map(|s| s + 1)).collect(),
        }
    }

    /// Users that may own a share of the common stream.
    pub fn common_share_users(self, num_users: usize) -> Vec<usize> {
        match self {
            Variant::Rs => (0..num_users).collect(),
            Variant::Mulp => vec![],
            Variant::ScSic(o) => vec![o.first],
        }
    }
}

/// Role of a rate-transformation variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum XRole {
    /// `X0 = −C0`
    Multicast,
    /// `X_{k,0} = −C_{k,0}`
    Unicast(usize),
    /// Epigraph variable of the multicast max-min restoration program.
    Epigraph,
}

/// Variable ordering: active precoder columns (real parts then imaginary
/// parts, `2·Nt` reals each) followed by the rate-transformation variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub num_antennas: usize,
    pub num_users: usize,
    pub active_columns: Vec<usize>,
    pub x_roles: Vec<XRole>,
}

impl Layout {
    pub fn precoder_len(&self) -> usize {
        2 * self.num_antennas * self.active_columns.len()
    }

    pub fn len(&self) -> usize {
        self.precoder_len() + self.x_roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn block(&self, column: usize) -> Option<usize> {
        self.active_columns
            .iter()
            .position(|&c| c == column)
            .map(|a| 2 * self.num_antennas * a)
    }

    fn x_index(&self, role: XRole) -> Option<usize> {
        self.x_roles.iter().position(|&r| r == role).map(|i| self.precoder_len() + i)
    }

    /// Packs a precoder and a full-length `x = [X0, X_{1,0}, …]` into a
    /// variable vector. Inactive columns are ignored.
    pub fn pack(&self, p: &PrecoderMatrix, x: &[f64]) -> Vec<f64> {
        let nt = self.num_antennas;
        let mut v = vec![0.0; self.len()];
        for &c in &self.active_columns {
            let off = self.block(c).unwrap();
            for (m, e) in p.column(c).iter().enumerate() {
                v[off + m] = e.re;
                v[off + nt + m] = e.im;
            }
        }
        for (i, role) in self.x_roles.iter().enumerate() {
            v[self.precoder_len() + i] = match *role {
                XRole::Multicast | XRole::Epigraph => x[0],
                XRole::Unicast(k) => x[k + 1],
            };
        }
        v
    }

    /// Inverse of [`Layout::pack`]; inactive columns come back as zeros and
    /// absent `x` entries as 0.
    pub fn unpack(&self, v: &[f64]) -> (PrecoderMatrix, Vec<f64>) {
        let nt = self.num_antennas;
        let mut p = PrecoderMatrix::zeros(nt, self.num_users);
        for &c in &self.active_columns {
            let off = self.block(c).unwrap();
            let col = (0..nt).map(|m| Complex64::new(v[off + m], v[off + nt + m])).collect();
            p.set_column(c, col);
        }
        let mut x = vec![0.0; self.num_users + 1];
        for (i, role) in self.x_roles.iter().enumerate() {
            let val = v[self.precoder_len() + i];
            match *role {
                XRole::Multicast | XRole::Epigraph => x[0] = val,
                XRole::Unicast(k) => x[k + 1] = val,
            }
        }
        (p, x)
    }
}

/// `‖F v‖² + lᵀv + c` with `F` stored as dense rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFn {
    pub factor: Vec<Vec<f64>>,
    /// One entry per factor row.
    pub offset: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticFn {
    fn zero(n: usize) -> Self {
        QuadraticFn {
            factor: Vec::new(),
            offset: Vec::new(),
            linear: vec![0.0; n],
            constant: 0.0,
        }
    }

    fn push_row(&mut self, row: Vec<f64>, offset: f64) {
        self.factor.push(row);
        self.offset.push(offset);
    }

    /// `‖Fv + d‖² + lᵀv + c`
    pub fn eval(&self, v: &[f64]) -> f64 {
        let quad: f64 = self.factor.iter().zip(&self.offset).map(|(r, d)| (dot(r, v) + d).powi(2)).sum();
        quad + dot(&self.linear, v) + self.constant
    }

    /// `(l + 2Fᵀd, c + ‖d‖²)`: the affine part once the square is expanded.
    pub fn expanded_affine(&self) -> (Vec<f64>, f64) {
        let mut l = self.linear.clone();
        let mut c = self.constant;
        for (r, d) in self.factor.iter().zip(&self.offset) {
            for (li, ri) in l.iter_mut().zip(r) {
                *li += 2.0 * d * ri;
            }
            c += d * d;
        }
        (l, c)
    }

    /// Dense `FᵀF`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.linear.len();
        let mut g = vec![vec![0.0; n]; n];
        for r in &self.factor {
            for i in 0..n {
                if r[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    g[i][j] += r[i] * r[j];
                }
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `Σx + log2(e) ≥ ξ_{k,0}` (or `t + log2(e) ≥ ξ_{k,0}` in restoration)
    CommonDecoding(usize),
    /// `X0 ≤ −R0th`
    MulticastQos,
    /// `X_{k,0} ≤ 0`
    CommonShareSign(usize),
    /// `tr(PPᴴ) ≤ Pt`
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    /// Feasible iff `f(v) ≤ 0`.
    pub f: QuadraticFn,
}

/// Convex QCQP: minimize `objective(v)` subject to every `f(v) ≤ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qcqp {
    pub layout: Layout,
    pub objective: QuadraticFn,
    pub constraints: Vec<Constraint>,
    pub power_budget: f64,
    /// Largest WSR weight; the cone program's objective is divided by it.
    pub objective_scale: f64,
}

impl Qcqp {
    pub fn num_variables(&self) -> usize {
        self.layout.len()
    }

    pub fn objective_at(&self, p: &PrecoderMatrix, x: &[f64]) -> f64 {
        self.objective.eval(&self.layout.pack(p, x))
    }

    /// Largest constraint value at `(p, x)`; feasible iff `≤ 0`.
    pub fn max_violation(&self, p: &PrecoderMatrix, x: &[f64]) -> f64 {
        let v = self.layout.pack(p, x);
        self.constraints.iter().map(|c| c.f.eval(&v)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// [`Qcqp::max_violation`] with each constraint divided by
    /// `1 + |constant|`, the scale the solver's tolerances act on.
    pub fn relative_violation(&self, p: &PrecoderMatrix, x: &[f64]) -> f64 {
        let v = self.layout.pack(p, x);
        self.constraints
            .iter()
            .map(|c| c.f.eval(&v) / (1.0 + c.f.constant.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Inputs of one subproblem.
#[derive(Clone, Debug)]
pub struct SubproblemSpec<'a> {
    pub channel: &'a ChannelSet,
    /// WSR weights (not the MSE weights in `wmmse_state`).
    pub wsr_weights: &'a [f64],
    pub wmmse_state: &'a WmmseState,
    pub r0_threshold: f64,
    pub power_budget: f64,
    pub variant: Variant,
}

impl SubproblemSpec<'_> {
    fn validate(&self) -> Result<()> {
        let k = self.channel.num_users();
        if self.wsr_weights.len() != k || self.wmmse_state.num_users() != k {
            return Err(Error::invalid("weights and WMMSE state must have one entry per user"));
        }
        if self.wsr_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("WSR weights must be strictly positive"));
        }
        if !(self.r0_threshold.is_finite() && self.r0_threshold >= 0.0) {
            return Err(Error::invalid("r0_threshold must be >= 0"));
        }
        if !(self.power_budget.is_finite() && self.power_budget > 0.0) {
            return Err(Error::invalid("power budget must be positive"));
        }
        if let Variant::ScSic(o) = self.variant {
            if k > 2 {
                return Err(Error::invalid("SC-SIC is only supported for up to two users"));
            }
            if !DecodingOrder::all(k).contains(&o) {
                return Err(Error::invalid(format!("invalid decoding order {o:?} for {k} users")));
            }
        }
        Ok(())
    }
}

/// The two real rows of `h_kᴴ p` in the embedding of one column block.
fn gain_rows(h: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let re = h.iter().map(|c| c.re).chain(h.iter().map(|c| c.im)).collect();
    let im = h.iter().map(|c| -c.im).chain(h.iter().map(|c| c.re)).collect();
    (re, im)
}

fn place(n: usize, offset: usize, block: &[f64], scale: f64) -> Vec<f64> {
    let mut row = vec![0.0; n];
    for (i, b) in block.iter().enumerate() {
        row[offset + i] = scale * b;
    }
    row
}

/// `log2(e)·(u·(|g|²(Σ_{j∈cols}|h_kᴴp_j|² + 1) − 2Re{g·h_kᴴp_target} + 1) − ln u)`
/// as a [`QuadraticFn`] over `layout`; see [`crate::wmmse::surrogate_mse`].
///
/// Written as `u·|g·a_t − 1|² + u|g|²·Σ_{j≠t}|a_j|² + u|g|² − ln u` so the
/// squared part stays near `u·ε ≈ 1` instead of carrying a large constant.
fn weighted_mse_fn(
    layout: &Layout,
    h: &[Complex64],
    g: Complex64,
    u: f64,
    interference_columns: &[usize],
    target: usize,
) -> QuadraticFn {
    let n = layout.len();
    let (re, im) = gain_rows(h);
    let mut f = QuadraticFn::zero(n);
    let a = u * g.norm_sqr();
    let su = (u * LOG2_E).sqrt();
    let sg = (a * LOG2_E).sqrt();
    let target_block = layout.block(target).filter(|_| interference_columns.contains(&target));
    for &c in interference_columns {
        let Some(off) = layout.block(c) else { continue };
        if c == target {
            // g·a = (g_r·a_r − g_i·a_i) + j(g_i·a_r + g_r·a_i)
            let real: Vec<f64> = re.iter().zip(&im).map(|(r, i)| g.re * r - g.im * i).collect();
            let imag: Vec<f64> = re.iter().zip(&im).map(|(r, i)| g.im * r + g.re * i).collect();
            f.push_row(place(n, off, &real, su), -su);
            f.push_row(place(n, off, &imag, su), 0.0);
        } else if sg > 0.0 {
            f.push_row(place(n, off, &re, sg), 0.0);
            f.push_row(place(n, off, &im, sg), 0.0);
        }
    }
    f.constant = (a - u.ln()) * LOG2_E;
    if target_block.is_none() {
        f.constant += u * LOG2_E;
    }
    f
}

fn scale_fn(f: &mut QuadraticFn, w: f64) {
    let s = w.sqrt();
    for r in &mut f.factor {
        for x in r.iter_mut() {
            *x *= s;
        }
    }
    for d in &mut f.offset {
        *d *= s;
    }
    for x in &mut f.linear {
        *x *= w;
    }
    f.constant *= w;
}

fn add_fn(dst: &mut QuadraticFn, src: QuadraticFn) {
    dst.factor.extend(src.factor);
    dst.offset.extend(src.offset);
    for (d, s) in dst.linear.iter_mut().zip(&src.linear) {
        *d += s;
    }
    dst.constant += src.constant;
}

/// One `ξ_{k,0} − Σx − log2(e) ≤ 0` constraint per user, i.e. the common
/// rates must fit under `log2(e) − ξ_{k,0} ≤ R_{k,0}`.
fn common_decoding_constraints(
    layout: &Layout,
    ch: &ChannelSet,
    state: &WmmseState,
) -> Vec<Constraint> {
    (0..ch.num_users())
        .map(|k| {
            let mut f = weighted_mse_fn(
                layout,
                ch.channel(k),
                state.g_common[k],
                state.u_common[k],
                &layout.active_columns,
                0,
            );
            for i in layout.precoder_len()..layout.len() {
                f.linear[i] -= 1.0;
            }
            f.constant -= LOG2_E;
            Constraint {
                kind: ConstraintKind::CommonDecoding(k),
                f,
            }
        })
        .collect()
}

fn power_constraint(layout: &Layout, power_budget: f64) -> Constraint {
    let n = layout.len();
    let factor: Vec<Vec<f64>> = (0..layout.precoder_len())
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    let offset = vec![0.0; factor.len()];
    Constraint {
        kind: ConstraintKind::Power,
        f: QuadraticFn {
            factor,
            offset,
            linear: vec![0.0; n],
            constant: -power_budget,
        },
    }
}

fn build_for(spec: &SubproblemSpec<'_>) -> Result<Qcqp> {
    spec.validate()?;
    let ch = spec.channel;
    let k = ch.num_users();
    let mut x_roles = vec![XRole::Multicast];
    x_roles.extend(spec.variant.common_share_users(k).into_iter().map(XRole::Unicast));
    let layout = Layout {
        num_antennas: ch.num_antennas(),
        num_users: k,
        active_columns: spec.variant.active_columns(k),
        x_roles,
    };
    let n = layout.len();
    let state = spec.wmmse_state;

    // Σ_k w_k (X_{k,0} + ξ_k)
    let private_columns: Vec<usize> = layout.active_columns.iter().copied().filter(|&c| c > 0).collect();
    let mut objective = QuadraticFn::zero(n);
    for user in 0..k {
        let mut xi = weighted_mse_fn(
            &layout,
            ch.channel(user),
            state.g_private[user],
            state.u_private[user],
            &private_columns,
            user + 1,
        );
        scale_fn(&mut xi, spec.wsr_weights[user]);
        add_fn(&mut objective, xi);
        if let Some(i) = layout.x_index(XRole::Unicast(user)) {
            objective.linear[i] += spec.wsr_weights[user];
        }
    }

    let mut constraints = common_decoding_constraints(&layout, ch, state);
    let mut qos = QuadraticFn::zero(n);
    qos.linear[layout.x_index(XRole::Multicast).unwrap()] = 1.0;
    qos.constant = spec.r0_threshold;
    constraints.push(Constraint {
        kind: ConstraintKind::MulticastQos,
        f: qos,
    });
    for (i, role) in layout.x_roles.iter().enumerate() {
        if let XRole::Unicast(user) = *role {
            let mut sign = QuadraticFn::zero(n);
            sign.linear[layout.precoder_len() + i] = 1.0;
            constraints.push(Constraint {
                kind: ConstraintKind::CommonShareSign(user),
                f: sign,
            });
        }
    }
    constraints.push(power_constraint(&layout, spec.power_budget));

    let objective_scale = spec.wsr_weights.iter().copied().fold(0.0, f64::max);
    Ok(Qcqp {
        layout,
        objective,
        constraints,
        power_budget: spec.power_budget,
        objective_scale,
    })
}

/// Rate-splitting subproblem: the full precoder plus `X0, X_{1,0}, …, X_{K,0}`.
pub fn build_rs_subproblem(spec: &SubproblemSpec<'_>) -> Result<Qcqp> {
    if spec.variant != Variant::Rs {
        return Err(Error::invalid("build_rs_subproblem needs the RS variant"));
    }
    build_for(spec)
}

/// MU–LP subproblem: the full precoder plus `X0` alone.
pub fn build_mulp_subproblem(spec: &SubproblemSpec<'_>) -> Result<Qcqp> {
    if spec.variant != Variant::Mulp {
        return Err(Error::invalid("build_mulp_subproblem needs the MULP variant"));
    }
    build_for(spec)
}

/// SC–SIC subproblem for two users: `p0`, the second user's private column,
/// `X0` and the first user's `X_{i,0}`.
pub fn build_scsic_subproblem(spec: &SubproblemSpec<'_>) -> Result<Qcqp> {
    if !matches!(spec.variant, Variant::ScSic(_)) {
        return Err(Error::invalid("build_scsic_subproblem needs an SC-SIC variant"));
    }
    build_for(spec)
}

pub fn build(spec: &SubproblemSpec<'_>) -> Result<Qcqp> {
    build_for(spec)
}

/// Max-min multicast program used to find a QoS-feasible starting point:
/// minimize `t` subject to `ξ_{k,0}(p0) ≤ t + log2(e)` and `‖p0‖² ≤ Pt`, with all
/// private columns held at zero.
pub fn build_multicast_restoration(ch: &ChannelSet, state: &WmmseState, power_budget: f64) -> Result<Qcqp> {
    if !(power_budget.is_finite() && power_budget > 0.0) {
        return Err(Error::invalid("power budget must be positive"));
    }
    let layout = Layout {
        num_antennas: ch.num_antennas(),
        num_users: ch.num_users(),
        active_columns: vec![0],
        x_roles: vec![XRole::Epigraph],
    };
    let n = layout.len();
    let mut objective = QuadraticFn::zero(n);
    objective.linear[n - 1] = 1.0;
    let mut constraints = common_decoding_constraints(&layout, ch, state);
    constraints.push(power_constraint(&layout, power_budget));
    Ok(Qcqp {
        layout,
        objective,
        constraints,
        power_budget,
        objective_scale: 1.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    NonNeg,
    Soc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub dim: usize,
}

/// Standard form `min ½vᵀPv + qᵀv  s.t.  Av + s = b, s ∈ K` with sparse
/// triplets (`P` upper triangle only).
#[derive(Clone, Debug, PartialEq)]
pub struct ConeProgram {
    pub num_variables: usize,
    pub num_rows: usize,
    pub p: Vec<(usize, usize, f64)>,
    pub q: Vec<f64>,
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeBlock>,
    /// Added back after dividing the objective by `objective_scale`.
    pub objective_constant: f64,
    pub objective_scale: f64,
}

impl Qcqp {
    pub fn to_cone_program(&self) -> ConeProgram {
        let n = self.num_variables();
        let scale = self.objective_scale;
        let gram = self.objective.gram();
        let mut p = Vec::new();
        for (j, col) in gram.iter().enumerate() {
            for (i, &g) in col.iter().enumerate().take(j + 1) {
                if g != 0.0 {
                    p.push((i, j, 2.0 * g / scale));
                }
            }
        }
        let (obj_linear, obj_constant) = self.objective.expanded_affine();
        let q = obj_linear.iter().map(|x| x / scale).collect();

        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let push_row = |a: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>, coeffs: &[f64], scale: f64, rhs: f64| {
            let r = b.len();
            for (j, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    a.push((r, j, scale * c));
                }
            }
            b.push(rhs);
        };
        for con in &self.constraints {
            let f = &con.f;
            if f.factor.is_empty() {
                // −(lᵀv + c) ≥ 0
                push_row(&mut a, &mut b, &f.linear, 1.0, -f.constant);
                cones.push(ConeBlock {
                    kind: ConeKind::NonNeg,
                    dim: 1,
                });
            } else if con.kind == ConstraintKind::Power {
                // ‖v_P‖ ≤ √Pt
                push_row(&mut a, &mut b, &f.linear, 1.0, (-f.constant).sqrt());
                for r in &f.factor {
                    push_row(&mut a, &mut b, r, -1.0, 0.0);
                }
                cones.push(ConeBlock {
                    kind: ConeKind::Soc,
                    dim: 1 + f.factor.len(),
                });
            } else {
                // With s = −(lᵀv + c): (s + 1, s − 1, 2(Fv + d)) ∈ SOC  ⇔  ‖Fv + d‖² ≤ s.
                push_row(&mut a, &mut b, &f.linear, 1.0, 1.0 - f.constant);
                push_row(&mut a, &mut b, &f.linear, 1.0, -1.0 - f.constant);
                for (r, d) in f.factor.iter().zip(&f.offset) {
                    push_row(&mut a, &mut b, r, -2.0, 2.0 * d);
                }
                cones.push(ConeBlock {
                    kind: ConeKind::Soc,
                    dim: 2 + f.factor.len(),
                });
            }
        }
        ConeProgram {
            num_variables: n,
            num_rows: b.len(),
            p,
            q,
            a,
            b,
            cones,
            objective_constant: obj_constant,
            objective_scale: scale,
        }
    }
}

impl ConeProgram {
    /// Plain-text dump for cross-checking against other conic solvers.
    ///
    /// ```text
    /// ratesplit-cone-program v1
    /// variables <n>
    /// rows <m>
    /// objective_scale <s>
    /// objective_constant <c>
    /// cones <count>
    /// <nonneg|soc> <dim>          (one line per cone, row order)
    /// P <nnz>                     (upper triangle, 0-based "row col value")
    /// q <n>                       (one value per line)
    /// A <nnz>                     (0-based "row col value")
    /// b <m>                       (one value per line)
    /// ```
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ratesplit-cone-program v1");
        let _ = writeln!(s, "variables {}", self.num_variables);
        let _ = writeln!(s, "rows {}", self.num_rows);
        let _ = writeln!(s, "objective_scale {:e}", self.objective_scale);
        let _ = writeln!(s, "objective_constant {:e}", self.objective_constant);
        let _ = writeln!(s, "cones {}", self.cones.len());
        for c in &self.cones {
            let name = match c.kind {
                ConeKind::NonNeg => "nonneg",
                ConeKind::Soc => "soc",
            };
            let _ = writeln!(s, "{name} {}", c.dim);
        }
        let _ = writeln!(s, "P {}", self.p.len());
        for (i, j, v) in &self.p {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        let _ = writeln!(s, "q {}", self.q.len());
        for v in &self.q {
            let _ = writeln!(s, "{v:e}");
        }
        let _ = writeln!(s, "A {}", self.a.len());
        for (i, j, v) in &self.a {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        let _ = writeln!(s, "b {}", self.b.len());
        for v in &self.b {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    /// Checks a Farkas certificate `y ∈ K*` with `Aᵀy = 0` and `bᵀy < 0`.
    pub fn certifies_infeasibility(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.num_rows {
            return false;
        }
        let by = dot(&self.b, y);
        if by >= 0.0 {
            return false;
        }
        // normalise so that bᵀy = −1
        let y: Vec<f64> = y.iter().map(|v| v / -by).collect();
        let mut aty = vec![0.0; self.num_variables];
        for &(i, j, v) in &self.a {
            aty[j] += v * y[i];
        }
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if aty.iter().any(|v| v.abs() > tol * (1.0 + ynorm)) {
            return false;
        }
        let mut row = 0;
        for c in &self.cones {
            let blk = &y[row..row + c.dim];
            let ok = match c.kind {
                ConeKind::NonNeg => blk[0] >= -tol,
                ConeKind::Soc => blk[1..].iter().map(|v| v * v).sum::<f64>().sqrt() <= blk[0] + tol * (1.0 + ynorm),
            };
            if !ok {
                return false;
            }
            row += c.dim;
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubproblemStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSolution {
    pub precoder: PrecoderMatrix,
    /// `[X0, X_{1,0}, …, X_{K,0}]`, zero where the strategy has no variable.
    pub x: Vec<f64>,
    /// `Σ w_k (X_{k,0} + ξ_k)` including the constant terms.
    pub objective: f64,
    pub status: SubproblemStatus,
    /// Dual ray proving primal infeasibility, in cone-program row order.
    pub certificate: Option<Vec<f64>>,
    pub solver_iterations: u32,
    pub solver_status: String,
}

fn settings() -> DefaultSettings<f64> {
    DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(MAX_SOLVER_ITERATIONS)
        .tol_gap_abs(SOLVER_TOL)
        .tol_gap_rel(SOLVER_TOL)
        .tol_feas(SOLVER_TOL)
        .max_threads(1)
        .build()
        .expect("static solver settings are valid")
}

/// `log2(1 + Pt·min_k ‖h_k‖²)`: no precoder can deliver a larger multicast
/// rate to every user.
pub fn multicast_rate_bound(ch: &ChannelSet) -> f64 {
    let weakest = (0..ch.num_users()).map(|k| ch.norm_sq(k)).fold(f64::INFINITY, f64::min);
    crate::rates::log2_1p(ch.power_budget() * weakest)
}

/// Cheap necessary condition for QoS feasibility. `false` proves the
/// threshold unreachable; `true` proves nothing.
pub fn passes_prescreen(ch: &ChannelSet, r0_threshold: f64) -> bool {
    r0_threshold <= multicast_rate_bound(ch)
}

/// Solves the QCQP with the interior-point cone solver.
///
/// Accepted points have their power pulled back onto the budget and must
/// satisfy every constraint to [`FEASIBILITY_TOL`].
pub fn solve(program: &Qcqp) -> SubproblemSolution {
    let cone = program.to_cone_program();
    let n = cone.num_variables;
    let p = csc_upper(n, &cone.p);
    let a = CscMatrix::new_from_triplets(
        cone.num_rows,
        n,
        cone.a.iter().map(|t| t.0).collect(),
        cone.a.iter().map(|t| t.1).collect(),
        cone.a.iter().map(|t| t.2).collect(),
    );
    let cones: Vec<SupportedConeT<f64>> = cone
        .cones
        .iter()
        .map(|c| match c.kind {
            ConeKind::NonNeg => NonnegativeConeT(c.dim),
            ConeKind::Soc => SecondOrderConeT(c.dim),
        })
        .collect();

    let layout = &program.layout;
    let failed = |status: SubproblemStatus, reason: String, iters: u32, cert: Option<Vec<f64>>| SubproblemSolution {
        precoder: PrecoderMatrix::zeros(layout.num_antennas, layout.num_users),
        x: vec![0.0; layout.num_users + 1],
        objective: f64::NAN,
        status,
        certificate: cert,
        solver_iterations: iters,
        solver_status: reason,
    };

    let mut solver = match DefaultSolver::new(&p, &cone.q, &a, &cone.b, &cones, settings()) {
        Ok(s) => s,
        Err(e) => return failed(SubproblemStatus::NumericalFailure, format!("solver setup: {e}"), 0, None),
    };
    solver.solve();
    let sol = &solver.solution;
    let status_name = format!("{:?}", sol.status);
    match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress => {
            let (pre, x) = layout.unpack(&sol.x);
            let pre = pre.clipped_to(program.power_budget);
            let violation = program.relative_violation(&pre, &x);
            if !sol.x.iter().all(|v| v.is_finite()) || violation > FEASIBILITY_TOL {
                return failed(
                    SubproblemStatus::NumericalFailure,
                    format!("{status_name}, constraint violation {violation:e}"),
                    sol.iterations,
                    None,
                );
            }
            // Reduced-accuracy exits are accepted only when feasible.
            let objective = program.objective_at(&pre, &x);
            SubproblemSolution {
                precoder: pre,
                x,
                objective,
                status: SubproblemStatus::Optimal,
                certificate: None,
                solver_iterations: sol.iterations,
                solver_status: status_name,
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => failed(
            SubproblemStatus::Infeasible,
            status_name,
            sol.iterations,
            Some(sol.z.clone()),
        ),
        _ => failed(SubproblemStatus::NumericalFailure, status_name, sol.iterations, None),
    }
}

fn csc_upper(n: usize, triplets: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    if triplets.is_empty() {
        return CscMatrix::zeros((n, n));
    }
    CscMatrix::new_from_triplets(
        n,
        n,
        triplets.iter().map(|t| t.0).collect(),
        triplets.iter().map(|t| t.1).collect(),
        triplets.iter().map(|t| t.2).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{deterministic_channel, random_channel};
    use crate::test_util::random_precoder;
    use crate::wmmse::{mmse_state, mse, surrogate_mse};

    fn spec_for<'a>(
        ch: &'a ChannelSet,
        w: &'a [f64],
        st: &'a WmmseState,
        r0: f64,
        variant: Variant,
    ) -> SubproblemSpec<'a> {
        SubproblemSpec {
            channel: ch,
            wsr_weights: w,
            wmmse_state: st,
            r0_threshold: r0,
            power_budget: ch.power_budget(),
            variant,
        }
    }

    fn setup() -> (ChannelSet, PrecoderMatrix) {
        let ch = deterministic_channel(4, 1.0, std::f64::consts::PI / 9.0)
            .unwrap()
            .with_power_budget(100.0)
            .unwrap();
        let p = random_precoder(5, 4, 2, 100.0);
        (ch, p)
    }

    #[test]
    fn variable_counts() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &p);
        let w = [1.0, 1.0];
        let rs = build_rs_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Rs)).unwrap();
        assert_eq!(rs.num_variables(), 27);
        let mulp = build_mulp_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Mulp)).unwrap();
        assert_eq!(mulp.num_variables(), 25);
        let order = DecodingOrder::new(0, 1);
        let sc = build_scsic_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::ScSic(order))).unwrap();
        assert_eq!(sc.num_variables(), 18);
        assert!(build_rs_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Mulp)).is_err());
    }

    #[test]
    fn scsic_requires_two_users() {
        let ch = random_channel(1, 2, 3).unwrap();
        let p = random_precoder(2, 2, 3, 1.0);
        let st = mmse_state(&ch, &p);
        let w = [1.0; 3];
        let order = DecodingOrder::new(0, 1);
        assert!(matches!(
            build_scsic_subproblem(&spec_for(&ch, &w, &st, 0.0, Variant::ScSic(order))),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn objective_matches_wmse_expansion() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &random_precoder(9, 4, 2, 100.0));
        let w = [1.0, 0.3];
        let prog = build_rs_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Rs)).unwrap();
        let x = [-0.5, -0.2, -0.1];
        let mut expected = 0.0;
        for k in 0..2 {
            let (_, ek) = mse(&ch, &p, &st, k);
            expected += w[k] * (x[k + 1] + surrogate_mse(st.u_private[k], ek));
        }
        assert!((prog.objective_at(&p, &x) - expected).abs() < 1e-10 * expected.abs().max(1.0));

        // constraint k evaluates ξ_{k,0} − Σx − log2(e)
        let v = prog.layout.pack(&p, &x);
        for k in 0..2 {
            let (e0, _) = mse(&ch, &p, &st, k);
            let xi0 = surrogate_mse(st.u_common[k], e0);
            let c = prog.constraints.iter().find(|c| c.kind == ConstraintKind::CommonDecoding(k)).unwrap();
            assert!((c.f.eval(&v) - (xi0 - x.iter().sum::<f64>() - LOG2_E)).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_parts_are_psd() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &p);
        let w = [1.0, 10.0];
        let prog = build_rs_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Rs)).unwrap();
        let mut rng = crate::channel::rng(11);
        for f in std::iter::once(&prog.objective).chain(prog.constraints.iter().map(|c| &c.f)) {
            let g = f.gram();
            for _ in 0..50 {
                let v: Vec<f64> = crate::channel::complex_gaussian_vec(&mut rng, g.len()).iter().map(|c| c.re).collect();
                let q: f64 = (0..g.len()).map(|i| v[i] * dot(&g[i], &v)).sum();
                assert!(q >= -1e-9);
            }
        }
    }

    #[test]
    fn pack_roundtrip() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &p);
        let w = [1.0, 1.0];
        let prog = build_rs_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Rs)).unwrap();
        let x = vec![-1.0, -0.25, -0.5];
        let (q, y) = prog.layout.unpack(&prog.layout.pack(&p, &x));
        assert_eq!(q, p);
        assert_eq!(y, x);
    }

    #[test]
    fn solver_improves_on_current_point() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &p);
        let r = crate::rates::rate_report(&ch, &p, None);
        let r0 = r.common_rate.min(0.5);
        let w = [1.0, 1.0];
        let prog = build_rs_subproblem(&spec_for(&ch, &w, &st, r0, Variant::Rs)).unwrap();
        let x_hat = [-r0, 0.0, 0.0];
        assert!(prog.max_violation(&p, &x_hat) <= 1e-9);
        let sol = solve(&prog);
        assert_eq!(sol.status, SubproblemStatus::Optimal, "{}", sol.solver_status);
        assert!(sol.objective <= prog.objective_at(&p, &x_hat) + 1e-8);
        assert!(sol.precoder.total_power() <= 100.0 * (1.0 + 1e-7));
        assert!(sol.x[0] <= -r0 + 1e-7);
        assert!(sol.x[1] <= 1e-7 && sol.x[2] <= 1e-7);

        let again = solve(&prog);
        assert!((again.objective - sol.objective).abs() <= 1e-9);
    }

    #[test]
    fn scsic_solution_has_no_first_user_private_power() {
        let (ch, _) = setup();
        let order = DecodingOrder::new(0, 1);
        let mut p = random_precoder(3, 4, 2, 100.0);
        p.set_column(1, vec![Complex64::new(0.0, 0.0); 4]);
        let st = mmse_state(&ch, &p);
        let w = [1.0, 1.0];
        let r0 = crate::rates::rate_report(&ch, &p, None).common_rate.min(0.5);
        let prog = build_scsic_subproblem(&spec_for(&ch, &w, &st, r0, Variant::ScSic(order))).unwrap();
        let sol = solve(&prog);
        assert_eq!(sol.status, SubproblemStatus::Optimal);
        assert_eq!(sol.precoder.column_power(1), 0.0);
        assert_eq!(sol.x[2], 0.0);
    }

    #[test]
    fn unreachable_threshold_is_certified() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &p);
        let w = [1.0, 1.0];
        let prog = build_rs_subproblem(&spec_for(&ch, &w, &st, 50.0, Variant::Rs)).unwrap();
        let sol = solve(&prog);
        assert_eq!(sol.status, SubproblemStatus::Infeasible);
        let cert = sol.certificate.unwrap();
        assert!(prog.to_cone_program().certifies_infeasibility(&cert, 1e-6));
        assert!(!passes_prescreen(&ch, 50.0));
        assert!(passes_prescreen(&ch, 0.5));
        assert!((multicast_rate_bound(&ch) - 401f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn global_phase_rotation_keeps_objective() {
        let (ch, p) = setup();
        let w = [1.0, 0.5];
        let solve_on = |ch: &ChannelSet, p: &PrecoderMatrix| {
            let st = mmse_state(ch, p);
            let prog = build_rs_subproblem(&spec_for(ch, &w, &st, 0.0, Variant::Rs)).unwrap();
            solve(&prog).objective
        };
        let a = solve_on(&ch, &p);
        let b = solve_on(&ch.rotated(0.7), &p);
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn dump_lists_every_block() {
        let (ch, p) = setup();
        let st = mmse_state(&ch, &p);
        let w = [1.0, 1.0];
        let prog = build_mulp_subproblem(&spec_for(&ch, &w, &st, 0.5, Variant::Mulp)).unwrap();
        let cone = prog.to_cone_program();
        let text = cone.dump();
        assert!(text.starts_with("ratesplit-cone-program v1\nvariables 25\n"));
        assert_eq!(cone.cones.iter().map(|c| c.dim).sum::<usize>(), cone.num_rows);
        // two decoding cones, one QoS row, one power cone
        assert_eq!(cone.cones.len(), 4);
        assert!(text.contains(&format!("A {}", cone.a.len())));
    }
}
