//! Builds the penalized evaluation function for a grid.
//!
//! Every quantity is a multilinear [`Poly`] over the switch variables. Fixed
//! topology (feeder attachments on the diagonal, missing switches off it) is
//! folded in as constants before expansion.
//!
//! Conventions that differ from a literal reading of the double sums:
//! - the radial term sums unordered feeder pairs, and its intermediate block
//!   `k` ranges over blocks other than the pair itself;
//! - the T-shaped max-connection term orders its three ends as `k > i`,
//!   `l > i`, `l > k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GridError, ObjectiveError};
use crate::grid::{BlockId, Grid};
use crate::poly::{HuboTerm, Poly};

pub const DEFAULT_EXPONENT: u32 = 4;
/// Ratio between the default penalty constant and the loss upper bound.
pub const DEFAULT_PENALTY_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub c_penalty: f64,
    #[serde(rename = "L")]
    pub exponent_l: u32,
}

impl PenaltyParams {
    pub fn new(c_penalty: f64, exponent_l: u32) -> Result<Self, ObjectiveError> {
        if !(c_penalty > 0.0) || !c_penalty.is_finite() {
            return Err(ObjectiveError::Penalty(c_penalty));
        }
        if exponent_l < 2 || !exponent_l.is_multiple_of(2) {
            return Err(ObjectiveError::Exponent(exponent_l));
        }
        Ok(PenaltyParams {
            c_penalty,
            exponent_l,
        })
    }

    /// `C = 1e6 * sum_i R_i (sum_j I_j)^2`, `L = 4`.
    pub fn default_for(grid: &Grid) -> Self {
        PenaltyParams {
            c_penalty: default_c_penalty(grid),
            exponent_l: DEFAULT_EXPONENT,
        }
    }
}

/// Upper bound of the loss: every block carrying the whole grid load.
pub fn loss_upper_bound(grid: &Grid) -> f64 {
    let total: f64 = grid.blocks().iter().map(|b| b.load_current).sum();
    grid.blocks()
        .iter()
        .map(|b| b.resistance * total * total)
        .sum()
}

pub fn default_c_penalty(grid: &Grid) -> f64 {
    let bound = loss_upper_bound(grid);
    // a lossless grid still needs a positive constant
    DEFAULT_PENALTY_FACTOR * if bound > 0.0 { bound } else { 1.0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Power,
    Radial,
    Maxconn,
    Blackout,
    Current,
    MaxV,
    MinV,
    Total,
}

impl Component {
    pub const ALL: [Component; 8] = [
        Component::Power,
        Component::Radial,
        Component::Maxconn,
        Component::Blackout,
        Component::Current,
        Component::MaxV,
        Component::MinV,
        Component::Total,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Power => "power",
            Component::Radial => "radial",
            Component::Maxconn => "maxconn",
            Component::Blackout => "blackout",
            Component::Current => "current",
            Component::MaxV => "max_v",
            Component::MinV => "min_v",
            Component::Total => "total",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveBundle {
    pub params: PenaltyParams,
    pub power: Poly,
    pub radial: Poly,
    pub maxconn: Poly,
    pub blackout: Poly,
    pub current: Poly,
    pub max_v: Poly,
    pub min_v: Poly,
    pub total: Poly,
    pub per_block_current: BTreeMap<BlockId, Poly>,
    pub per_block_voltage: BTreeMap<BlockId, Poly>,
    pub per_block_cum_drop: BTreeMap<BlockId, Poly>,
}

/// HUBO document tagged with the component it encodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDocument {
    pub component: Component,
    pub c_penalty: f64,
    #[serde(rename = "L")]
    pub exponent_l: u32,
    pub offset: f64,
    pub terms: Vec<HuboTerm>,
}

impl ObjectiveBundle {
    pub fn component(&self, c: Component) -> &Poly {
        match c {
            Component::Power => &self.power,
            Component::Radial => &self.radial,
            Component::Maxconn => &self.maxconn,
            Component::Blackout => &self.blackout,
            Component::Current => &self.current,
            Component::MaxV => &self.max_v,
            Component::MinV => &self.min_v,
            Component::Total => &self.total,
        }
    }

    pub fn document(&self, c: Component) -> ComponentDocument {
        let hubo = self.component(c).to_hubo();
        ComponentDocument {
            component: c,
            c_penalty: self.params.c_penalty,
            exponent_l: self.params.exponent_l,
            offset: hubo.offset,
            terms: hubo.terms,
        }
    }
}

/// Expansion engine, generic over where `q_ij` comes from so the folded build
/// can be checked against a build over free variables.
pub(crate) struct Expander<'g, Q: Fn(usize, usize) -> Poly> {
    grid: &'g Grid,
    q: Q,
}

fn folded(grid: &Grid) -> Expander<'_, impl Fn(usize, usize) -> Poly + '_> {
    Expander::new(grid, move |i, j| grid.q(i, j).to_poly())
}

impl<'g, Q: Fn(usize, usize) -> Poly> Expander<'g, Q> {
    pub(crate) fn new(grid: &'g Grid, q: Q) -> Self {
        Expander { grid, q }
    }

    fn n(&self) -> usize {
        self.grid.block_count()
    }

    fn load(&self, i: usize) -> f64 {
        self.grid.blocks()[i].load_current
    }

    fn resistance(&self, i: usize) -> f64 {
        self.grid.blocks()[i].resistance
    }

    /// Feeder voltage, 0 where no feeder is attached (always multiplied by `q_ii`).
    fn feeder(&self, i: usize) -> f64 {
        self.grid.feeder_voltage(i).unwrap_or(0.0)
    }

    pub(crate) fn total_current(&self, i: usize) -> Poly {
        let n = self.n();
        let q = &self.q;
        let mut out = Poly::constant(self.load(i));

        // adjacent block j fed only through i
        for j in (0..n).filter(|&j| j != i) {
            let mut prod = q(i, j);
            for k in (0..n).filter(|&k| k != i) {
                if prod.is_zero() {
                    break;
                }
                prod = &prod * &q(j, k).complement();
            }
            out += &prod.scale(self.load(j));
        }

        // two subsequent blocks i - l - m
        for l in (0..n).filter(|&l| l != i) {
            let qil = q(i, l);
            if qil.is_zero() {
                continue;
            }
            let head = &qil * &q(l, l).complement();
            for m in (0..n).filter(|&m| m != i && m != l) {
                let prod = &(&head * &q(l, m)) * &q(m, m).complement();
                out += &prod.scale(self.load(l) + self.load(m));
            }
        }
        out
    }

    pub(crate) fn radial(&self, c: f64) -> Poly {
        let n = self.n();
        let q = &self.q;
        let mut out = Poly::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let fed = &q(i, i) * &q(j, j);
                if fed.is_zero() {
                    continue;
                }
                let mut bracket = q(i, j);
                for k in (0..n).filter(|&k| k != i && k != j) {
                    bracket += &(&q(i, k) * &q(k, j));
                }
                out += &(&fed * &bracket);
            }
        }
        out.scale(c)
    }

    pub(crate) fn maxconn(&self, c: f64) -> Poly {
        let n = self.n();
        let q = &self.q;
        let not_both = |a: usize, b: usize| (&q(a, a) * &q(b, b)).complement();
        let mut out = Poly::zero();

        // four blocks in a line; l == i closes a three-cycle
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let qij = q(i, j);
                if qij.is_zero() {
                    continue;
                }
                for k in (0..n).filter(|&k| k != j && k != i) {
                    let qijk = &qij * &q(j, k);
                    if qijk.is_zero() {
                        continue;
                    }
                    let excl_ik = &qijk * &not_both(i, k);
                    for l in (i..n).filter(|&l| l != j && l != k) {
                        let term = &(&excl_ik * &q(k, l)) * &not_both(j, l);
                        out += &term;
                    }
                }
            }
        }

        // T shape centred on j with ends i < k < l
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let qij = q(i, j);
                if qij.is_zero() {
                    continue;
                }
                for k in ((i + 1)..n).filter(|&k| k != j) {
                    let qijk = &qij * &q(j, k);
                    if qijk.is_zero() {
                        continue;
                    }
                    for l in ((k + 1)..n).filter(|&l| l != j) {
                        let term = &(&(&(&qijk * &q(j, l)) * &not_both(i, k)) * &not_both(k, l))
                            * &not_both(l, i);
                        out += &term;
                    }
                }
            }
        }
        out.scale(c)
    }

    pub(crate) fn blackout(&self, c: f64) -> Poly {
        let mut out = Poly::zero();
        for term in self.blackout_by_block(c) {
            out += &term;
        }
        out
    }

    pub(crate) fn blackout_by_block(&self, c: f64) -> Vec<Poly> {
        let n = self.n();
        let q = &self.q;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut prod = q(i, i).complement();
            for j in (0..n).filter(|&j| j != i) {
                if prod.is_zero() {
                    break;
                }
                prod = &prod * &(&q(j, j) * &q(i, j)).complement();
            }
            for k in (0..n).filter(|&k| k != i) {
                for l in (0..n).filter(|&l| l != i && l != k) {
                    if prod.is_zero() {
                        break;
                    }
                    let path = &(&q(l, l) * &q(i, k)) * &q(k, l);
                    if !path.is_zero() {
                        prod = &prod * &path.complement();
                    }
                }
            }
            out.push(prod.scale(c));
        }
        out
    }

    /// Shared shape of the block voltage and cumulative-drop polynomials:
    /// `q_ii * own + (1 - q_ii) * [one-hop + two-hop]`, where the hop terms are
    /// built from `feeder_term(l)` and the drops along the path.
    fn supply_path_poly(
        &self,
        i: usize,
        currents: &[Poly],
        own: f64,
        feeder_term: impl Fn(usize) -> f64,
        drop_sign: f64,
    ) -> Poly {
        let n = self.n();
        let q = &self.q;
        let drop = |m: usize| currents[m].scale(self.resistance(m) * drop_sign);
        let qii = q(i, i);
        let mut bracket = Poly::zero();
        for j in (0..n).filter(|&j| j != i) {
            let gate = &q(i, j) * &q(j, j);
            if gate.is_zero() {
                continue;
            }
            let value = Poly::constant(feeder_term(j)) + &drop(j);
            bracket += &(&gate * &value);
        }
        for k in (0..n).filter(|&k| k != i) {
            let qik = q(i, k);
            if qik.is_zero() {
                continue;
            }
            for l in (0..n).filter(|&l| l != k) {
                let gate = &(&qik * &q(k, l)) * &q(l, l);
                if gate.is_zero() {
                    continue;
                }
                let value = Poly::constant(feeder_term(l)) + &drop(k) + &drop(l);
                bracket += &(&gate * &value);
            }
        }
        &qii.scale(own) + &(&qii.complement() * &bracket)
    }

    pub(crate) fn voltage(&self, i: usize, currents: &[Poly]) -> Poly {
        self.supply_path_poly(i, currents, self.feeder(i), |l| self.feeder(l), -1.0)
    }

    pub(crate) fn cum_drop(&self, i: usize, currents: &[Poly]) -> Poly {
        let fmax = self.grid.reference_voltage();
        let feeder_gap = |l: usize| {
            if self.grid.has_feeder(l) {
                fmax - self.feeder(l)
            } else {
                0.0
            }
        };
        self.supply_path_poly(i, currents, feeder_gap(i), feeder_gap, 1.0)
    }
}

fn ratio_power_penalty(polys: &[Poly], limits: &[f64], params: PenaltyParams) -> Poly {
    let mut out = Poly::zero();
    for (p, &limit) in polys.iter().zip(limits) {
        out += &p.scale(1.0 / limit).pow(params.exponent_l);
    }
    out.scale(params.c_penalty)
}

fn dense(grid: &Grid, i: BlockId) -> Result<usize, GridError> {
    grid.block(i).map(|_| i.index())
}

fn all_currents(grid: &Grid) -> Vec<Poly> {
    let e = folded(grid);
    (0..grid.block_count())
        .map(|i| e.total_current(i))
        .collect()
}

/// Total current through block `i`: own load, adjacent blocks fed only via
/// `i`, and two-block chains hanging off `i`.
pub fn total_current_poly(grid: &Grid, i: BlockId) -> Result<Poly, GridError> {
    let i = dense(grid, i)?;
    Ok(folded(grid).total_current(i))
}

pub fn power_loss_poly(grid: &Grid) -> Poly {
    power_from_currents(grid, &all_currents(grid))
}

fn power_from_currents(grid: &Grid, currents: &[Poly]) -> Poly {
    let mut out = Poly::zero();
    for (b, cur) in grid.blocks().iter().zip(currents) {
        out += &cur.pow(2).scale(b.resistance);
    }
    out
}

pub fn radial_penalty(grid: &Grid, params: PenaltyParams) -> Poly {
    folded(grid).radial(params.c_penalty)
}

pub fn maxconn_penalty(grid: &Grid, params: PenaltyParams) -> Poly {
    folded(grid).maxconn(params.c_penalty)
}

pub fn blackout_penalty(grid: &Grid, params: PenaltyParams) -> Poly {
    folded(grid).blackout(params.c_penalty)
}

/// Per-block summands of the blackout penalty, indexed densely.
pub fn blackout_by_block(grid: &Grid, c: f64) -> Vec<Poly> {
    folded(grid).blackout_by_block(c)
}

pub fn current_penalty(grid: &Grid, params: PenaltyParams) -> Poly {
    let limits: Vec<f64> = grid.blocks().iter().map(|b| b.max_current).collect();
    ratio_power_penalty(&all_currents(grid), &limits, params)
}

pub fn voltage_poly(grid: &Grid, i: BlockId) -> Result<Poly, GridError> {
    let i = dense(grid, i)?;
    Ok(folded(grid).voltage(i, &all_currents(grid)))
}

pub fn max_voltage_penalty(grid: &Grid, params: PenaltyParams) -> Poly {
    let e = folded(grid);
    let currents = all_currents(grid);
    let volts: Vec<Poly> = (0..grid.block_count())
        .map(|i| e.voltage(i, &currents))
        .collect();
    let limits: Vec<f64> = grid.blocks().iter().map(|b| b.max_voltage).collect();
    ratio_power_penalty(&volts, &limits, params)
}

pub fn cumulative_drop_poly(grid: &Grid, i: BlockId) -> Result<Poly, GridError> {
    let i = dense(grid, i)?;
    Ok(folded(grid).cum_drop(i, &all_currents(grid)))
}

pub fn min_voltage_penalty(grid: &Grid, params: PenaltyParams) -> Poly {
    let e = folded(grid);
    let currents = all_currents(grid);
    let drops: Vec<Poly> = (0..grid.block_count())
        .map(|i| e.cum_drop(i, &currents))
        .collect();
    let limits: Vec<f64> = grid.blocks().iter().map(|b| b.max_cum_drop).collect();
    ratio_power_penalty(&drops, &limits, params)
}

pub fn build_objective(grid: &Grid, params: PenaltyParams) -> ObjectiveBundle {
    let e = folded(grid);
    let n = grid.block_count();
    let currents: Vec<Poly> = (0..n).map(|i| e.total_current(i)).collect();
    let volts: Vec<Poly> = (0..n).map(|i| e.voltage(i, &currents)).collect();
    let drops: Vec<Poly> = (0..n).map(|i| e.cum_drop(i, &currents)).collect();

    let limit = |f: fn(&crate::grid::Block) -> f64| grid.blocks().iter().map(f).collect::<Vec<_>>();
    let power = power_from_currents(grid, &currents);
    let radial = e.radial(params.c_penalty);
    let maxconn = e.maxconn(params.c_penalty);
    let blackout = e.blackout(params.c_penalty);
    let current = ratio_power_penalty(&currents, &limit(|b| b.max_current), params);
    let max_v = ratio_power_penalty(&volts, &limit(|b| b.max_voltage), params);
    let min_v = ratio_power_penalty(&drops, &limit(|b| b.max_cum_drop), params);

    let mut total = Poly::zero();
    for part in [
        &power, &radial, &maxconn, &blackout, &current, &max_v, &min_v,
    ] {
        total += part;
    }

    let keyed = |v: Vec<Poly>| -> BTreeMap<BlockId, Poly> {
        v.into_iter()
            .enumerate()
            .map(|(k, p)| (BlockId::from_index(k), p))
            .collect()
    };
    ObjectiveBundle {
        params,
        power,
        radial,
        maxconn,
        blackout,
        current,
        max_v,
        min_v,
        total,
        per_block_current: keyed(currents),
        per_block_voltage: keyed(volts),
        per_block_cum_drop: keyed(drops),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_grid, six_block};
    use crate::grid::{Block, Feeder, GridDocument, QRef};
    use crate::poly::{Assignment, VarId};

    fn pair_index(n: usize, i: usize, j: usize) -> usize {
        let (a, b) = (i.min(j), i.max(j));
        // row-major upper triangle including the diagonal
        a * n - a * (a + 1) / 2 + b
    }

    fn free(grid: &Grid) -> Expander<'_, impl Fn(usize, usize) -> Poly + '_> {
        let n = grid.block_count();
        Expander::new(grid, move |i, j| Poly::var(VarId(pair_index(n, i, j))))
    }

    /// Substitutes the grid's topology into a polynomial over free pair variables.
    fn fold(grid: &Grid, p: &Poly) -> Poly {
        let n = grid.block_count();
        let mut fixes = BTreeMap::new();
        let mut rename = BTreeMap::new();
        for i in 0..n {
            for j in i..n {
                let v = VarId(pair_index(n, i, j));
                match grid.q(i, j) {
                    QRef::Const0 => {
                        fixes.insert(v, false);
                    }
                    QRef::Const1 => {
                        fixes.insert(v, true);
                    }
                    QRef::Var(w) => {
                        rename.insert(v, w);
                    }
                }
            }
        }
        p.substitute(&fixes).map_vars(|v| rename[&v])
    }

    /// Coefficient-wise equality up to rounding relative to the overall scale.
    fn close(a: &Poly, b: &Poly) {
        let tol = 1e-12 * a.abs_coeff_sum().max(b.abs_coeff_sum()).max(1.0);
        let diff = a - b;
        for (m, c) in diff.terms() {
            assert!(c.abs() <= tol, "{m:?} differs by {c}\n{a}\n{b}");
        }
    }

    fn square4() -> Grid {
        Grid::from_document(GridDocument {
            blocks: (0..4)
                .map(|k| Block {
                    id: BlockId::from_index(k),
                    load_current: [5.0, 9.0, 4.0, 7.0][k],
                    resistance: [0.1, 0.2, 0.15, 0.05][k],
                    max_current: 30.0,
                    max_voltage: 120.0,
                    max_cum_drop: 10.0,
                })
                .collect(),
            feeders: vec![
                Feeder {
                    block: BlockId(1),
                    voltage: 100.0,
                },
                Feeder {
                    block: BlockId(4),
                    voltage: 98.0,
                },
            ],
            switches: vec![[1, 2], [2, 3], [3, 4], [1, 3]],
            reference_voltage: None,
        })
        .unwrap()
    }

    #[test]
    fn folding_matches_free_expansion_on_six_block() {
        let g = six_block();
        let folded_e = folded(&g);
        let free_e = free(&g);
        for i in 0..6 {
            close(
                &folded_e.total_current(i),
                &fold(&g, &free_e.total_current(i)),
            );
        }
        close(&folded_e.radial(3.0), &fold(&g, &free_e.radial(3.0)));
        close(&folded_e.maxconn(3.0), &fold(&g, &free_e.maxconn(3.0)));
    }

    #[test]
    fn folding_matches_free_expansion_on_small_grids() {
        let mut grids = vec![square4()];
        grids.extend((0..4).map(|s| random_grid(s, 4, 5)));
        for g in &grids {
            let n = g.block_count();
            let fe = folded(g);
            let xe = free(g);
            close(&fe.blackout(2.0), &fold(g, &xe.blackout(2.0)));
            let fc: Vec<Poly> = (0..n).map(|i| fe.total_current(i)).collect();
            let xc: Vec<Poly> = (0..n).map(|i| xe.total_current(i)).collect();
            for i in 0..n {
                close(&fe.voltage(i, &fc), &fold(g, &xe.voltage(i, &xc)));
                close(&fe.cum_drop(i, &fc), &fold(g, &xe.cum_drop(i, &xc)));
            }
        }
    }

    #[test]
    fn penalties_scale_linearly_in_c() {
        let g = square4();
        let a = build_objective(&g, PenaltyParams::new(1.0, 4).unwrap());
        let b = build_objective(&g, PenaltyParams::new(8.0, 4).unwrap());
        for c in [
            Component::Radial,
            Component::Maxconn,
            Component::Blackout,
            Component::Current,
            Component::MaxV,
            Component::MinV,
        ] {
            close(b.component(c), &a.component(c).scale(8.0));
        }
        assert_eq!(a.power, b.power);
    }

    #[test]
    fn total_is_sum_of_parts_pointwise() {
        let g = square4();
        let obj = build_objective(&g, PenaltyParams::new(50.0, 2).unwrap());
        for idx in 0..1u64 << g.n_vars() {
            let a = Assignment::from_index(idx, g.n_vars());
            let parts: f64 = Component::ALL[..7]
                .iter()
                .map(|&c| obj.component(c).eval(&a).unwrap())
                .sum();
            let total = obj.total.eval(&a).unwrap();
            assert!((parts - total).abs() <= 1e-9 * total.abs().max(1.0));
        }
    }
}
