//! Graph-side ground truth for a switch configuration.
//!
//! Physical mode works only on the closed-switch graph: components, hop
//! depths from the feeder, tree flow, voltages along tree edges. Paper mode
//! instead asks whether each penalty polynomial evaluates to zero.
//!
//! The physical max-connection rule (depth at most two hops from the feeder
//! block, no loops) is an interpretation of the three-level current model,
//! not a formula taken from the objective.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, PolyError, SolverError};
use crate::grid::{BlockId, Grid};
use crate::objective::{build_objective, ObjectiveBundle, PenaltyParams};
use crate::poly::{Assignment, Monomial, Poly, VarId};

/// Same guard as exhaustive minimization.
pub const ENUMERATION_LIMIT: usize = 24;
/// Hop limit from the feeder block in physical mode.
pub const MAX_PHYSICAL_DEPTH: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Physical,
    Paper,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "physical" => Ok(Mode::Physical),
            "paper" => Ok(Mode::Paper),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergizedComponent {
    pub blocks: Vec<BlockId>,
    pub feeder_blocks: Vec<BlockId>,
    /// Hop distance from the nearest feeder block; empty for unfed components.
    pub depth: BTreeMap<BlockId, usize>,
    pub edge_count: usize,
}

impl EnergizedComponent {
    pub fn is_tree(&self) -> bool {
        self.edge_count + 1 == self.blocks.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    RadialTwoFeeders,
    MaxconnLoop,
    MaxconnDepth,
    MaxconnTerm,
    Blackout,
    MaxCurrent,
    MaxVoltage,
    MinVoltage,
    Radial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub blocks: Vec<BlockId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monomial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
}

impl Violation {
    fn blocks(code: ViolationCode, blocks: Vec<BlockId>) -> Self {
        Violation {
            code,
            blocks,
            monomial: None,
            value: None,
            limit: None,
        }
    }

    fn limit(code: ViolationCode, block: BlockId, value: f64, limit: f64) -> Self {
        Violation {
            value: Some(value),
            limit: Some(limit),
            ..Violation::blocks(code, vec![block])
        }
    }
}

/// Raw penalty values at the checked assignment (paper mode only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValues {
    pub power: f64,
    pub radial: f64,
    pub maxconn: f64,
    pub blackout: f64,
    pub current: f64,
    pub max_v: f64,
    pub min_v: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub mode: Mode,
    pub bits: String,
    pub feasible: bool,
    pub radial_ok: bool,
    pub maxconn_ok: bool,
    pub blackout_ok: bool,
    pub current_ok: bool,
    pub max_v_ok: bool,
    pub min_v_ok: bool,
    pub violations: Vec<Violation>,
    pub currents: BTreeMap<BlockId, f64>,
    pub voltages: BTreeMap<BlockId, f64>,
    pub loss_watts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalties: Option<PenaltyValues>,
}

impl FeasibilityReport {
    fn new(mode: Mode, a: &Assignment) -> Self {
        FeasibilityReport {
            mode,
            bits: a.to_bit_string(),
            feasible: false,
            radial_ok: true,
            maxconn_ok: true,
            blackout_ok: true,
            current_ok: true,
            max_v_ok: true,
            min_v_ok: true,
            violations: Vec::new(),
            currents: BTreeMap::new(),
            voltages: BTreeMap::new(),
            loss_watts: None,
            penalties: None,
        }
    }

    fn finish(mut self) -> Self {
        self.feasible = self.radial_ok
            && self.maxconn_ok
            && self.blackout_ok
            && self.current_ok
            && self.max_v_ok
            && self.min_v_ok;
        self
    }

    pub fn connectivity_ok(&self) -> bool {
        self.radial_ok && self.maxconn_ok && self.blackout_ok
    }
}

fn closed_adjacency(grid: &Grid, a: &Assignment) -> Result<Vec<Vec<usize>>, PolyError> {
    let mut adj = vec![Vec::new(); grid.block_count()];
    for (v, (x, y)) in grid.variable_order() {
        if a.get(v).ok_or(PolyError::MissingVariable(v))? {
            adj[x.index()].push(y.index());
            adj[y.index()].push(x.index());
        }
    }
    Ok(adj)
}

pub fn energized_components(
    grid: &Grid,
    a: &Assignment,
) -> Result<Vec<EnergizedComponent>, PolyError> {
    let adj = closed_adjacency(grid, a)?;
    let n = grid.block_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            members.push(u);
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        let edge_count = members.iter().map(|&u| adj[u].len()).sum::<usize>() / 2;
        let feeders: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&u| grid.has_feeder(u))
            .collect();

        // multi-source BFS from the feeder blocks
        let mut depth = BTreeMap::new();
        let mut queue: VecDeque<usize> = feeders.iter().copied().collect();
        for &f in &feeders {
            depth.insert(BlockId::from_index(f), 0);
        }
        while let Some(u) = queue.pop_front() {
            let d = depth[&BlockId::from_index(u)];
            for &w in &adj[u] {
                let id = BlockId::from_index(w);
                if let Entry::Vacant(slot) = depth.entry(id) {
                    slot.insert(d + 1);
                    queue.push_back(w);
                }
            }
        }

        out.push(EnergizedComponent {
            blocks: members.iter().map(|&u| BlockId::from_index(u)).collect(),
            feeder_blocks: feeders.iter().map(|&u| BlockId::from_index(u)).collect(),
            depth,
            edge_count,
        });
    }
    Ok(out)
}

/// Per-block current and voltage of one radial component rooted at its feeder.
struct TreeFlow {
    current: BTreeMap<BlockId, f64>,
    voltage: BTreeMap<BlockId, f64>,
}

fn tree_flow(
    grid: &Grid,
    adj: &[Vec<usize>],
    comp: &EnergizedComponent,
) -> Result<TreeFlow, FlowError> {
    let first = comp.blocks[0];
    let root = match comp.feeder_blocks.as_slice() {
        [] => return Err(FlowError::Unfed(first)),
        [f] => f.index(),
        _ => return Err(FlowError::MultipleFeeders(first)),
    };
    if !comp.is_tree() {
        return Err(FlowError::Cycle(first));
    }
    let n = grid.block_count();
    let mut parent = vec![usize::MAX; n];
    let mut order = vec![root];
    parent[root] = root;
    let mut k = 0;
    while k < order.len() {
        let u = order[k];
        for &w in &adj[u] {
            if parent[w] == usize::MAX {
                parent[w] = u;
                order.push(w);
            }
        }
        k += 1;
    }
    let blocks = grid.blocks();
    let mut current = vec![0.0; n];
    for &u in order.iter().rev() {
        current[u] += blocks[u].load_current;
        if u != root {
            current[parent[u]] += current[u];
        }
    }
    let mut voltage = vec![0.0; n];
    voltage[root] = grid.feeder_voltage(root).expect("root carries the feeder");
    for &u in order.iter().skip(1) {
        let p = parent[u];
        voltage[u] = voltage[p] - blocks[p].resistance * current[p];
    }
    Ok(TreeFlow {
        current: order
            .iter()
            .map(|&u| (BlockId::from_index(u), current[u]))
            .collect(),
        voltage: order
            .iter()
            .map(|&u| (BlockId::from_index(u), voltage[u]))
            .collect(),
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ValidationError {
    #[error(transparent)]
    Assignment(#[from] PolyError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn whole_flow(grid: &Grid, a: &Assignment) -> Result<TreeFlow, ValidationError> {
    let adj = closed_adjacency(grid, a)?;
    let mut all = TreeFlow {
        current: BTreeMap::new(),
        voltage: BTreeMap::new(),
    };
    for comp in energized_components(grid, a)? {
        let flow = tree_flow(grid, &adj, &comp)?;
        all.current.extend(flow.current);
        all.voltage.extend(flow.voltage);
    }
    Ok(all)
}

/// Tree-flow current through every block: own load plus all downstream loads.
pub fn physical_currents(
    grid: &Grid,
    a: &Assignment,
) -> Result<BTreeMap<BlockId, f64>, ValidationError> {
    Ok(whole_flow(grid, a)?.current)
}

pub fn physical_voltages(
    grid: &Grid,
    a: &Assignment,
) -> Result<BTreeMap<BlockId, f64>, ValidationError> {
    Ok(whole_flow(grid, a)?.voltage)
}

pub fn physical_loss(grid: &Grid, a: &Assignment) -> Result<f64, ValidationError> {
    let currents = physical_currents(grid, a)?;
    Ok(loss_of(grid, &currents))
}

fn loss_of(grid: &Grid, currents: &BTreeMap<BlockId, f64>) -> f64 {
    currents
        .iter()
        .map(|(b, i)| grid.blocks()[b.index()].resistance * i * i)
        .sum()
}

/// Label such as `q1_4*q4_6*q3_6` for a monomial over switch variables.
pub fn monomial_label(grid: &Grid, m: &Monomial) -> String {
    let order = grid.variable_order();
    m.vars()
        .iter()
        .map(|v| {
            let (a, b) = order[v.0].1;
            format!("q{a}_{b}")
        })
        .collect::<Vec<_>>()
        .join("*")
}

fn monomial_blocks(grid: &Grid, m: &Monomial) -> Vec<BlockId> {
    let order = grid.variable_order();
    let mut blocks: Vec<BlockId> = m
        .vars()
        .iter()
        .flat_map(|v| {
            let (a, b) = order[v.0].1;
            [a, b]
        })
        .collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks
}

/// Checks configurations of one grid; the objective bundle for paper mode is
/// built on first use and reused.
pub struct Validator<'g> {
    grid: &'g Grid,
    bundle: std::sync::OnceLock<(ObjectiveBundle, Vec<Poly>)>,
}

impl<'g> Validator<'g> {
    pub fn new(grid: &'g Grid) -> Self {
        Validator {
            grid,
            bundle: std::sync::OnceLock::new(),
        }
    }

    /// Penalty-zero checks do not depend on the size of C, so the defaults are used.
    fn paper(&self) -> &(ObjectiveBundle, Vec<Poly>) {
        self.bundle.get_or_init(|| {
            let params = PenaltyParams::default_for(self.grid);
            let bundle = build_objective(self.grid, params);
            let blackout = crate::objective::blackout_by_block(self.grid, 1.0);
            (bundle, blackout)
        })
    }

    pub fn check(&self, a: &Assignment, mode: Mode) -> Result<FeasibilityReport, PolyError> {
        if a.len() < self.grid.n_vars() {
            return Err(PolyError::MissingVariable(VarId(a.len())));
        }
        match mode {
            Mode::Physical => self.check_physical(a),
            Mode::Paper => self.check_paper(a),
        }
    }

    fn check_physical(&self, a: &Assignment) -> Result<FeasibilityReport, PolyError> {
        let grid = self.grid;
        let mut r = FeasibilityReport::new(Mode::Physical, a);
        let adj = closed_adjacency(grid, a)?;
        let comps = energized_components(grid, a)?;
        let mut flows = Vec::new();
        for comp in &comps {
            if comp.feeder_blocks.len() > 1 {
                r.radial_ok = false;
                r.violations.push(Violation::blocks(
                    ViolationCode::RadialTwoFeeders,
                    comp.feeder_blocks.clone(),
                ));
            }
            if comp.feeder_blocks.is_empty() {
                r.blackout_ok = false;
                r.violations.push(Violation::blocks(
                    ViolationCode::Blackout,
                    comp.blocks.clone(),
                ));
            }
            if !comp.is_tree() {
                r.maxconn_ok = false;
                r.violations.push(Violation::blocks(
                    ViolationCode::MaxconnLoop,
                    comp.blocks.clone(),
                ));
            }
            let deep: Vec<BlockId> = comp
                .depth
                .iter()
                .filter(|(_, &d)| d > MAX_PHYSICAL_DEPTH)
                .map(|(&b, _)| b)
                .collect();
            if !deep.is_empty() {
                r.maxconn_ok = false;
                r.violations
                    .push(Violation::blocks(ViolationCode::MaxconnDepth, deep));
            }
            if let Ok(flow) = tree_flow(grid, &adj, comp) {
                flows.push(flow);
            }
        }

        let fmax = grid.reference_voltage();
        for flow in &flows {
            for (&b, &i) in &flow.current {
                let block = &grid.blocks()[b.index()];
                if !(i < block.max_current) {
                    r.current_ok = false;
                    r.violations.push(Violation::limit(
                        ViolationCode::MaxCurrent,
                        b,
                        i,
                        block.max_current,
                    ));
                }
                let v = flow.voltage[&b];
                if !(v < block.max_voltage) {
                    r.max_v_ok = false;
                    r.violations.push(Violation::limit(
                        ViolationCode::MaxVoltage,
                        b,
                        v,
                        block.max_voltage,
                    ));
                }
                let drop = fmax - v;
                if !(drop < block.max_cum_drop) {
                    r.min_v_ok = false;
                    r.violations.push(Violation::limit(
                        ViolationCode::MinVoltage,
                        b,
                        drop,
                        block.max_cum_drop,
                    ));
                }
            }
        }

        if r.radial_ok && r.blackout_ok && flows.len() == comps.len() {
            for flow in flows {
                r.currents.extend(flow.current);
                r.voltages.extend(flow.voltage);
            }
            r.loss_watts = Some(loss_of(grid, &r.currents));
        }
        Ok(r.finish())
    }

    fn check_paper(&self, a: &Assignment) -> Result<FeasibilityReport, PolyError> {
        let grid = self.grid;
        let (bundle, blackout_by_block) = self.paper();
        let mut r = FeasibilityReport::new(Mode::Paper, a);
        let ev = |p: &Poly| p.eval(a);

        let values = PenaltyValues {
            power: ev(&bundle.power)?,
            radial: ev(&bundle.radial)?,
            maxconn: ev(&bundle.maxconn)?,
            blackout: ev(&bundle.blackout)?,
            current: ev(&bundle.current)?,
            max_v: ev(&bundle.max_v)?,
            min_v: ev(&bundle.min_v)?,
            total: ev(&bundle.total)?,
        };

        for (m, _) in bundle.radial.terms() {
            if m.vars().iter().all(|&v| a.get(v) == Some(true)) {
                r.violations.push(Violation {
                    monomial: Some(monomial_label(grid, m)),
                    ..Violation::blocks(ViolationCode::Radial, monomial_blocks(grid, m))
                });
            }
        }
        r.radial_ok = values.radial == 0.0;

        // list the active monomials of the (unscaled) max-connection polynomial
        for (m, c) in bundle.maxconn.terms() {
            if c > 0.0 && m.vars().iter().all(|&v| a.get(v) == Some(true)) {
                r.violations.push(Violation {
                    monomial: Some(monomial_label(grid, m)),
                    ..Violation::blocks(ViolationCode::MaxconnTerm, monomial_blocks(grid, m))
                });
            }
        }
        r.maxconn_ok = values.maxconn == 0.0;

        let unfed: Vec<BlockId> = blackout_by_block
            .iter()
            .enumerate()
            .filter_map(|(k, p)| match p.eval(a) {
                Ok(x) if x != 0.0 => Some(Ok(BlockId::from_index(k))),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            })
            .collect::<Result<_, _>>()?;
        if !unfed.is_empty() {
            r.violations
                .push(Violation::blocks(ViolationCode::Blackout, unfed));
        }
        r.blackout_ok = values.blackout == 0.0;

        for (k, block) in grid.blocks().iter().enumerate() {
            let id = BlockId::from_index(k);
            let i = ev(&bundle.per_block_current[&id])?;
            let v = ev(&bundle.per_block_voltage[&id])?;
            let d = ev(&bundle.per_block_cum_drop[&id])?;
            if !(i / block.max_current < 1.0) {
                r.current_ok = false;
                r.violations.push(Violation::limit(
                    ViolationCode::MaxCurrent,
                    id,
                    i,
                    block.max_current,
                ));
            }
            if !(v / block.max_voltage < 1.0) {
                r.max_v_ok = false;
                r.violations.push(Violation::limit(
                    ViolationCode::MaxVoltage,
                    id,
                    v,
                    block.max_voltage,
                ));
            }
            if !(d / block.max_cum_drop < 1.0) {
                r.min_v_ok = false;
                r.violations.push(Violation::limit(
                    ViolationCode::MinVoltage,
                    id,
                    d,
                    block.max_cum_drop,
                ));
            }
            if r.radial_ok && r.blackout_ok {
                r.currents.insert(id, i);
                r.voltages.insert(id, v);
            }
        }
        if r.radial_ok && r.blackout_ok {
            r.loss_watts = Some(values.power);
        }
        r.penalties = Some(values);
        Ok(r.finish())
    }

    /// Loss used to rank feasible configurations: tree-flow loss when the flow
    /// is well defined, otherwise the loss polynomial.
    fn ranking_loss(&self, a: &Assignment) -> f64 {
        match physical_loss(self.grid, a) {
            Ok(loss) => loss,
            Err(_) => self
                .paper()
                .0
                .power
                .eval(a)
                .expect("assignment covers all switch variables"),
        }
    }

    pub fn enumerate_feasible(&self, mode: Mode) -> Result<Vec<(Assignment, f64)>, SolverError> {
        let n = self.grid.n_vars();
        if n > ENUMERATION_LIMIT {
            return Err(SolverError::TooManyVariables {
                n,
                limit: ENUMERATION_LIMIT,
            });
        }
        if mode == Mode::Paper {
            self.paper();
        }
        let mut rows: Vec<(Assignment, f64)> = (0..1u64 << n)
            .into_par_iter()
            .filter_map(|idx| {
                let a = Assignment::from_index(idx, n);
                let report = self.check(&a, mode).expect("full-length assignment");
                report.feasible.then(|| {
                    let loss = self.ranking_loss(&a);
                    (a, loss)
                })
            })
            .collect();
        rows.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
        Ok(rows)
    }
}

pub fn check_feasibility(
    grid: &Grid,
    a: &Assignment,
    mode: Mode,
) -> Result<FeasibilityReport, PolyError> {
    Validator::new(grid).check(a, mode)
}

/// All feasible configurations, ascending by loss then bit string.
pub fn enumerate_feasible(grid: &Grid, mode: Mode) -> Result<Vec<(Assignment, f64)>, SolverError> {
    Validator::new(grid).enumerate_feasible(mode)
}
