//! Grid topology: blocks, feeders and switches, plus resolution of every
//! block pair `(i, j)` to either a constant or a switch variable.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GridError;
use crate::poly::{Poly, VarId};

/// Margin applied to the largest feeder voltage when no reference voltage is given.
pub const DEFAULT_REFERENCE_MARGIN: f64 = 1.05;

/// 1-based block number as used in grid documents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(idx: usize) -> Self {
        BlockId(idx as u32 + 1)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub id: BlockId,
    pub load_current: f64,
    pub resistance: f64,
    pub max_current: f64,
    pub max_voltage: f64,
    pub max_cum_drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feeder {
    pub block: BlockId,
    pub voltage: f64,
}

/// Value of `q_ij` after folding the fixed topology in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QRef {
    Const0,
    Const1,
    Var(VarId),
}

impl QRef {
    pub fn to_poly(self) -> Poly {
        match self {
            QRef::Const0 => Poly::zero(),
            QRef::Const1 => Poly::constant(1.0),
            QRef::Var(v) => Poly::var(v),
        }
    }
}

/// On-disk grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub blocks: Vec<Block>,
    pub feeders: Vec<Feeder>,
    pub switches: Vec<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_voltage: Option<f64>,
}

/// Validated, immutable grid. Blocks are stored densely by `BlockId::index`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    blocks: Vec<Block>,
    feeder_voltage: Vec<Option<f64>>,
    switches: Vec<(BlockId, BlockId)>,
    switch_index: HashMap<(u32, u32), VarId>,
    reference_voltage: f64,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Grid, GridError> {
        let doc: GridDocument =
            serde_json::from_str(text).map_err(|e| GridError::Malformed(e.to_string()))?;
        Grid::from_document(doc)
    }

    pub fn from_document(doc: GridDocument) -> Result<Grid, GridError> {
        if doc.blocks.is_empty() {
            return Err(GridError::NoBlocks);
        }
        let count = doc.blocks.len();
        let mut slots: Vec<Option<Block>> = vec![None; count];
        for b in doc.blocks {
            let id = b.id.0;
            if id == 0 || id as usize > count {
                return Err(GridError::NonContiguousIds { id, count });
            }
            check_block(&b)?;
            let slot = &mut slots[b.id.index()];
            if slot.is_some() {
                return Err(GridError::DuplicateBlock(id));
            }
            *slot = Some(b);
        }
        // every slot is filled: ids are in 1..=count and unique
        let blocks: Vec<Block> = slots.into_iter().map(Option::unwrap).collect();

        let known = |id: u32| -> Result<BlockId, GridError> {
            if id >= 1 && id as usize <= count {
                Ok(BlockId(id))
            } else {
                Err(GridError::UnknownBlock(id))
            }
        };

        let mut feeder_voltage = vec![None; count];
        for f in &doc.feeders {
            let b = known(f.block.0)?;
            if !(f.voltage > 0.0) || !f.voltage.is_finite() {
                return Err(GridError::FeederVoltage {
                    block: b.0,
                    voltage: f.voltage,
                });
            }
            if feeder_voltage[b.index()].replace(f.voltage).is_some() {
                return Err(GridError::DuplicateFeeder(b.0));
            }
        }
        let max_feeder = feeder_voltage
            .iter()
            .flatten()
            .copied()
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .ok_or(GridError::NoFeeders)?;

        let mut pairs = BTreeSet::new();
        for &[a, b] in &doc.switches {
            let (a, b) = (known(a)?, known(b)?);
            if a == b {
                return Err(GridError::SelfLoop(a.0));
            }
            let key = (a.min(b), a.max(b));
            if !pairs.insert(key) {
                return Err(GridError::DuplicateSwitch(key.0 .0, key.1 .0));
            }
        }
        let switches: Vec<(BlockId, BlockId)> = pairs.into_iter().collect();
        let switch_index = switches
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| ((a.0, b.0), VarId(k)))
            .collect();

        let reference_voltage = match doc.reference_voltage {
            Some(r) => {
                if !(r > max_feeder) || !r.is_finite() {
                    return Err(GridError::ReferenceVoltage {
                        reference: r,
                        max_feeder,
                    });
                }
                r
            }
            None => max_feeder * DEFAULT_REFERENCE_MARGIN,
        };

        Ok(Grid {
            blocks,
            feeder_voltage,
            switches,
            switch_index,
            reference_voltage,
        })
    }

    /// Document form; the reference voltage is always written explicitly.
    pub fn to_document(&self) -> GridDocument {
        GridDocument {
            blocks: self.blocks.clone(),
            feeders: self.feeders(),
            switches: self.switches.iter().map(|&(a, b)| [a.0, b.0]).collect(),
            reference_voltage: Some(self.reference_voltage),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("grid document serializes")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_ids(&self) -> impl Iterator<Item = BlockId> {
        (0..self.blocks.len()).map(BlockId::from_index)
    }

    pub fn block(&self, id: BlockId) -> Result<&Block, GridError> {
        self.check(id)?;
        Ok(&self.blocks[id.index()])
    }

    pub fn feeders(&self) -> Vec<Feeder> {
        self.feeder_voltage
            .iter()
            .enumerate()
            .filter_map(|(k, v)| {
                v.map(|voltage| Feeder {
                    block: BlockId::from_index(k),
                    voltage,
                })
            })
            .collect()
    }

    /// Feeder voltage at block `idx` (dense index), if a feeder is attached.
    pub fn feeder_voltage(&self, idx: usize) -> Option<f64> {
        self.feeder_voltage[idx]
    }

    pub fn has_feeder(&self, idx: usize) -> bool {
        self.feeder_voltage[idx].is_some()
    }

    pub fn reference_voltage(&self) -> f64 {
        self.reference_voltage
    }

    pub fn switches(&self) -> &[(BlockId, BlockId)] {
        &self.switches
    }

    pub fn n_vars(&self) -> usize {
        self.switches.len()
    }

    /// Switch variables in canonical order, ascending by (min id, max id).
    pub fn variable_order(&self) -> Vec<(VarId, (BlockId, BlockId))> {
        self.switches
            .iter()
            .enumerate()
            .map(|(k, &pair)| (VarId(k), pair))
            .collect()
    }

    /// Variable labels such as `"1-4"`, in canonical order.
    pub fn variable_labels(&self) -> Vec<String> {
        self.switches
            .iter()
            .map(|(a, b)| format!("{a}-{b}"))
            .collect()
    }

    pub fn switch_var(&self, a: BlockId, b: BlockId) -> Option<VarId> {
        let key = if a < b { (a.0, b.0) } else { (b.0, a.0) };
        self.switch_index.get(&key).copied()
    }

    pub fn q_lookup(&self, i: BlockId, j: BlockId) -> Result<QRef, GridError> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.q(i.index(), j.index()))
    }

    /// `q_lookup` on dense indices, for hot loops.
    pub fn q(&self, i: usize, j: usize) -> QRef {
        if i == j {
            return if self.feeder_voltage[i].is_some() {
                QRef::Const1
            } else {
                QRef::Const0
            };
        }
        match self.switch_var(BlockId::from_index(i), BlockId::from_index(j)) {
            Some(v) => QRef::Var(v),
            None => QRef::Const0,
        }
    }

    /// Dense neighbour lists over physical switches.
    pub fn adjacency(&self) -> Vec<Vec<(usize, VarId)>> {
        let mut adj = vec![Vec::new(); self.blocks.len()];
        for (k, &(a, b)) in self.switches.iter().enumerate() {
            adj[a.index()].push((b.index(), VarId(k)));
            adj[b.index()].push((a.index(), VarId(k)));
        }
        adj
    }

    fn check(&self, id: BlockId) -> Result<(), GridError> {
        if id.0 >= 1 && id.index() < self.blocks.len() {
            Ok(())
        } else {
            Err(GridError::UnknownBlock(id.0))
        }
    }
}

fn check_block(b: &Block) -> Result<(), GridError> {
    let fields: [(&'static str, f64, bool); 5] = [
        ("load_current", b.load_current, b.load_current >= 0.0),
        ("resistance", b.resistance, b.resistance >= 0.0),
        ("max_current", b.max_current, b.max_current > 0.0),
        ("max_voltage", b.max_voltage, b.max_voltage > 0.0),
        ("max_cum_drop", b.max_cum_drop, b.max_cum_drop > 0.0),
    ];
    for (field, value, ok) in fields {
        if !ok || !value.is_finite() {
            return Err(GridError::InvalidBlockField {
                block: b.id.0,
                field,
                value,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn doc_with(blocks: usize, feeders: &[(u32, f64)], switches: &[[u32; 2]]) -> GridDocument {
        GridDocument {
            blocks: (1..=blocks as u32)
                .map(|id| Block {
                    id: BlockId(id),
                    load_current: 1.0,
                    resistance: 0.1,
                    max_current: 100.0,
                    max_voltage: 200.0,
                    max_cum_drop: 50.0,
                })
                .collect(),
            feeders: feeders
                .iter()
                .map(|&(b, v)| Feeder {
                    block: BlockId(b),
                    voltage: v,
                })
                .collect(),
            switches: switches.to_vec(),
            reference_voltage: None,
        }
    }

    #[test]
    fn six_block_has_seven_variables_in_tuple_order() {
        let g = fixtures::six_block();
        assert_eq!(g.n_vars(), 7);
        assert_eq!(
            g.variable_labels(),
            ["1-2", "1-4", "2-3", "2-5", "3-6", "4-6", "5-6"]
        );
    }

    #[test]
    fn single_block_grid() {
        let g = Grid::from_document(doc_with(1, &[(1, 100.0)], &[])).unwrap();
        assert_eq!(g.n_vars(), 0);
        assert!(g.variable_order().is_empty());
    }

    #[test]
    fn unknown_block_in_switch() {
        let err = Grid::from_document(doc_with(6, &[(2, 100.0)], &[[1, 7]])).unwrap_err();
        assert_eq!(err, GridError::UnknownBlock(7));
        assert!(err.to_string().contains("unknown block"));
    }

    #[test]
    fn q_lookup_six_block() {
        let g = fixtures::six_block();
        let b = BlockId;
        assert_eq!(g.q_lookup(b(1), b(1)).unwrap(), QRef::Const0);
        assert_eq!(g.q_lookup(b(2), b(2)).unwrap(), QRef::Const1);
        assert_eq!(g.q_lookup(b(2), b(4)).unwrap(), QRef::Const0);
        assert_eq!(g.q_lookup(b(1), b(4)).unwrap(), QRef::Var(VarId(1)));
        assert_eq!(g.q_lookup(b(4), b(1)).unwrap(), QRef::Var(VarId(1)));
        assert_eq!(g.q_lookup(b(7), b(1)), Err(GridError::UnknownBlock(7)));
        for i in g.block_ids() {
            for j in g.block_ids() {
                assert_eq!(g.q_lookup(i, j), g.q_lookup(j, i));
            }
        }
    }

    #[test]
    fn variable_order_is_lexicographic() {
        let g = Grid::from_document(doc_with(9, &[(1, 100.0)], &[[2, 3], [9, 1], [1, 2]])).unwrap();
        let order: Vec<_> = g.variable_order().into_iter().map(|(_, p)| p).collect();
        assert_eq!(
            order,
            [
                (BlockId(1), BlockId(2)),
                (BlockId(1), BlockId(9)),
                (BlockId(2), BlockId(3))
            ]
        );
    }

    #[test]
    fn validation_errors() {
        let mut d = doc_with(3, &[(1, 100.0)], &[[1, 2], [2, 1]]);
        assert_eq!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::DuplicateSwitch(1, 2)
        );
        d.switches = vec![[2, 2]];
        assert_eq!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::SelfLoop(2)
        );
        d.switches.clear();
        d.feeders[0].voltage = 0.0;
        assert!(matches!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::FeederVoltage { block: 1, .. }
        ));
        d.feeders.clear();
        assert_eq!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::NoFeeders
        );
        d.feeders = vec![
            Feeder {
                block: BlockId(1),
                voltage: 100.0,
            },
            Feeder {
                block: BlockId(1),
                voltage: 90.0,
            },
        ];
        assert_eq!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::DuplicateFeeder(1)
        );
        d.feeders.pop();
        d.reference_voltage = Some(100.0);
        assert!(matches!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::ReferenceVoltage { .. }
        ));
        d.reference_voltage = None;
        d.blocks[1].id = BlockId(1);
        assert_eq!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::DuplicateBlock(1)
        );
        d.blocks[1].id = BlockId(5);
        assert!(matches!(
            Grid::from_document(d.clone()).unwrap_err(),
            GridError::NonContiguousIds { id: 5, .. }
        ));
        d.blocks[1].id = BlockId(2);
        d.blocks[2].max_current = 0.0;
        let err = Grid::from_document(d).unwrap_err();
        assert!(err.to_string().contains("max_current"));
    }

    #[test]
    fn strict_mode_rejects_unknown_keys() {
        let text = r#"{"blocks":[{"id":1,"load_current":1,"resistance":0.1,"max_current":5,
            "max_voltage":200,"max_cum_drop":5,"resistence":2}],
            "feeders":[{"block":1,"voltage":100}],"switches":[]}"#;
        let err = Grid::parse(text).unwrap_err();
        assert!(matches!(err, GridError::Malformed(ref m) if m.contains("resistence")));
    }

    #[test]
    fn reference_voltage_default() {
        let g = Grid::from_document(doc_with(2, &[(1, 100.0), (2, 120.0)], &[[1, 2]])).unwrap();
        assert!((g.reference_voltage() - 126.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_six_block() {
        let g = fixtures::six_block();
        let again = Grid::parse(&g.to_json()).unwrap();
        assert_eq!(again, g);
    }
}
