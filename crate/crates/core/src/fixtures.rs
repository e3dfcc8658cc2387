//! Reference grids: the six-block, two-feeder example topology and a seeded
//! generator of small random grids with generous (non-binding) limits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Block, BlockId, Feeder, Grid, GridDocument};

pub const SIX_BLOCK_LOADS: [f64; 6] = [10.0, 20.0, 15.0, 12.0, 8.0, 25.0];
pub const SIX_BLOCK_RESISTANCES: [f64; 6] = [0.05, 0.04, 0.06, 0.05, 0.07, 0.03];
pub const SIX_BLOCK_SWITCHES: [[u32; 2]; 7] =
    [[1, 2], [1, 4], [2, 3], [2, 5], [3, 6], [4, 6], [5, 6]];

/// Six blocks, feeders at blocks 2 and 6, seven switches.
pub fn six_block_document() -> GridDocument {
    GridDocument {
        blocks: (0..6)
            .map(|k| Block {
                id: BlockId::from_index(k),
                load_current: SIX_BLOCK_LOADS[k],
                resistance: SIX_BLOCK_RESISTANCES[k],
                max_current: 400.0,
                max_voltage: 200.0,
                max_cum_drop: 50.0,
            })
            .collect(),
        feeders: vec![
            Feeder {
                block: BlockId(2),
                voltage: 100.0,
            },
            Feeder {
                block: BlockId(6),
                voltage: 100.0,
            },
        ],
        switches: SIX_BLOCK_SWITCHES.to_vec(),
        reference_voltage: None,
    }
}

pub fn six_block() -> Grid {
    Grid::from_document(six_block_document()).expect("six_block fixture is valid")
}

/// A lone feeder block with no switches.
pub fn single_feeder_block() -> Grid {
    Grid::from_document(GridDocument {
        blocks: vec![Block {
            id: BlockId(1),
            load_current: 10.0,
            resistance: 0.1,
            max_current: 20.0,
            max_voltage: 200.0,
            max_cum_drop: 20.0,
        }],
        feeders: vec![Feeder {
            block: BlockId(1),
            voltage: 100.0,
        }],
        switches: vec![],
        reference_voltage: Some(110.0),
    })
    .expect("single block fixture is valid")
}

/// Random grid with `2..=max_blocks` blocks, at most `max_switches` switches
/// and one to three feeders. Limits are loose enough that they never bind.
pub fn random_grid(seed: u64, max_blocks: usize, max_switches: usize) -> Grid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_blocks.max(2));
    let loads: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..30.0)).collect();
    let total: f64 = loads.iter().sum();

    let mut pairs: Vec<[u32; 2]> = (1..=n as u32)
        .flat_map(|a| ((a + 1)..=n as u32).map(move |b| [a, b]))
        .collect();
    pairs.shuffle(&mut rng);
    let n_sw = rng.gen_range(1..=max_switches.min(pairs.len()).max(1));
    pairs.truncate(n_sw);

    let mut ids: Vec<u32> = (1..=n as u32).collect();
    ids.shuffle(&mut rng);
    let n_feeders = rng.gen_range(1..=n.min(3));
    let feeders = ids[..n_feeders]
        .iter()
        .map(|&b| Feeder {
            block: BlockId(b),
            voltage: rng.gen_range(95.0..105.0),
        })
        .collect();

    let blocks = (0..n)
        .map(|k| Block {
            id: BlockId::from_index(k),
            load_current: loads[k],
            resistance: rng.gen_range(0.01..0.1),
            max_current: 10.0 * total,
            max_voltage: 210.0,
            max_cum_drop: 60.0,
        })
        .collect();

    Grid::from_document(GridDocument {
        blocks,
        feeders,
        switches: pairs,
        reference_voltage: None,
    })
    .expect("generated grid is valid")
}
