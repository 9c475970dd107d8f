use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dyadic::{Cell, DyadicMeasure};
use crate::error::{Error, Result};

/// A random level-`level` component: the raw restriction `μ_D` and its
/// blow-up `μ^D = T_D μ_D` onto the unit cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentDraw {
    pub level: usize,
    pub cell: Cell,
    pub raw: DyadicMeasure,
    pub rescaled: DyadicMeasure,
}

/// Draws `count` components: a level uniformly from `levels`, then a cell
/// with probability equal to its mass. Deterministic in `seed`.
pub fn sample_components(m: &DyadicMeasure, levels: &[usize], count: usize, seed: u64) -> Result<Vec<ComponentDraw>> {
    if levels.is_empty() || count == 0 {
        return Err(Error::Domain("need at least one level and one draw".into()));
    }
    if let Some(&k) = levels.iter().find(|&&k| k > m.depth) {
        return Err(Error::Domain(format!("level {k} exceeds measure depth {}", m.depth)));
    }
    let mut tables = Vec::with_capacity(levels.len());
    for &k in levels {
        let coarse = m.coarsen(k)?;
        let cells: Vec<Cell> = coarse.cells().keys().copied().collect();
        let dist = WeightedIndex::new(coarse.cells().values().copied())
            .map_err(|e| Error::Domain(format!("cannot sample level {k}: {e}")))?;
        tables.push((cells, dist));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<(usize, Cell), (DyadicMeasure, DyadicMeasure)> = HashMap::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let li = rng.random_range(0..levels.len());
        let (cells, dist) = &tables[li];
        let cell = cells[dist.sample(&mut rng)];
        let level = levels[li];
        let (raw, rescaled) = match cache.get(&(level, cell)) {
            Some(pair) => pair.clone(),
            None => {
                let pair = (m.restrict(level, cell)?, m.rescale_cell(level, cell)?);
                cache.insert((level, cell), pair.clone());
                pair
            }
        };
        out.push(ComponentDraw { level, cell, raw, rescaled });
    }
    Ok(out)
}
