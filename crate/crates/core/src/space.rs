//! Candidate loop orders and tile sizes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer::LayerShape;
use crate::schedule::{axis_extent, Axis, Schedule, Tiles};

/// Tile-body orderings, innermost first.
pub type Ordering = [Axis; 6];

/// Tile-body ordering of the HWC schedule, innermost first.
pub const HWC_ORDER: Ordering = [Axis::FX, Axis::SX, Axis::OF, Axis::FY, Axis::SY, Axis::IF];

fn pos(order: &Ordering, axis: Axis) -> usize {
    order.iter().position(|&a| a == axis).unwrap()
}

/// Whether `order` is the representative of its class under swapping FX↔FY
/// and SX↔SY independently: FX inside FY and SX inside SY.
pub fn is_canonical_representative(order: &Ordering) -> bool {
    pos(order, Axis::FX) < pos(order, Axis::FY) && pos(order, Axis::SX) < pos(order, Axis::SY)
}

/// Class representative of an ordering.
pub fn representative(order: &Ordering) -> Ordering {
    let mut out = *order;
    if pos(&out, Axis::FX) > pos(&out, Axis::FY) {
        out.swap(pos(order, Axis::FX), pos(order, Axis::FY));
    }
    if pos(&out, Axis::SX) > pos(&out, Axis::SY) {
        out.swap(pos(order, Axis::SX), pos(order, Axis::SY));
    }
    out
}

/// Mirror ordering: FX↔FY and SX↔SY swapped together.
pub fn transposed(order: &Ordering) -> Ordering {
    order.map(Axis::transposed)
}

/// All 720 orderings in lexicographic axis order, or the 180 class
/// representatives when `prune` is set.
pub fn enumerate_permutations(prune: bool) -> Vec<Ordering> {
    let mut out = Vec::with_capacity(720);
    let mut current = Vec::with_capacity(6);
    let mut used = [false; 6];
    fn rec(current: &mut Vec<Axis>, used: &mut [bool; 6], out: &mut Vec<Ordering>) {
        if current.len() == 6 {
            out.push(current.as_slice().try_into().unwrap());
            return;
        }
        for (i, &axis) in Axis::ALL.iter().enumerate() {
            if !used[i] {
                used[i] = true;
                current.push(axis);
                rec(current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut current, &mut used, &mut out);
    if prune {
        out.retain(is_canonical_representative);
    }
    out
}

/// How tile sizes are chosen for the four tileable axes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TilePolicy {
    /// Powers of two not exceeding the extent.
    PowersOfTwo,
    /// Powers of two below the extent, plus the extent itself.
    #[default]
    PowersOfTwoPlusExtents,
    /// Powers of four below the extent, plus the extent itself.
    Coarse,
    /// The caller's sizes, clipped to each extent.
    Explicit(Vec<u32>),
}

impl fmt::Display for TilePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TilePolicy::PowersOfTwo => f.write_str("pow2"),
            TilePolicy::PowersOfTwoPlusExtents => f.write_str("pow2+extent"),
            TilePolicy::Coarse => f.write_str("coarse"),
            TilePolicy::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(u32::to_string).collect();
                write!(f, "list:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for TilePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pow2" => Ok(TilePolicy::PowersOfTwo),
            "pow2+extent" | "default" => Ok(TilePolicy::PowersOfTwoPlusExtents),
            "coarse" => Ok(TilePolicy::Coarse),
            other => {
                let list = other
                    .strip_prefix("list:")
                    .ok_or_else(|| Error::Argument(format!("unknown tile policy `{other}`")))?;
                let sizes = list
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| {
                        p.trim()
                            .parse::<u32>()
                            .map_err(|_| Error::Argument(format!("bad tile size `{p}`")))
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Ok(TilePolicy::Explicit(sizes))
            }
        }
    }
}

/// Candidate tile sizes per tileable axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileSets {
    pub mss: Vec<u32>,
    pub css: Vec<u32>,
    pub iss: Vec<u32>,
    pub jss: Vec<u32>,
}

impl TileSets {
    /// Cartesian product of the four lists.
    pub fn choices(&self) -> Vec<Tiles> {
        let mut out = Vec::with_capacity(self.len());
        for &mss in &self.mss {
            for &css in &self.css {
                for &iss in &self.iss {
                    for &jss in &self.jss {
                        out.push(Tiles { mss, css, iss, jss });
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.mss.len() * self.css.len() * self.iss.len() * self.jss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Tile sizes for one axis of extent `extent`.
pub fn tile_sizes(extent: u32, policy: &TilePolicy) -> Result<Vec<u32>> {
    let geometric = |base: u32| {
        let mut v = Vec::new();
        let mut t = 1u32;
        while t < extent {
            v.push(t);
            t = t.saturating_mul(base);
        }
        v
    };
    let mut sizes = match policy {
        TilePolicy::PowersOfTwo => {
            let mut v = geometric(2);
            if extent.is_power_of_two() {
                v.push(extent);
            }
            v
        }
        TilePolicy::PowersOfTwoPlusExtents => {
            let mut v = geometric(2);
            v.push(extent);
            v
        }
        TilePolicy::Coarse => {
            let mut v = geometric(4);
            v.push(extent);
            v
        }
        TilePolicy::Explicit(list) => {
            if list.is_empty() {
                return Err(Error::Argument("explicit tile policy needs at least one size".into()));
            }
            if list.contains(&0) {
                return Err(Error::Argument("tile sizes must be at least 1".into()));
            }
            list.iter().map(|&t| t.min(extent)).collect()
        }
    };
    sizes.sort_unstable();
    sizes.dedup();
    Ok(sizes)
}

pub fn enumerate_tiles(layer: &LayerShape, policy: &TilePolicy) -> Result<TileSets> {
    let sizes = |axis| tile_sizes(axis_extent(layer, axis), policy);
    Ok(TileSets {
        mss: sizes(Axis::OF)?,
        css: sizes(Axis::IF)?,
        iss: sizes(Axis::SY)?,
        jss: sizes(Axis::SX)?,
    })
}

/// Builds the schedule with the default controlling-loop order.
pub fn instantiate(order: Ordering, tiles: Tiles, layer: &LayerShape) -> Result<Schedule> {
    Schedule::new(order, tiles, layer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::CANONICAL_ORDER;
    use std::collections::HashSet;

    #[test]
    fn permutation_counts() {
        let all = enumerate_permutations(false);
        assert_eq!(all.len(), 720);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 720);
        let pruned = enumerate_permutations(true);
        assert_eq!(pruned.len(), 180);
        assert!(pruned.contains(&HWC_ORDER));
        assert!(pruned.contains(&CANONICAL_ORDER));
    }

    #[test]
    fn every_ordering_maps_to_a_pruned_representative() {
        let pruned: HashSet<Ordering> = enumerate_permutations(true).into_iter().collect();
        for order in enumerate_permutations(false) {
            assert!(pruned.contains(&representative(&order)), "{order:?}");
        }
    }

    #[test]
    fn tile_enumeration() {
        let p = TilePolicy::PowersOfTwoPlusExtents;
        assert_eq!(tile_sizes(27, &p).unwrap(), vec![1, 2, 4, 8, 16, 27]);
        assert_eq!(tile_sizes(1, &p).unwrap(), vec![1]);
        assert_eq!(tile_sizes(256, &p).unwrap(), vec![1, 2, 4, 8, 16, 32, 64, 128, 256]);
        assert_eq!(tile_sizes(27, &TilePolicy::PowersOfTwo).unwrap(), vec![1, 2, 4, 8, 16]);
        assert_eq!(tile_sizes(27, &TilePolicy::Coarse).unwrap(), vec![1, 4, 16, 27]);
        assert_eq!(tile_sizes(5, &TilePolicy::Explicit(vec![8, 2, 2])).unwrap(), vec![2, 5]);
        assert!(tile_sizes(5, &TilePolicy::Explicit(vec![])).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("coarse".parse::<TilePolicy>().unwrap(), TilePolicy::Coarse);
        assert_eq!(
            "list:1,4".parse::<TilePolicy>().unwrap(),
            TilePolicy::Explicit(vec![1, 4])
        );
        assert!("list:"
            .parse::<TilePolicy>()
            .map(|p| tile_sizes(3, &p))
            .unwrap()
            .is_err());
        assert!("fancy".parse::<TilePolicy>().is_err());
    }

    #[test]
    fn instantiate_examples() {
        let layer = LayerShape::square("AlexNet-2", 27, 5, 2, 96, 256);
        let untiled = instantiate(CANONICAL_ORDER, Tiles::full(&layer), &layer).unwrap();
        assert_eq!(untiled.depth(), 6);
        let tiled = instantiate(
            CANONICAL_ORDER,
            Tiles {
                mss: 16,
                css: 8,
                iss: 4,
                jss: 8,
            },
            &layer,
        )
        .unwrap();
        assert_eq!(tiled.depth(), 10);
        let fig9 = instantiate(
            HWC_ORDER,
            Tiles {
                mss: 4,
                css: 96,
                iss: 2,
                jss: 16,
            },
            &layer,
        )
        .unwrap();
        assert_eq!(fig9.position(Axis::IF, true), None);
        assert_eq!(fig9.depth(), 9);
    }
}
