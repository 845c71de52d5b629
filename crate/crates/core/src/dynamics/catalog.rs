use std::fmt;

use crate::error::{Error, Result};

pub const NUM_ACTIONS: usize = 16;

/// One on/off pattern over the six controllable sites.
///
/// Ids follow a fixed order shared by every file format:
/// 0 is all-off, 1..=7 are the nonempty left-only subsets (bit 0 = site 1),
/// 8..=14 are the nonempty right-only subsets (bit 0 = site N-2), 15 is all-on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControlAction {
    id: usize,
    left: [bool; 3],
    right: [bool; 3],
}

fn mask_from_bits(bits: usize) -> [bool; 3] {
    [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0]
}

fn mask_bits(mask: [bool; 3]) -> u8 {
    mask.iter()
        .enumerate()
        .fold(0, |acc, (i, &on)| acc | (u8::from(on) << i))
}

impl ControlAction {
    pub fn from_id(id: usize) -> Result<Self> {
        let (left, right) = match id {
            0 => ([false; 3], [false; 3]),
            1..=7 => (mask_from_bits(id), [false; 3]),
            8..=14 => ([false; 3], mask_from_bits(id - 7)),
            15 => ([true; 3], [true; 3]),
            _ => return Err(Error::InvalidAction(id)),
        };
        Ok(Self { id, left, right })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// Controls on sites 1, 2, 3.
    pub fn left_mask(&self) -> [bool; 3] {
        self.left
    }

    /// Controls on sites N-2, N-1, N.
    pub fn right_mask(&self) -> [bool; 3] {
        self.right
    }

    pub fn left_bits(&self) -> u8 {
        mask_bits(self.left)
    }

    pub fn right_bits(&self) -> u8 {
        mask_bits(self.right)
    }

    pub fn is_all_off(&self) -> bool {
        self.id == 0
    }

    /// Which sites of an `n_sites` chain carry the field under this action.
    ///
    /// Overlapping ends (N < 6) combine with a logical OR; sites that fall
    /// outside a very short chain are ignored.
    pub fn active_sites(&self, n_sites: usize) -> Vec<bool> {
        let mut active = vec![false; n_sites];
        for (j, &on) in self.left.iter().enumerate() {
            if on && j < n_sites {
                active[j] = true;
            }
        }
        for (j, &on) in self.right.iter().enumerate() {
            if let Some(site) = (n_sites + j).checked_sub(3) {
                if on {
                    active[site] = true;
                }
            }
        }
        active
    }
}

impl fmt::Display for ControlAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |m: [bool; 3]| -> String { m.iter().map(|&b| if b { '1' } else { '0' }).collect() };
        write!(f, "{:>2}  {}  {}", self.id, bits(self.left), bits(self.right))
    }
}

/// The 16 admissible control patterns, indexed by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCatalog {
    actions: Vec<ControlAction>,
}

impl ActionCatalog {
    pub fn canonical() -> Self {
        let actions = (0..NUM_ACTIONS)
            .map(|id| ControlAction::from_id(id).expect("ids below 16 are valid"))
            .collect();
        Self { actions }
    }

    pub fn get(&self, id: usize) -> Result<&ControlAction> {
        self.actions.get(id).ok_or(Error::InvalidAction(id))
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ControlAction> {
        self.actions.iter()
    }

    pub fn as_slice(&self) -> &[ControlAction] {
        &self.actions
    }
}

pub fn build_action_catalog() -> ActionCatalog {
    ActionCatalog::canonical()
}
