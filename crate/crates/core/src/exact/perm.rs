use std::fmt;

use serde::{Deserialize, Serialize};

use super::IntMatrix3;

/// Which order change closes an accelerated step.
///
/// With the current order `(x, y, z)` the winner `x` ends either between the
/// other two (`Two`, new order `(y, x, z)`) or below both (`Three`, new order
/// `(y, z, x)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Two,
    Three,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Two, Branch::Three];

    pub fn index(self) -> usize {
        match self {
            Branch::Two => 0,
            Branch::Three => 1,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Branch::Two => 2,
            Branch::Three => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Branch> {
        match n {
            2 => Some(Branch::Two),
            3 => Some(Branch::Three),
            _ => None,
        }
    }

    /// Permutation matrix `S` of the sorted frame change: `S e_i` is the old
    /// sorted position of the label now sitting at sorted position `i`.
    pub fn frame_change(self) -> IntMatrix3 {
        match self {
            Branch::Two => IntMatrix3::from_rows([[0, 1, 0], [1, 0, 0], [0, 0, 1]]),
            Branch::Three => IntMatrix3::from_rows([[0, 0, 1], [1, 0, 0], [0, 1, 0]]),
        }
    }
}

/// Labels (0-based) listed from the longest interval to the shortest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Perm(pub [u8; 3]);

impl Perm {
    pub const IDENTITY: Perm = Perm([0, 1, 2]);

    pub const ALL: [Perm; 6] = [
        Perm([0, 1, 2]),
        Perm([0, 2, 1]),
        Perm([1, 0, 2]),
        Perm([1, 2, 0]),
        Perm([2, 0, 1]),
        Perm([2, 1, 0]),
    ];

    /// Builds the order from 1-based labels, e.g. `[2, 3, 1]`.
    pub fn from_labels(labels: [u8; 3]) -> Option<Perm> {
        let mut seen = [false; 3];
        let mut out = [0u8; 3];
        for (slot, &l) in out.iter_mut().zip(labels.iter()) {
            if !(1..=3).contains(&l) || seen[(l - 1) as usize] {
                return None;
            }
            seen[(l - 1) as usize] = true;
            *slot = l - 1;
        }
        Some(Perm(out))
    }

    pub fn labels(self) -> [u8; 3] {
        [self.0[0] + 1, self.0[1] + 1, self.0[2] + 1]
    }

    pub fn top(self) -> usize {
        self.0[0] as usize
    }

    pub fn mid(self) -> usize {
        self.0[1] as usize
    }

    pub fn bottom(self) -> usize {
        self.0[2] as usize
    }

    pub fn index(self) -> usize {
        Perm::ALL.iter().position(|&p| p == self).expect("valid permutation")
    }

    /// Order after an accelerated step with the given closing branch.
    pub fn after(self, branch: Branch) -> Perm {
        let [x, y, z] = self.0;
        match branch {
            Branch::Two => Perm([y, x, z]),
            Branch::Three => Perm([y, z, x]),
        }
    }

    /// Position of `label` in the order.
    pub fn position(self, label: usize) -> usize {
        self.0.iter().position(|&l| l as usize == label).expect("label in 0..3")
    }

    /// Matrix `P` with `P e_i = e_{tau[i]}`: maps sorted coordinates to labels.
    pub fn matrix(self) -> IntMatrix3 {
        let mut rows = [[0i64; 3]; 3];
        for (i, &l) in self.0.iter().enumerate() {
            rows[l as usize][i] = 1;
        }
        IntMatrix3::from_rows(rows)
    }

    /// Order of a length vector; `None` on ties.
    pub fn sorting<T: PartialOrd>(v: &[T; 3]) -> Option<Perm> {
        if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
            return None;
        }
        let mut idx = [0u8, 1, 2];
        idx.sort_by(|&i, &j| v[j as usize].partial_cmp(&v[i as usize]).expect("comparable"));
        Some(Perm(idx))
    }
}

impl Default for Perm {
    fn default() -> Self {
        Perm::IDENTITY
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.labels();
        write!(f, "({a},{b},{c})")
    }
}
