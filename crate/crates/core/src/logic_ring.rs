//! The edge-labeled bidirectional logic ring that gates movement in the
//! no-cross-detection protocols.
//!
//! Every physical edge carries two infinite label sets, one per
//! orientation: X for counter-clockwise traversal, Y for clockwise.
//! Labels are periodic with period `2p+2`, `p = ceil(log2 n)`. The X side
//! of edge `i` is `S_i ∪ {2p}` modulo the period, the Y side is the
//! complement, so the two orientations of one edge never share a round,
//! while any two sets from different edges intersect inside every window
//! of one period. Edge indices here are label indices: the protocols
//! assign index 0 to the first edge counter-clockwise from the elected
//! leader node.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("logic ring needs n >= 3, got {0}")]
    TooSmall(usize),
}

/// Which orientation of an edge a traversal uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelSide {
    /// Counter-clockwise from the leader; allowed on `S_i ∪ {2p}`.
    X,
    /// Clockwise; allowed on the complement plus `2p+1`.
    Y,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicRingLabels {
    n: usize,
    p: u32,
    /// Low-residue membership mask of S_i over {0..2p-1}.
    s_masks: Vec<u32>,
}

fn ceil_log2(n: usize) -> u32 {
    (n as u64).next_power_of_two().trailing_zeros()
}

pub fn build_labels(n: usize) -> Result<LogicRingLabels, LabelError> {
    if n < 3 {
        return Err(LabelError::TooSmall(n));
    }
    let p = ceil_log2(n);
    let mut s_masks = Vec::with_capacity(n);
    for i in 0..n {
        // Low half {0..p-1}: the binary expansion of i. The remaining
        // p - popcount(i) elements are the smallest unused ones from
        // {p..2p-1}.
        let mut mask = (i as u32) & ((1u32 << p) - 1);
        let mut need = p - mask.count_ones();
        let mut next = p;
        while need > 0 {
            mask |= 1 << next;
            next += 1;
            need -= 1;
        }
        debug_assert_eq!(mask.count_ones(), p);
        s_masks.push(mask);
    }
    Ok(LogicRingLabels { n, p, s_masks })
}

impl LogicRingLabels {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Rounds per period: 2p + 2.
    pub fn period(&self) -> u64 {
        2 * self.p as u64 + 2
    }

    /// S_i as sorted residues.
    pub fn s_residues(&self, i: usize) -> Vec<u32> {
        (0..2 * self.p).filter(|b| self.s_masks[i] & (1 << b) != 0).collect()
    }

    /// Residues of one side of edge `i` within {0..2p+1}.
    pub fn residues(&self, i: usize, side: LabelSide) -> Vec<u32> {
        let period = 2 * self.p + 2;
        (0..period).filter(|&r| self.allows_residue(i, side, r)).collect()
    }

    fn allows_residue(&self, i: usize, side: LabelSide, r: u32) -> bool {
        let two_p = 2 * self.p;
        match side {
            LabelSide::X => r == two_p || (r < two_p && self.s_masks[i] & (1 << r) != 0),
            LabelSide::Y => r == two_p + 1 || (r < two_p && self.s_masks[i] & (1 << r) == 0),
        }
    }

    /// Whether a traversal of label-edge `i` on the given orientation is
    /// allowed at `round`.
    pub fn may_move(&self, i: usize, side: LabelSide, round: u64) -> bool {
        let r = (round % self.period()) as u32;
        self.allows_residue(i, side, r)
    }

    /// A round in the window `{window_start, .., window_start + 2p + 1}`
    /// allowed on both given (edge, side) pairs. For the X/Y pairing this
    /// is absent exactly when both refer to the same edge.
    pub fn intersection_witness(
        &self,
        a: (usize, LabelSide),
        b: (usize, LabelSide),
        window_start: u64,
    ) -> Option<u64> {
        (window_start..window_start + self.period())
            .find(|&r| self.may_move(a.0, a.1, r) && self.may_move(b.0, b.1, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n4_construction_by_hand() {
        // p=2, period 6. S_0 = {2,3}: X(0) = {2,3,4}, Y(0) = {0,1,5}.
        let labels = build_labels(4).unwrap();
        assert_eq!(labels.p(), 2);
        assert_eq!(labels.period(), 6);
        assert_eq!(labels.residues(0, LabelSide::X), vec![2, 3, 4]);
        assert_eq!(labels.residues(0, LabelSide::Y), vec![0, 1, 5]);
        // S_1: bit 0 set, filled with 2.
        assert_eq!(labels.s_residues(1), vec![0, 2]);
    }

    #[test]
    fn common_residues_present_for_every_edge() {
        for n in [3usize, 4, 5, 8, 17, 64] {
            let labels = build_labels(n).unwrap();
            let two_p = 2 * labels.p() as u64;
            for i in 0..n {
                assert!(labels.may_move(i, LabelSide::X, two_p));
                assert!(!labels.may_move(i, LabelSide::Y, two_p));
                assert!(labels.may_move(i, LabelSide::Y, two_p + 1));
                // Periodicity: same residue one period later.
                assert!(labels.may_move(i, LabelSide::X, two_p + labels.period()));
            }
        }
    }

    #[test]
    fn n4_y_direction_round5() {
        let labels = build_labels(4).unwrap();
        assert!(labels.may_move(0, LabelSide::Y, 5));
        assert!(!labels.may_move(0, LabelSide::X, 5));
    }

    #[test]
    fn witness_absent_only_on_same_edge_xy() {
        let labels = build_labels(4).unwrap();
        for start in 0..12u64 {
            for i in 0..4 {
                assert_eq!(
                    labels.intersection_witness((i, LabelSide::X), (i, LabelSide::Y), start),
                    None
                );
                for j in 0..4 {
                    if i != j {
                        assert!(labels
                            .intersection_witness((i, LabelSide::X), (j, LabelSide::Y), start)
                            .is_some());
                    }
                    assert!(labels
                        .intersection_witness((i, LabelSide::X), (j, LabelSide::X), start)
                        .is_some());
                    assert!(labels
                        .intersection_witness((i, LabelSide::Y), (j, LabelSide::Y), start)
                        .is_some());
                }
            }
        }
    }
}
