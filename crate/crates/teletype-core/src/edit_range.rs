//! Single accumulating edit-range interval per module.
//!
//! The range is deliberately coarse: one line interval that grows to cover
//! every edit since the last reset, with endpoints shifted as insertions and
//! deletions move lines around. Coarseness keeps records small; the cost is
//! that editing the top and bottom of a file covers everything in between.
//!
//! Deletions only shrink or shift coverage. A deletion that erases the whole
//! interval leaves it empty, so a pure-deletion fix produces a record with
//! nothing for errors to overlap with.

use serde::{Deserialize, Serialize};

use crate::kind::AnalysisError;

/// An edit observed by the tracker, in whole lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditOp {
    /// `n_lines` new lines inserted so that the first occupies `at_line`.
    Insert { at_line: u32, n_lines: u32 },
    /// `n_lines` lines removed starting at `from_line`.
    Delete { from_line: u32, n_lines: u32 },
    /// Lines `from_line..=to_line` rewritten in place.
    Modify { from_line: u32, to_line: u32 },
}

/// Empty, or a single inclusive 1-based line interval. Never negative by
/// construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRange(Option<(u32, u32)>);

fn hull(a: Option<(u32, u32)>, b: (u32, u32)) -> EditRange {
    match a {
        None => EditRange(Some(b)),
        Some((s, e)) => EditRange(Some((s.min(b.0), e.max(b.1)))),
    }
}

impl EditRange {
    pub fn empty() -> Self {
        EditRange(None)
    }

    pub fn interval(start_line: u32, end_line: u32) -> Self {
        debug_assert!(1 <= start_line && start_line <= end_line);
        EditRange(Some((start_line, end_line)))
    }

    pub fn as_interval(self) -> Option<(u32, u32)> {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0.is_none()
    }

    /// Number of covered lines; 0 when empty.
    pub fn width(self) -> u64 {
        match self.0 {
            None => 0,
            Some((s, e)) => (e - s + 1) as u64,
        }
    }

    /// Grow/shift the interval for one edit. The result is the minimal
    /// single interval covering all still-existing previously covered lines
    /// plus every line the edit touched.
    #[must_use]
    pub fn apply_edit(self, op: EditOp) -> EditRange {
        match op {
            EditOp::Modify { from_line, to_line } => {
                debug_assert!(1 <= from_line && from_line <= to_line);
                hull(self.0, (from_line, to_line))
            }
            EditOp::Insert { at_line, n_lines } => {
                debug_assert!(at_line >= 1 && n_lines >= 1);
                let shifted = self.0.map(|(s, e)| {
                    if e < at_line {
                        (s, e)
                    } else if s >= at_line {
                        (s + n_lines, e + n_lines)
                    } else {
                        (s, e + n_lines)
                    }
                });
                hull(shifted, (at_line, at_line + n_lines - 1))
            }
            EditOp::Delete { from_line, n_lines } => {
                debug_assert!(from_line >= 1 && n_lines >= 1);
                let Some((s, e)) = self.0 else {
                    return EditRange(None);
                };
                let del_end = from_line + n_lines - 1;
                let left = (s < from_line).then(|| (s, e.min(from_line - 1)));
                let right = {
                    let lo = s.max(del_end + 1);
                    (lo <= e).then(|| (lo - n_lines, e - n_lines))
                };
                match (left, right) {
                    (None, None) => EditRange(None),
                    (Some(i), None) | (None, Some(i)) => EditRange(Some(i)),
                    (Some(l), Some(r)) => EditRange(Some((l.0.min(r.0), l.1.max(r.1)))),
                }
            }
        }
    }

    /// Interval intersection against an inclusive line span.
    pub fn overlaps_span(self, start_line: u32, end_line: u32) -> bool {
        match self.0 {
            None => false,
            Some((s, e)) => start_line <= e && end_line >= s,
        }
    }

    /// Does an analysis error in the focused module overlap the range?
    pub fn overlaps(self, err: &AnalysisError) -> bool {
        self.overlaps_span(err.start_line, err.end_line)
    }

    #[must_use]
    pub fn reset(self) -> EditRange {
        EditRange(None)
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Line-buffer replay oracle, independent of the interval arithmetic.
    //!
    //! `covered` mirrors the tracker's contract: still-existing previously
    //! covered lines plus touched lines, hull-filled after every edit.
    //! `touched` tracks only lines actually modified since the last reset.

    use super::EditOp;

    #[derive(Default)]
    pub struct BufferOracle {
        covered: Vec<bool>,
        touched: Vec<bool>,
    }

    impl BufferOracle {
        pub fn new(doc_lines: usize) -> Self {
            BufferOracle {
                covered: vec![false; doc_lines],
                touched: vec![false; doc_lines],
            }
        }

        pub fn doc_len(&self) -> usize {
            self.covered.len()
        }

        pub fn apply(&mut self, op: EditOp) {
            match op {
                EditOp::Modify { from_line, to_line } => {
                    for line in from_line..=to_line {
                        let i = (line - 1) as usize;
                        self.covered[i] = true;
                        self.touched[i] = true;
                    }
                }
                EditOp::Insert { at_line, n_lines } => {
                    let i = (at_line - 1) as usize;
                    for _ in 0..n_lines {
                        self.covered.insert(i, true);
                        self.touched.insert(i, true);
                    }
                }
                EditOp::Delete { from_line, n_lines } => {
                    let i = (from_line - 1) as usize;
                    for _ in 0..n_lines {
                        if i < self.covered.len() {
                            self.covered.remove(i);
                            self.touched.remove(i);
                        }
                    }
                }
            }
            // Hull-fill: the tracker remembers only endpoints, so everything
            // between min and max counts as covered from now on.
            if let Some((lo, hi)) = self.expected_interval_raw() {
                for flag in &mut self.covered[(lo - 1) as usize..=(hi - 1) as usize] {
                    *flag = true;
                }
            }
        }

        fn expected_interval_raw(&self) -> Option<(u32, u32)> {
            let first = self.covered.iter().position(|&c| c)?;
            let last = self.covered.iter().rposition(|&c| c).unwrap();
            Some((first as u32 + 1, last as u32 + 1))
        }

        /// Minimal interval covering the oracle's covered set.
        pub fn expected_interval(&self) -> Option<(u32, u32)> {
            self.expected_interval_raw()
        }

        /// Lines modified since the last reset (current positions).
        pub fn touched_lines(&self) -> Vec<u32> {
            self.touched
                .iter()
                .enumerate()
                .filter_map(|(i, &t)| t.then_some(i as u32 + 1))
                .collect()
        }
    }
}
