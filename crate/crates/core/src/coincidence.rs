//! Pairing of detections from the two stations into coincidences, either by
//! emission slot (trial-paired) or by scanning the two timestamped streams.

use crate::analysis::{PairCounts, TableSet};
use crate::engine::TrialRecord;
use crate::error::{Error, Result};

/// One timestamped single-station detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    /// Detection time, seconds.
    pub time: f64,
    /// Index into that station's setting list.
    pub setting_idx: usize,
    /// Sign outcome, +1 or -1.
    pub outcome: i8,
    /// Emission slot the detection came from, when known.
    pub emission: Option<u64>,
}

/// Two detections accepted as one particle pair (`|Δt| < window`, strict).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidencePair {
    pub left: DetectionEvent,
    pub right: DetectionEvent,
}

/// Keep exactly the trial records whose two delays differ by less than
/// `window` (strict).
pub fn match_trial_paired(records: &[TrialRecord], window: f64) -> Vec<TrialRecord> {
    records
        .iter()
        .filter(|r| (r.delay_a - r.delay_b).abs() < window)
        .copied()
        .collect()
}

fn check_sorted(stream: &[DetectionEvent], side: &'static str) -> Result<()> {
    for (index, pair) in stream.windows(2).enumerate() {
        if pair[1].time < pair[0].time {
            return Err(Error::UnsortedStream {
                side,
                index: index + 1,
            });
        }
    }
    Ok(())
}

/// Outcome of a stream matching pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Accepted pairs, sorted by left detection time.
    pub pairs: Vec<CoincidencePair>,
    pub unmatched_left: u64,
    pub unmatched_right: u64,
}

/// Greedy chronological nearest-neighbor matching of two time-sorted streams.
///
/// Two cursors advance through the streams. When the cursor events lie within
/// the window of one another they form a candidate pair, accepted unless the
/// later-side stream's *next* event is strictly closer to the earlier event's
/// partner; in that case the earlier event is discarded and the closer
/// neighbor takes its place (ties keep the earlier candidate). Cursor events
/// outside the window discard the earlier one. Each event joins at most one
/// pair; discarded events count as unmatched singles.
///
/// Inputs must be time-sorted; unsorted input is an error, never reordered.
pub fn match_streams(
    left: &[DetectionEvent],
    right: &[DetectionEvent],
    window: f64,
) -> Result<MatchResult> {
    if window <= 0.0 || !window.is_finite() {
        return Err(Error::InvalidParam {
            name: "window",
            value: window,
        });
    }
    check_sorted(left, "left")?;
    check_sorted(right, "right")?;

    let mut pairs = Vec::new();
    let mut unmatched_left = 0u64;
    let mut unmatched_right = 0u64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < left.len() && j < right.len() {
        let l = left[i];
        let r = right[j];
        let gap = (l.time - r.time).abs();
        if gap < window {
            if l.time <= r.time {
                // l is earliest; r may prefer the next left event
                if i + 1 < left.len() && (left[i + 1].time - r.time).abs() < gap {
                    i += 1;
                    unmatched_left += 1;
                } else {
                    pairs.push(CoincidencePair { left: l, right: r });
                    i += 1;
                    j += 1;
                }
            } else {
                // r is earliest; l may prefer the next right event
                if j + 1 < right.len() && (right[j + 1].time - l.time).abs() < gap {
                    j += 1;
                    unmatched_right += 1;
                } else {
                    pairs.push(CoincidencePair { left: l, right: r });
                    i += 1;
                    j += 1;
                }
            }
        } else if l.time <= r.time {
            i += 1;
            unmatched_left += 1;
        } else {
            j += 1;
            unmatched_right += 1;
        }
    }
    unmatched_left += (left.len() - i) as u64;
    unmatched_right += (right.len() - j) as u64;
    Ok(MatchResult {
        pairs,
        unmatched_left,
        unmatched_right,
    })
}

/// Tabulated coincidences: per-setting-pair counts and sign tables (embedded
/// in 3x3 outcome tables whose zero row and column stay empty).
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceCounts {
    pub tables: TableSet,
    pub n_ab: PairCounts,
}

/// Count pairs per setting combination; the left event's setting indexes
/// Alice, the right event's Bob.
pub fn coincidence_counts(
    pairs: &[CoincidencePair],
    n_settings_a: usize,
    n_settings_b: usize,
) -> Result<CoincidenceCounts> {
    let mut tables = TableSet::zeros(n_settings_a, n_settings_b);
    let mut n_ab = PairCounts::zeros(n_settings_a, n_settings_b);
    for pair in pairs {
        let (a, b) = (pair.left.setting_idx, pair.right.setting_idx);
        if a >= n_settings_a {
            return Err(Error::SettingIndex {
                index: a,
                len: n_settings_a,
            });
        }
        if b >= n_settings_b {
            return Err(Error::SettingIndex {
                index: b,
                len: n_settings_b,
            });
        }
        tables.record(
            a,
            b,
            sign_outcome(pair.left.outcome),
            sign_outcome(pair.right.outcome),
        );
        n_ab.add(a, b, 1);
    }
    Ok(CoincidenceCounts { tables, n_ab })
}

fn sign_outcome(sign: i8) -> crate::model::Outcome {
    if sign >= 0 {
        crate::model::Outcome::Plus
    } else {
        crate::model::Outcome::Minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Outcome;

    pub(crate) fn ev(time: f64) -> DetectionEvent {
        DetectionEvent {
            time,
            setting_idx: 0,
            outcome: 1,
            emission: None,
        }
    }

    fn times(events: &[f64]) -> Vec<DetectionEvent> {
        events.iter().copied().map(ev).collect()
    }

    #[test]
    fn trial_paired_window_cases() {
        let rec = |da: f64, db: f64| TrialRecord {
            trial: 0,
            a_idx: 0,
            b_idx: 0,
            a_out: Outcome::Plus,
            b_out: Outcome::Minus,
            delay_a: da,
            delay_b: db,
        };
        assert_eq!(match_trial_paired(&[rec(0.0, 0.0)], 0.05).len(), 1);
        assert_eq!(match_trial_paired(&[rec(0.1, 0.2)], 0.05).len(), 0);
        // |0.1 - 0.1339| = 0.0339 < 0.034
        assert_eq!(match_trial_paired(&[rec(0.1, 0.1339)], 0.034).len(), 1);
    }

    #[test]
    fn single_coincident_pair() {
        let res = match_streams(&times(&[1.0]), &times(&[1.0]), 0.1).unwrap();
        assert_eq!(res.pairs.len(), 1);
        assert_eq!((res.unmatched_left, res.unmatched_right), (0, 0));
    }

    #[test]
    fn disjoint_events_unmatched() {
        let res = match_streams(&times(&[1.0]), &times(&[2.0]), 0.1).unwrap();
        assert!(res.pairs.is_empty());
        assert_eq!((res.unmatched_left, res.unmatched_right), (1, 1));
    }

    #[test]
    fn nearest_neighbor_beats_first_come() {
        let res = match_streams(&times(&[1.00, 1.05]), &times(&[1.04]), 0.1).unwrap();
        assert_eq!(res.pairs.len(), 1);
        assert_eq!(res.pairs[0].left.time, 1.05);
        assert_eq!(res.pairs[0].right.time, 1.04);
        assert_eq!((res.unmatched_left, res.unmatched_right), (1, 0));
    }

    #[test]
    fn tie_keeps_earlier_candidate() {
        // right event at 1.5 exactly equidistant from lefts at 1.0 and 2.0
        let res = match_streams(&times(&[1.0, 2.0]), &times(&[1.5]), 1.0).unwrap();
        assert_eq!(res.pairs.len(), 1);
        assert_eq!(res.pairs[0].left.time, 1.0);
        assert_eq!((res.unmatched_left, res.unmatched_right), (1, 0));
    }

    #[test]
    fn unsorted_input_rejected() {
        let err = match_streams(&times(&[2.0, 1.0]), &times(&[1.5]), 0.1);
        assert_eq!(
            err,
            Err(Error::UnsortedStream {
                side: "left",
                index: 1
            })
        );
        let err = match_streams(&times(&[1.0]), &times(&[3.0, 2.5]), 0.1);
        assert_eq!(
            err,
            Err(Error::UnsortedStream {
                side: "right",
                index: 1
            })
        );
    }

    #[test]
    fn window_must_be_positive() {
        assert!(match_streams(&times(&[1.0]), &times(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn counts_from_pairs() {
        let mut left = ev(1.0);
        left.setting_idx = 0;
        left.outcome = 1;
        let mut right = ev(1.0);
        right.setting_idx = 0;
        right.outcome = -1;
        let pairs = [CoincidencePair { left, right }];
        let counts = coincidence_counts(&pairs, 2, 2).unwrap();
        assert_eq!(
            counts.tables.table(0, 0).get(Outcome::Plus, Outcome::Minus),
            1
        );
        assert_eq!(counts.n_ab.get(0, 0), 1);
        assert_eq!(counts.n_ab.total(), 1);

        let empty = coincidence_counts(&[], 2, 2).unwrap();
        assert_eq!(empty.tables.total(), 0);
    }

    #[test]
    fn counts_reject_out_of_range_setting() {
        let mut left = ev(1.0);
        left.setting_idx = 5;
        let right = ev(1.0);
        let pairs = [CoincidencePair { left, right }];
        assert!(coincidence_counts(&pairs, 2, 2).is_err());
    }

    #[test]
    fn paper_pair_totals_arithmetic() {
        // setting-pair totals as in the reference clocked run
        let totals = [[27_416u64, 27_512], [27_345, 27_425]];
        let mut pairs = Vec::new();
        for (i, row) in totals.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                for _ in 0..n {
                    let mut l = ev(0.0);
                    l.setting_idx = i;
                    let mut r = ev(0.0);
                    r.setting_idx = j;
                    pairs.push(CoincidencePair { left: l, right: r });
                }
            }
        }
        let counts = coincidence_counts(&pairs, 2, 2).unwrap();
        for (i, row) in totals.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                assert_eq!(counts.n_ab.get(i, j), want);
            }
        }
        assert_eq!(counts.n_ab.total(), 109_698);
    }
}
