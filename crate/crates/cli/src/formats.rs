//! File formats: detection-event CSV, pairs CSV, trial-record CSV, sweep CSV,
//! outcome-table files (JSON and the legacy 12-line text block), and the
//! report in JSON or CSV.
//!
//! All text is UTF-8 with LF line endings and '.' decimals. Times carry nine
//! decimal digits (1 ns resolution, well under the smallest stock window).
//! Report values are rounded to 7 significant digits before encoding, so the
//! JSON and CSV forms of a report agree on every numeric field.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use bellsim_core::analysis::{round_sig, ChshReport, OutcomeTable, TableSet};
use bellsim_core::coincidence::{CoincidencePair, DetectionEvent};
use bellsim_core::engine::{SweepCurve, TrialRecord};
use bellsim_core::model::ModelId;

/// Shortest decimal form of a value already rounded to 7 significant digits.
pub fn sig7(v: f64) -> String {
    format!("{}", round_sig(v, 7))
}

fn time9(t: f64) -> String {
    format!("{t:.9}")
}

// ---------------------------------------------------------------------------
// Detection events
// ---------------------------------------------------------------------------

pub const EVENT_HEADER: &str = "emission,time,setting_deg,outcome";

pub fn render_events(events: &[DetectionEvent], settings_deg: &[f64]) -> String {
    let mut out = String::with_capacity(events.len() * 32 + 32);
    out.push_str(EVENT_HEADER);
    out.push('\n');
    for e in events {
        if let Some(k) = e.emission {
            let _ = write!(out, "{k}");
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            time9(e.time),
            settings_deg[e.setting_idx],
            e.outcome
        );
    }
    out
}

/// Parsed event file: events with indices into the sorted unique setting list.
pub struct EventFile {
    pub events: Vec<DetectionEvent>,
    pub settings_deg: Vec<f64>,
}

pub fn parse_events(text: &str, path: &Path) -> Result<EventFile> {
    let name = path.display();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .with_context(|| format!("{name}: empty file"))?;
    let has_emission = match header.trim() {
        h if h == EVENT_HEADER => true,
        "time,setting_deg,outcome" => false,
        other => bail!("{name}:1: unrecognized header {other:?}"),
    };

    let mut raw: Vec<(Option<u64>, f64, f64, i8)> = Vec::new();
    let mut settings: Vec<f64> = Vec::new();
    let mut prev_time = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if has_emission { 4 } else { 3 };
        if fields.len() != expected {
            bail!(
                "{name}:{lineno}: expected {expected} fields, got {}",
                fields.len()
            );
        }
        let mut it = fields.into_iter();
        let emission = if has_emission {
            let f = it.next().unwrap().trim();
            if f.is_empty() {
                None
            } else {
                Some(
                    f.parse::<u64>()
                        .with_context(|| format!("{name}:{lineno}: bad emission index"))?,
                )
            }
        } else {
            None
        };
        let time: f64 = it
            .next()
            .unwrap()
            .trim()
            .parse()
            .with_context(|| format!("{name}:{lineno}: bad time"))?;
        if !time.is_finite() || time < 0.0 {
            bail!("{name}:{lineno}: time must be finite and >= 0");
        }
        if time < prev_time {
            bail!("{name}:{lineno}: times must be non-decreasing");
        }
        prev_time = time;
        let setting: f64 = it
            .next()
            .unwrap()
            .trim()
            .parse()
            .with_context(|| format!("{name}:{lineno}: bad setting_deg"))?;
        if !(0.0..360.0).contains(&setting) {
            bail!("{name}:{lineno}: setting_deg must lie in [0, 360)");
        }
        let outcome = match it.next().unwrap().trim() {
            "1" | "+1" => 1i8,
            "-1" => -1,
            other => bail!("{name}:{lineno}: outcome must be +1 or -1, got {other:?}"),
        };
        if !settings.contains(&setting) {
            settings.push(setting);
        }
        raw.push((emission, time, setting, outcome));
    }
    settings.sort_by(|a, b| a.total_cmp(b));
    let events = raw
        .into_iter()
        .map(|(emission, time, setting, outcome)| DetectionEvent {
            time,
            setting_idx: settings.iter().position(|&s| s == setting).unwrap(),
            outcome,
            emission,
        })
        .collect();
    Ok(EventFile {
        events,
        settings_deg: settings,
    })
}

pub fn read_events(path: &Path) -> Result<EventFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_events(&text, path)
}

// ---------------------------------------------------------------------------
// Coincidence pairs
// ---------------------------------------------------------------------------

pub const PAIRS_HEADER: &str = "left_emission,left_time,left_setting_deg,left_outcome,\
right_emission,right_time,right_setting_deg,right_outcome";

pub fn render_pairs(
    pairs: &[CoincidencePair],
    left_settings_deg: &[f64],
    right_settings_deg: &[f64],
) -> String {
    let mut out = String::with_capacity(pairs.len() * 64 + 100);
    out.push_str(PAIRS_HEADER);
    out.push('\n');
    let half = |out: &mut String, e: &DetectionEvent, settings: &[f64]| {
        if let Some(k) = e.emission {
            let _ = write!(out, "{k}");
        }
        let _ = write!(
            out,
            ",{},{},{}",
            time9(e.time),
            settings[e.setting_idx],
            e.outcome
        );
    };
    for p in pairs {
        half(&mut out, &p.left, left_settings_deg);
        out.push(',');
        half(&mut out, &p.right, right_settings_deg);
        out.push('\n');
    }
    out
}

pub struct PairsFile {
    pub pairs: Vec<CoincidencePair>,
    pub left_settings_deg: Vec<f64>,
    pub right_settings_deg: Vec<f64>,
}

pub fn read_pairs(path: &Path) -> Result<PairsFile> {
    let name = path.display();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PAIRS_HEADER => {}
        Some((_, other)) => bail!("{name}:1: unrecognized header {other:?}"),
        None => bail!("{name}: empty file"),
    }
    type RawEvent = (Option<u64>, f64, f64, i8);
    let mut raw: Vec<[RawEvent; 2]> = Vec::new();
    let mut left_settings: Vec<f64> = Vec::new();
    let mut right_settings: Vec<f64> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("{name}:{lineno}: expected 8 fields, got {}", fields.len());
        }
        let mut halves = [(None, 0.0, 0.0, 0i8); 2];
        for (h, half) in halves.iter_mut().enumerate() {
            let base = h * 4;
            let emission = {
                let f = fields[base].trim();
                if f.is_empty() {
                    None
                } else {
                    Some(
                        f.parse::<u64>()
                            .with_context(|| format!("{name}:{lineno}: bad emission index"))?,
                    )
                }
            };
            let time: f64 = fields[base + 1]
                .trim()
                .parse()
                .with_context(|| format!("{name}:{lineno}: bad time"))?;
            let setting: f64 = fields[base + 2]
                .trim()
                .parse()
                .with_context(|| format!("{name}:{lineno}: bad setting_deg"))?;
            let outcome = match fields[base + 3].trim() {
                "1" | "+1" => 1i8,
                "-1" => -1,
                other => bail!("{name}:{lineno}: outcome must be +1 or -1, got {other:?}"),
            };
            *half = (emission, time, setting, outcome);
            let list = if h == 0 {
                &mut left_settings
            } else {
                &mut right_settings
            };
            if !list.contains(&setting) {
                list.push(setting);
            }
        }
        raw.push(halves);
    }
    left_settings.sort_by(|a, b| a.total_cmp(b));
    right_settings.sort_by(|a, b| a.total_cmp(b));
    let pairs = raw
        .into_iter()
        .map(|[l, r]| CoincidencePair {
            left: DetectionEvent {
                time: l.1,
                setting_idx: left_settings.iter().position(|&s| s == l.2).unwrap(),
                outcome: l.3,
                emission: l.0,
            },
            right: DetectionEvent {
                time: r.1,
                setting_idx: right_settings.iter().position(|&s| s == r.2).unwrap(),
                outcome: r.3,
                emission: r.0,
            },
        })
        .collect();
    Ok(PairsFile {
        pairs,
        left_settings_deg: left_settings,
        right_settings_deg: right_settings,
    })
}

// ---------------------------------------------------------------------------
// Trial records
// ---------------------------------------------------------------------------

pub const RECORDS_HEADER: &str =
    "emission,a_setting_deg,b_setting_deg,a_outcome,b_outcome,delay_a,delay_b";

pub fn render_records(records: &[TrialRecord], alice_deg: &[f64], bob_deg: &[f64]) -> String {
    let mut out = String::with_capacity(records.len() * 48 + 80);
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.12},{:.12}",
            r.trial,
            alice_deg[r.a_idx],
            bob_deg[r.b_idx],
            r.a_out.value(),
            r.b_out.value(),
            r.delay_a,
            r.delay_b
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Outcome tables: JSON file and the legacy 12-line count block
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct TablesFile {
    pub model: Option<ModelId>,
    pub seed: Option<u64>,
    pub n_trials: Option<u64>,
    pub alice_settings_deg: Vec<f64>,
    pub bob_settings_deg: Vec<f64>,
    /// `tables[i][j]` holds the 3x3 counts for (alice setting i, bob setting j).
    pub tables: Vec<Vec<OutcomeTable>>,
}

impl TablesFile {
    pub fn table_set(&self) -> Result<TableSet> {
        let n_a = self.alice_settings_deg.len();
        let n_b = self.bob_settings_deg.len();
        if self.tables.len() != n_a || self.tables.iter().any(|row| row.len() != n_b) {
            bail!("tables matrix does not match the setting lists ({n_a}x{n_b})");
        }
        let mut set = TableSet::zeros(n_a, n_b);
        for (i, row) in self.tables.iter().enumerate() {
            for (j, table) in row.iter().enumerate() {
                set.set_table(i, j, *table);
            }
        }
        Ok(set)
    }
}

pub fn render_tables_json(file: &TablesFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("tables serialize");
    s.push('\n');
    s
}

/// Legacy input: twelve whitespace-separated 3-count lines, one 3x3 block per
/// setting pair in the order (a,b), (a,b'), (a',b), (a',b').
pub fn parse_legacy_tables(text: &str, path: &Path) -> Result<TableSet> {
    let name = path.display();
    let mut rows: Vec<[u64; 3]> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            bail!(
                "{name}:{lineno}: expected 3 counts per line, got {}",
                fields.len()
            );
        }
        let mut row = [0u64; 3];
        for (slot, f) in row.iter_mut().zip(fields) {
            *slot = f
                .parse()
                .with_context(|| format!("{name}:{lineno}: bad count {f:?}"))?;
        }
        rows.push(row);
    }
    if rows.len() != 12 {
        bail!(
            "{name}: expected 12 count lines (four 3x3 blocks), got {}",
            rows.len()
        );
    }
    let mut set = TableSet::zeros(2, 2);
    for (block, &(i, j)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)]
        .iter()
        .enumerate()
    {
        let counts = [rows[block * 3], rows[block * 3 + 1], rows[block * 3 + 2]];
        set.set_table(i, j, OutcomeTable::from_counts(counts));
    }
    Ok(set)
}

/// Tables input, either the JSON schema written by `simulate` or the legacy
/// 12-line text block (sniffed on the first non-space byte).
pub enum TablesInput {
    Json(TablesFile),
    Legacy(TableSet),
}

pub fn read_tables(path: &Path) -> Result<TablesInput> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let file: TablesFile = serde_json::from_str(&text)
            .with_context(|| format!("{}: invalid tables JSON", path.display()))?;
        Ok(TablesInput::Json(file))
    } else {
        Ok(TablesInput::Legacy(parse_legacy_tables(&text, path)?))
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

pub fn render_report_json(report: &ChshReport) -> String {
    let mut s = serde_json::to_string_pretty(&report.rounded()).expect("report serialize");
    s.push('\n');
    s
}

/// Flat CSV encoding of the report: `field,i,j,value` rows, matrices by cell,
/// table counts as `counts_<i>_<j>` with the outcome-row/column in `i,j`.
pub fn render_report_csv(report: &ChshReport) -> String {
    let rounded = report.rounded();
    let mut out = String::from("field,i,j,value\n");
    let mut scalar = |name: &str, v: Option<String>| {
        let _ = writeln!(out, "{name},,,{}", v.unwrap_or_else(|| "null".into()));
    };
    scalar(
        "model",
        Some(match rounded.model {
            Some(m) => m.to_string(),
            None => "null".into(),
        }),
    );
    scalar("S", Some(sig7(rounded.s)));
    scalar("tsirelson", Some(sig7(rounded.tsirelson)));
    scalar("eta_min", Some(sig7(rounded.eta_min)));
    scalar("detection_bound", Some(sig7(rounded.detection_bound)));
    scalar("gamma", rounded.gamma.map(sig7));
    scalar("gamma_min", rounded.gamma_min.map(sig7));
    scalar("coincidence_bound", rounded.coincidence_bound.map(sig7));
    scalar("singles_left", rounded.singles_left.map(|v| v.to_string()));
    scalar(
        "singles_right",
        rounded.singles_right.map(|v| v.to_string()),
    );
    for (idx, v) in rounded.alice_settings_deg.iter().enumerate() {
        let _ = writeln!(out, "alice_setting_deg,{idx},,{}", sig7(*v));
    }
    for (idx, v) in rounded.bob_settings_deg.iter().enumerate() {
        let _ = writeln!(out, "bob_setting_deg,{idx},,{}", sig7(*v));
    }
    let grid = |out: &mut String, name: &str, g: &[[f64; 2]; 2]| {
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{name},{i},{j},{}", sig7(*v));
            }
        }
    };
    grid(&mut out, "corrs", &rounded.corrs);
    grid(&mut out, "qm", &rounded.qm);
    grid(&mut out, "eta_given_bob", &rounded.eta_given_bob);
    grid(&mut out, "eta_given_alice", &rounded.eta_given_alice);
    if let Some(g) = &rounded.gamma_given_bob {
        grid(&mut out, "gamma_given_bob", g);
    }
    if let Some(g) = &rounded.gamma_given_alice {
        grid(&mut out, "gamma_given_alice", g);
    }
    if let Some(n_ab) = &rounded.n_ab {
        for (i, row) in n_ab.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "n_ab,{i},{j},{v}");
            }
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            let counts = rounded.counts[i][j].counts();
            for (r, row) in counts.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    let _ = writeln!(out, "counts_{i}_{j},{r},{c},{v}");
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Sweep curves
// ---------------------------------------------------------------------------

pub const SWEEP_HEADER: &str = "angle_deg,correlation,neg_cosine_reference,acceptance_rate";

pub fn render_sweep_csv(curve: &SweepCurve, beta_deg: f64) -> String {
    let mut out = String::with_capacity(curve.angles_deg.len() * 40 + 60);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for ((angle, corr), rate) in curve
        .angles_deg
        .iter()
        .zip(&curve.correlation)
        .zip(&curve.acceptance_rate)
    {
        let mut reference = -(angle - beta_deg).to_radians().cos();
        if reference.abs() < 1e-12 {
            reference = 0.0;
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            angle,
            sig7(*corr),
            sig7(reference),
            sig7(*rate)
        );
    }
    out
}
