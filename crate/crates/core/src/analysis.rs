//! Statistics over measurement outcomes: 3x3 outcome tables, the correlation
//! estimator, the CHSH sum, detection/coincidence efficiencies, the
//! loophole-adjusted bounds, and report assembly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelId, Outcome};

/// 3x3 count matrix for one setting pair; rows are Alice's outcome in the
/// order (+1, 0, -1), columns Bob's in the same order. The orientation is
/// fixed here and serialized as-is.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeTable {
    counts: [[u64; 3]; 3],
}

impl OutcomeTable {
    pub fn zeros() -> Self {
        OutcomeTable {
            counts: [[0; 3]; 3],
        }
    }

    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        OutcomeTable { counts }
    }

    pub fn counts(&self) -> &[[u64; 3]; 3] {
        &self.counts
    }

    pub fn record(&mut self, alice: Outcome, bob: Outcome) {
        self.counts[alice.index()][bob.index()] += 1;
    }

    pub fn get(&self, alice: Outcome, bob: Outcome) -> u64 {
        self.counts[alice.index()][bob.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&mut self, other: &OutcomeTable) {
        for (row, other_row) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (cell, &add) in row.iter_mut().zip(other_row.iter()) {
                *cell += add;
            }
        }
    }

    fn corners(&self) -> [u64; 4] {
        let c = &self.counts;
        [c[0][0], c[0][2], c[2][0], c[2][2]]
    }
}

/// One `OutcomeTable` per (Alice setting, Bob setting) combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSet {
    n_a: usize,
    n_b: usize,
    tables: Vec<OutcomeTable>,
}

impl TableSet {
    pub fn zeros(n_a: usize, n_b: usize) -> Self {
        TableSet {
            n_a,
            n_b,
            tables: vec![OutcomeTable::zeros(); n_a * n_b],
        }
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn table(&self, a_idx: usize, b_idx: usize) -> &OutcomeTable {
        &self.tables[a_idx * self.n_b + b_idx]
    }

    pub fn record(&mut self, a_idx: usize, b_idx: usize, alice: Outcome, bob: Outcome) {
        self.tables[a_idx * self.n_b + b_idx].record(alice, bob);
    }

    pub fn set_table(&mut self, a_idx: usize, b_idx: usize, table: OutcomeTable) {
        self.tables[a_idx * self.n_b + b_idx] = table;
    }

    /// Cell-wise addition; shard results merge in any order.
    pub fn merge(&mut self, other: &TableSet) {
        assert_eq!((self.n_a, self.n_b), (other.n_a, other.n_b));
        for (t, o) in self.tables.iter_mut().zip(other.tables.iter()) {
            t.merge(o);
        }
    }

    pub fn total(&self) -> u64 {
        self.tables.iter().map(|t| t.total()).sum()
    }
}

/// Per-setting-pair event counts (pairs matched, singles seen, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    n_a: usize,
    n_b: usize,
    counts: Vec<u64>,
}

impl PairCounts {
    pub fn zeros(n_a: usize, n_b: usize) -> Self {
        PairCounts {
            n_a,
            n_b,
            counts: vec![0; n_a * n_b],
        }
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn get(&self, a_idx: usize, b_idx: usize) -> u64 {
        self.counts[a_idx * self.n_b + b_idx]
    }

    pub fn add(&mut self, a_idx: usize, b_idx: usize, n: u64) {
        self.counts[a_idx * self.n_b + b_idx] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Correlation estimator over the sign outcomes of a table: the zero row and
/// column are excluded, `(n++ + n-- - n+- - n-+) / (n++ + n-- + n+- + n-+)`.
pub fn rho(table: &OutcomeTable) -> Result<f64> {
    let [pp, pm, mp, mm] = table.corners();
    let den = pp + pm + mp + mm;
    if den == 0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok(((pp + mm) as f64 - (pm + mp) as f64) / den as f64)
}

/// Default CHSH contrast for correlations indexed `[alice_setting][bob_setting]`
/// with the spin-half grid (Alice 0/90, Bob 45/135): the positive sign sits on
/// the (a, b') pair, whose predicted correlation is +cos 45.
pub const CHSH_CONTRAST: [[f64; 2]; 2] = [[-1.0, 1.0], [-1.0, -1.0]];

/// Contrast-weighted sum of the four correlations.
pub fn chsh(corrs: &[[f64; 2]; 2], contrast: &[[f64; 2]; 2]) -> Result<f64> {
    let mut plus = 0;
    for row in contrast {
        for &c in row {
            if c == 1.0 {
                plus += 1;
            } else if c != -1.0 {
                return Err(Error::InvalidContrast);
            }
        }
    }
    if plus != 1 && plus != 3 {
        return Err(Error::InvalidContrast);
    }
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += contrast[i][j] * corrs[i][j];
        }
    }
    Ok(s)
}

/// P(both detected | Bob detected): corner counts over everything with a
/// detected Bob outcome (all Alice rows, Bob columns +/-1).
pub fn eta_given_bob(table: &OutcomeTable) -> Result<f64> {
    let num: u64 = table.corners().iter().sum();
    let c = table.counts();
    let den: u64 = (0..3).map(|r| c[r][0] + c[r][2]).sum();
    if den == 0 {
        return Err(Error::UndefinedEfficiency);
    }
    Ok(num as f64 / den as f64)
}

/// P(both detected | Alice detected): same numerator over Alice rows +/-1.
pub fn eta_given_alice(table: &OutcomeTable) -> Result<f64> {
    let num: u64 = table.corners().iter().sum();
    let c = table.counts();
    let den: u64 = c[0].iter().sum::<u64>() + c[2].iter().sum::<u64>();
    if den == 0 {
        return Err(Error::UndefinedEfficiency);
    }
    Ok(num as f64 / den as f64)
}

/// Minimum detection efficiency over all setting pairs and both party
/// permutations.
pub fn eta_min(tables: &TableSet) -> Result<f64> {
    let mut min = f64::INFINITY;
    for i in 0..tables.n_a() {
        for j in 0..tables.n_b() {
            let t = tables.table(i, j);
            min = min.min(eta_given_bob(t)?).min(eta_given_alice(t)?);
        }
    }
    Ok(min)
}

/// Detection-loophole adjusted CHSH bound, `4/eta - 2`.
pub fn detection_bound(eta: f64) -> Result<f64> {
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::BoundArgument(eta));
    }
    Ok(4.0 / eta - 2.0)
}

/// Coincidence-loophole adjusted CHSH bound, `6/gamma - 4`. Conjectured, not
/// proven; reported as such.
pub fn coincidence_bound(gamma: f64) -> Result<f64> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::BoundArgument(gamma));
    }
    Ok(6.0 / gamma - 4.0)
}

/// Overall coincidence efficiency: matched pairs over singles on one side.
pub fn gamma_overall(n_pairs: u64, n_singles: u64) -> Result<f64> {
    if n_singles == 0 {
        return Err(Error::UndefinedEfficiency);
    }
    if n_pairs > n_singles {
        return Err(Error::PairsExceedSingles {
            pairs: n_pairs,
            singles: n_singles,
        });
    }
    Ok(n_pairs as f64 / n_singles as f64)
}

/// Per-setting-pair coincidence efficiencies and their minimum.
///
/// For pair (i, j), the given-Bob ratio divides the matched-pair count by
/// Bob's singles in emissions whose settings were (i, j); given-Alice divides
/// by Alice's. Requires emission-attributed singles counts.
pub fn gamma_min_from_counts(
    pair_counts: &PairCounts,
    left_singles: &PairCounts,
    right_singles: &PairCounts,
) -> Result<GammaDetail> {
    let (n_a, n_b) = (pair_counts.n_a(), pair_counts.n_b());
    let mut given_bob = vec![0.0; n_a * n_b];
    let mut given_alice = vec![0.0; n_a * n_b];
    let mut min = f64::INFINITY;
    for i in 0..n_a {
        for j in 0..n_b {
            let pairs = pair_counts.get(i, j);
            let (l, r) = (left_singles.get(i, j), right_singles.get(i, j));
            if l == 0 || r == 0 {
                return Err(Error::UndefinedEfficiency);
            }
            let gb = pairs as f64 / r as f64;
            let ga = pairs as f64 / l as f64;
            given_bob[i * n_b + j] = gb;
            given_alice[i * n_b + j] = ga;
            min = min.min(gb).min(ga);
        }
    }
    Ok(GammaDetail {
        n_a,
        n_b,
        given_bob,
        given_alice,
        min,
    })
}

/// Result of the per-setting-pair gamma computation.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaDetail {
    n_a: usize,
    n_b: usize,
    pub given_bob: Vec<f64>,
    pub given_alice: Vec<f64>,
    pub min: f64,
}

impl GammaDetail {
    pub fn given_bob_at(&self, i: usize, j: usize) -> f64 {
        self.given_bob[i * self.n_b + j]
    }

    pub fn given_alice_at(&self, i: usize, j: usize) -> f64 {
        self.given_alice[i * self.n_b + j]
    }
}

/// Tsirelson bound, the quantum-mechanical maximum of |S|.
pub const TSIRELSON: f64 = 2.828427124746190097603377448419396157;

/// Everything the CHSH analysis produces for one run. Matrix fields are
/// indexed `[alice_setting][bob_setting]`; `counts[i][j]` is the 3x3 outcome
/// table of that pair. Gamma fields are present for coincidence-selected
/// (clocked) data and `null` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub model: Option<ModelId>,
    pub alice_settings_deg: [f64; 2],
    pub bob_settings_deg: [f64; 2],
    pub corrs: [[f64; 2]; 2],
    #[serde(rename = "S")]
    pub s: f64,
    /// Quantum prediction `-cos(beta - alpha)` per setting pair.
    pub qm: [[f64; 2]; 2],
    pub tsirelson: f64,
    pub eta_given_bob: [[f64; 2]; 2],
    pub eta_given_alice: [[f64; 2]; 2],
    pub eta_min: f64,
    pub detection_bound: f64,
    pub gamma: Option<f64>,
    pub gamma_given_bob: Option<[[f64; 2]; 2]>,
    pub gamma_given_alice: Option<[[f64; 2]; 2]>,
    pub gamma_min: Option<f64>,
    /// Conjectured bound `6/gamma - 4` from the overall gamma.
    pub coincidence_bound: Option<f64>,
    pub singles_left: Option<u64>,
    pub singles_right: Option<u64>,
    pub n_ab: Option<[[u64; 2]; 2]>,
    pub counts: [[OutcomeTable; 2]; 2],
}

fn grid2<T: Copy + Default>(f: impl Fn(usize, usize) -> T) -> [[T; 2]; 2] {
    let mut out = [[T::default(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = f(i, j);
        }
    }
    out
}

fn try_grid2<T: Copy + Default>(f: impl Fn(usize, usize) -> Result<T>) -> Result<[[T; 2]; 2]> {
    let mut out = [[T::default(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = f(i, j)?;
        }
    }
    Ok(out)
}

fn check_chsh_dims(n_a: usize, n_b: usize) -> Result<()> {
    if n_a != 2 || n_b != 2 {
        return Err(Error::NotChsh { n_a, n_b });
    }
    Ok(())
}

fn report_core(
    model: Option<ModelId>,
    tables: &TableSet,
    alice_rad: &[f64],
    bob_rad: &[f64],
) -> Result<ChshReport> {
    check_chsh_dims(tables.n_a(), tables.n_b())?;
    check_chsh_dims(alice_rad.len(), bob_rad.len())?;
    let corrs = try_grid2(|i, j| rho(tables.table(i, j)))?;
    let s = chsh(&corrs, &CHSH_CONTRAST)?;
    let egb = try_grid2(|i, j| eta_given_bob(tables.table(i, j)))?;
    let ega = try_grid2(|i, j| eta_given_alice(tables.table(i, j)))?;
    let eta_min = eta_min(tables)?;
    Ok(ChshReport {
        model,
        alice_settings_deg: [alice_rad[0].to_degrees(), alice_rad[1].to_degrees()],
        bob_settings_deg: [bob_rad[0].to_degrees(), bob_rad[1].to_degrees()],
        corrs,
        s,
        qm: grid2(|i, j| -(bob_rad[j] - alice_rad[i]).cos()),
        tsirelson: TSIRELSON,
        eta_given_bob: egb,
        eta_given_alice: ega,
        eta_min,
        detection_bound: detection_bound(eta_min)?,
        gamma: None,
        gamma_given_bob: None,
        gamma_given_alice: None,
        gamma_min: None,
        coincidence_bound: None,
        singles_left: None,
        singles_right: None,
        n_ab: None,
        counts: grid2(|i, j| *tables.table(i, j)),
    })
}

/// Assemble the report for detection-selected (pulsed) tables.
pub fn assemble_report_pulsed(
    model: Option<ModelId>,
    tables: &TableSet,
    alice_rad: &[f64],
    bob_rad: &[f64],
) -> Result<ChshReport> {
    report_core(model, tables, alice_rad, bob_rad)
}

/// Assemble the report for coincidence-selected (clocked) data: sign tables of
/// the accepted pairs plus singles attributed per setting pair. The overall
/// gamma divides total pairs by the larger singles total (the smaller of the
/// two per-side ratios), matching the minimum-over-permutations convention.
pub fn assemble_report_clocked(
    model: Option<ModelId>,
    tables: &TableSet,
    left_singles: &PairCounts,
    right_singles: &PairCounts,
    alice_rad: &[f64],
    bob_rad: &[f64],
) -> Result<ChshReport> {
    let mut report = report_core(model, tables, alice_rad, bob_rad)?;
    let pair_counts = {
        let mut pc = PairCounts::zeros(tables.n_a(), tables.n_b());
        for i in 0..tables.n_a() {
            for j in 0..tables.n_b() {
                pc.add(i, j, tables.table(i, j).total());
            }
        }
        pc
    };
    let singles_left = left_singles.total();
    let singles_right = right_singles.total();
    let gamma = gamma_overall(pair_counts.total(), singles_left.max(singles_right))?;
    let detail = gamma_min_from_counts(&pair_counts, left_singles, right_singles)?;
    report.gamma = Some(gamma);
    report.gamma_given_bob = Some(grid2(|i, j| detail.given_bob_at(i, j)));
    report.gamma_given_alice = Some(grid2(|i, j| detail.given_alice_at(i, j)));
    report.gamma_min = Some(detail.min);
    report.coincidence_bound = Some(coincidence_bound(gamma)?);
    report.singles_left = Some(singles_left);
    report.singles_right = Some(singles_right);
    report.n_ab = Some(grid2(|i, j| pair_counts.get(i, j)));
    Ok(report)
}

/// Round to `digits` significant decimal digits. Report values are serialized
/// this way (7 digits) so printed numbers compare cleanly across encodings.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (v * factor).round() / factor
}

impl ChshReport {
    /// Copy with every float rounded to 7 significant digits, ready for
    /// serialization.
    pub fn rounded(&self) -> ChshReport {
        let r = |v: f64| round_sig(v, 7);
        let rg = |g: &[[f64; 2]; 2]| grid2(|i, j| r(g[i][j]));
        ChshReport {
            model: self.model,
            alice_settings_deg: self.alice_settings_deg.map(r),
            bob_settings_deg: self.bob_settings_deg.map(r),
            corrs: rg(&self.corrs),
            s: r(self.s),
            qm: rg(&self.qm),
            tsirelson: r(self.tsirelson),
            eta_given_bob: rg(&self.eta_given_bob),
            eta_given_alice: rg(&self.eta_given_alice),
            eta_min: r(self.eta_min),
            detection_bound: r(self.detection_bound),
            gamma: self.gamma.map(r),
            gamma_given_bob: self.gamma_given_bob.as_ref().map(&rg),
            gamma_given_alice: self.gamma_given_alice.as_ref().map(rg),
            gamma_min: self.gamma_min.map(r),
            coincidence_bound: self.coincidence_bound.map(r),
            singles_left: self.singles_left,
            singles_right: self.singles_right,
            n_ab: self.n_ab,
            counts: self.counts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference cross-tabulation: four 3x3 blocks in setting-pair order
    // (a,b), (a,b'), (a',b), (a',b').
    pub(crate) const REFERENCE_BLOCKS: [[[u64; 3]; 3]; 4] = [
        [[211, 330, 1284], [351, 66, 325], [1270, 339, 239]],
        [[1304, 339, 201], [315, 56, 336], [250, 340, 1158]],
        [[213, 324, 1313], [319, 49, 348], [1234, 311, 210]],
        [[205, 305, 1290], [314, 60, 319], [1163, 341, 240]],
    ];

    pub(crate) fn reference_tables() -> TableSet {
        let mut ts = TableSet::zeros(2, 2);
        let order = [(0usize, 0usize), (0, 1), (1, 0), (1, 1)];
        for (block, (i, j)) in REFERENCE_BLOCKS.iter().zip(order) {
            ts.tables[i * 2 + j] = OutcomeTable::from_counts(*block);
        }
        ts
    }

    #[test]
    fn rho_reference_value() {
        let t = OutcomeTable::from_counts(REFERENCE_BLOCKS[0]);
        let r = rho(&t).unwrap();
        assert!((r - (-0.7003995)).abs() < 5e-8, "rho = {r}");
    }

    #[test]
    fn rho_trivial_cases() {
        let mut all_pp = OutcomeTable::zeros();
        all_pp.record(Outcome::Plus, Outcome::Plus);
        assert_eq!(rho(&all_pp).unwrap(), 1.0);

        let balanced = OutcomeTable::from_counts([[5, 0, 5], [0, 9, 0], [5, 0, 5]]);
        assert_eq!(rho(&balanced).unwrap(), 0.0);

        let zeros_only = OutcomeTable::from_counts([[0, 3, 0], [2, 7, 4], [0, 1, 0]]);
        assert_eq!(rho(&zeros_only), Err(Error::UndefinedCorrelation));
    }

    #[test]
    fn rho_scale_invariant() {
        let t = OutcomeTable::from_counts(REFERENCE_BLOCKS[2]);
        let scaled = OutcomeTable::from_counts(REFERENCE_BLOCKS[2].map(|r| r.map(|c| c * 17)));
        assert_eq!(rho(&t).unwrap(), rho(&scaled).unwrap());
    }

    #[test]
    fn chsh_reference_value() {
        // Correlation matrix as printed by the reference analysis (transposed
        // orientation) with its column-major contrast c(-1, +1, -1, -1).
        let corrs = [[-0.7003995, -0.7151515], [0.6903536, -0.6928916]];
        let contrast = [[-1.0, -1.0], [1.0, -1.0]];
        let s = chsh(&corrs, &contrast).unwrap();
        assert!((s - 2.798796).abs() < 5e-7, "S = {s}");
    }

    #[test]
    fn chsh_trivial_and_validation() {
        assert_eq!(chsh(&[[0.0; 2]; 2], &CHSH_CONTRAST).unwrap(), 0.0);
        let max = chsh(&[[-1.0, 1.0], [-1.0, -1.0]], &CHSH_CONTRAST).unwrap();
        assert_eq!(max, 4.0);
        assert_eq!(
            chsh(&[[0.5; 2]; 2], &[[1.0, 1.0], [-1.0, -1.0]]),
            Err(Error::InvalidContrast)
        );
        assert_eq!(
            chsh(&[[0.5; 2]; 2], &[[0.5, 1.0], [-1.0, -1.0]]),
            Err(Error::InvalidContrast)
        );
    }

    #[test]
    fn chsh_linear_under_consistent_permutation() {
        let corrs = [[-0.7, 0.69], [-0.71, -0.68]];
        let contrast = CHSH_CONTRAST;
        let s = chsh(&corrs, &contrast).unwrap();
        // swap both rows of corrs and contrast together
        let corrs_sw = [corrs[1], corrs[0]];
        let contrast_sw = [contrast[1], contrast[0]];
        assert!((s - chsh(&corrs_sw, &contrast_sw).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn eta_reference_values() {
        let t = OutcomeTable::from_counts(REFERENCE_BLOCKS[0]);
        let gb = eta_given_bob(&t).unwrap();
        let ga = eta_given_alice(&t).unwrap();
        assert!((gb - 0.8163043).abs() < 5e-8, "eta_given_bob = {gb}");
        assert!((ga - 0.8178601).abs() < 5e-8, "eta_given_alice = {ga}");
    }

    #[test]
    fn eta_no_nondetections_is_one() {
        let t = OutcomeTable::from_counts([[10, 0, 3], [0, 0, 0], [7, 0, 4]]);
        assert_eq!(eta_given_bob(&t).unwrap(), 1.0);
        assert_eq!(eta_given_alice(&t).unwrap(), 1.0);
    }

    #[test]
    fn eta_min_reference_value() {
        let tables = reference_tables();
        let m = eta_min(&tables).unwrap();
        assert!((m - 0.8109688).abs() < 5e-8, "eta_min = {m}");
    }

    #[test]
    fn eta_min_picks_dominating_table() {
        let mut ts = TableSet::zeros(2, 2);
        let good = OutcomeTable::from_counts([[9, 1, 0], [0, 0, 1], [0, 1, 9]]);
        let bad = OutcomeTable::from_counts([[1, 1, 0], [1, 0, 1], [0, 1, 1]]);
        for (i, j) in [(0, 0), (0, 1), (1, 0)] {
            ts.tables[i * 2 + j] = good;
        }
        ts.tables[3] = bad;
        let m = eta_min(&ts).unwrap();
        assert_eq!(
            m,
            eta_given_bob(&bad)
                .unwrap()
                .min(eta_given_alice(&bad).unwrap())
        );
    }

    #[test]
    fn bounds_exact_points() {
        assert_eq!(detection_bound(1.0).unwrap(), 2.0);
        assert_eq!(detection_bound(2.0 / 3.0).unwrap(), 4.0);
        assert_eq!(coincidence_bound(1.0).unwrap(), 2.0);
        assert_eq!(coincidence_bound(0.75).unwrap(), 4.0);
        assert!((detection_bound(0.8109688).unwrap() - 2.932372).abs() < 5e-7);
        assert!(detection_bound(0.0).is_err());
        assert!(coincidence_bound(-0.2).is_err());
    }

    #[test]
    fn bounds_strictly_decreasing() {
        let mut prev_d = f64::INFINITY;
        let mut prev_c = f64::INFINITY;
        for k in 1..=100 {
            let x = k as f64 / 100.0;
            let d = detection_bound(x).unwrap();
            let c = coincidence_bound(x).unwrap();
            assert!(d < prev_d && c < prev_c);
            prev_d = d;
            prev_c = c;
        }
    }

    #[test]
    fn gamma_overall_values() {
        let g = gamma_overall(109_698, 199_994).unwrap();
        assert!((g - 0.5485065).abs() < 5e-8, "gamma = {g}");
        assert!((coincidence_bound(g).unwrap() - 6.938796).abs() < 5e-7);
        assert_eq!(gamma_overall(0, 100).unwrap(), 0.0);
        assert_eq!(gamma_overall(100, 100).unwrap(), 1.0);
        assert!(gamma_overall(101, 100).is_err());
        assert!(gamma_overall(1, 0).is_err());
    }

    #[test]
    fn gamma_min_fixture_hand_enumerated() {
        // 10 emissions over a 2x2 setting grid; pairing decided by hand.
        // emissions per (i,j):    (0,0): 3   (0,1): 3   (1,0): 2   (1,1): 2
        // pairs matched per (i,j): (0,0): 2   (0,1): 3   (1,0): 1   (1,1): 0
        let mut pairs = PairCounts::zeros(2, 2);
        pairs.add(0, 0, 2);
        pairs.add(0, 1, 3);
        pairs.add(1, 0, 1);
        let mut left = PairCounts::zeros(2, 2);
        let mut right = PairCounts::zeros(2, 2);
        for (i, j, n) in [(0, 0, 3u64), (0, 1, 3), (1, 0, 2), (1, 1, 2)] {
            left.add(i, j, n);
            right.add(i, j, n);
        }
        let detail = gamma_min_from_counts(&pairs, &left, &right).unwrap();
        assert_eq!(detail.given_bob_at(0, 0), 2.0 / 3.0);
        assert_eq!(detail.given_bob_at(0, 1), 1.0);
        assert_eq!(detail.given_alice_at(1, 0), 0.5);
        assert_eq!(detail.min, 0.0); // the (1,1) pair matched nothing
    }

    #[test]
    fn gamma_min_trivial_cases() {
        let mut all = PairCounts::zeros(2, 2);
        let mut singles = PairCounts::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                all.add(i, j, 5);
                singles.add(i, j, 5);
            }
        }
        assert_eq!(
            gamma_min_from_counts(&all, &singles, &singles).unwrap().min,
            1.0
        );
        let none = PairCounts::zeros(2, 2);
        assert_eq!(
            gamma_min_from_counts(&none, &singles, &singles)
                .unwrap()
                .min,
            0.0
        );
        assert!(gamma_min_from_counts(&none, &none, &singles).is_err());
    }

    #[test]
    fn report_reference_run() {
        let tables = reference_tables();
        let alice = [0.0f64.to_radians(), 90.0f64.to_radians()];
        let bob = [45.0f64.to_radians(), 135.0f64.to_radians()];
        let rep = assemble_report_pulsed(None, &tables, &alice, &bob).unwrap();
        assert!((rep.s - 2.798796).abs() < 5e-7);
        assert!((rep.eta_min - 0.8109688).abs() < 5e-8);
        assert!((rep.detection_bound - 2.932372).abs() < 5e-7);
        let qm45 = round_sig(std::f64::consts::FRAC_1_SQRT_2, 7);
        assert!((rep.qm[0][0] + qm45).abs() < 1e-7);
        assert!((rep.qm[0][1] - qm45).abs() < 1e-7);
        assert!(rep.gamma.is_none());
        let rounded = rep.rounded();
        assert_eq!(rounded.s, 2.798796);
        assert_eq!(rounded.eta_min, 0.8109688);
        assert_eq!(rounded.detection_bound, 2.932372);
    }

    #[test]
    fn report_empty_input_errors() {
        let tables = TableSet::zeros(2, 2);
        let alice = [0.0, 1.0];
        let bob = [0.5, 2.0];
        assert!(assemble_report_pulsed(None, &tables, &alice, &bob).is_err());
    }

    #[test]
    fn report_perfect_correlations() {
        let mut tables = TableSet::zeros(2, 2);
        for (i, j) in [(0usize, 0usize), (1, 0), (1, 1)] {
            for _ in 0..10 {
                tables.record(i, j, Outcome::Plus, Outcome::Minus);
            }
        }
        for _ in 0..10 {
            tables.record(0, 1, Outcome::Plus, Outcome::Plus);
        }
        let alice = [0.0, std::f64::consts::FRAC_PI_2];
        let bob = [
            std::f64::consts::FRAC_PI_4,
            3.0 * std::f64::consts::FRAC_PI_4,
        ];
        let rep = assemble_report_pulsed(None, &tables, &alice, &bob).unwrap();
        assert_eq!(rep.s, 4.0);
        assert_eq!(rep.eta_min, 1.0);
        assert_eq!(rep.detection_bound, 2.0);
    }

    #[test]
    fn round_sig_behavior() {
        assert_eq!(round_sig(2.7987962, 7), 2.798796);
        assert_eq!(round_sig(0.54850645519, 7), 0.5485065);
        assert_eq!(round_sig(-0.70039946737, 7), -0.7003995);
        assert_eq!(round_sig(0.0, 7), 0.0);
        assert_eq!(round_sig(123456789.0, 7), 123456800.0);
    }
}
