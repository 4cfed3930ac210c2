use serde::Serialize;

use super::{IeRelation, Subshift, SubshiftError};
use crate::gamma::{
    gamma_tower_iterate, CellRelation, FinitePointSpace, RelationTower, TowerError, TowerLevel,
    TowerSummary, VERDICT_ALL_TOP, VERDICT_NOT_TOP,
};
use crate::ordinal::Ordinal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "CPE-consistent at evidence")]
    CpeConsistent,
    #[serde(rename = "certified not CPE at evidence")]
    NotCpe,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CpeConsistent => "CPE-consistent at evidence",
            Verdict::NotCpe => "certified not CPE at evidence",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

/// The scope every verdict is quoted with.
#[derive(Debug, Clone, Serialize)]
pub struct EvidenceParams {
    pub n_max: usize,
    pub horizon: usize,
    pub density: f64,
    pub required_positions: usize,
    pub budget: usize,
    pub node_budget: usize,
    pub entropy_partition: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub n: usize,
    pub cells: usize,
    pub lower_reach_top: bool,
    pub upper_reach_top: bool,
    /// Rank at this resolution of the upper (sound) relation.
    pub stabilization_stage: Ordinal,
    pub lower_stabilization_stage: Ordinal,
    pub lower_pairs: usize,
    pub upper_pairs: usize,
    /// Diagonal word pairs holding certificates; reported, not fed to Γ.
    pub diagonal_pairs: usize,
    pub undecided_pairs: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyRankReport {
    pub evidence: EvidenceParams,
    pub levels: Vec<LevelReport>,
    pub verdict: Verdict,
}

impl Subshift {
    /// Runs Γ on the lower and upper IE evidence towers for word lengths
    /// `1..=n_max`.
    ///
    /// Γ is applied to the off-diagonal part of each evidence relation.
    /// A level whose upper relation stabilizes below all pairs certifies that
    /// the system is not CPE, because the upper relation over-approximates
    /// the IE pairs seen at that resolution.
    pub fn entropy_rank_report(
        &self,
        n_max: usize,
        horizon: usize,
        density: f64,
        budget: usize,
    ) -> Result<EntropyRankReport, SubshiftError> {
        self.entropy_rank_report_with_budget(n_max, horizon, density, budget, super::DEFAULT_NODE_BUDGET)
    }

    pub fn entropy_rank_report_with_budget(
        &self,
        n_max: usize,
        horizon: usize,
        density: f64,
        budget: usize,
        node_budget: usize,
    ) -> Result<EntropyRankReport, SubshiftError> {
        if n_max == 0 {
            return Err(SubshiftError::ZeroLength);
        }
        if budget == 0 {
            return Err(SubshiftError::Invalid("budget must be at least 1".into()));
        }
        let relations: Vec<IeRelation> = (1..=n_max)
            .map(|n| self.ie_relation_with_budget(n, horizon, density, node_budget))
            .collect::<Result<_, _>>()?;

        let spaces = build_spaces(self, &relations)?;
        let mut lower: Vec<CellRelation> = relations.iter().map(|r| off_diagonal(&r.lower)).collect();
        let mut upper: Vec<CellRelation> = relations.iter().map(|r| off_diagonal(&r.upper)).collect();
        // IE pairs project to IE pairs, so both towers are closed downwards
        for level in (1..relations.len()).rev() {
            let parent = spaces[level].parent().expect("levels past the first have parents");
            for rels in [&mut lower, &mut upper] {
                let pushed: Vec<(usize, usize)> = rels[level]
                    .matrix
                    .pairs()
                    .map(|(i, j)| (parent[i], parent[j]))
                    .filter(|(pi, pj)| pi != pj)
                    .collect();
                for (pi, pj) in pushed {
                    rels[level - 1].matrix.set(pi, pj, true);
                }
            }
        }

        let run = |rels: &[CellRelation]| -> Result<TowerSummary, SubshiftError> {
            let tower = RelationTower::new(
                spaces
                    .iter()
                    .cloned()
                    .zip(rels.iter().cloned())
                    .map(|(space, relation)| TowerLevel { space, relation })
                    .collect(),
            )
            .map_err(|e| SubshiftError::Invalid(e.to_string()))?;
            gamma_tower_iterate(&tower, budget).map_err(|e: TowerError| SubshiftError::Invalid(e.to_string()))
        };
        let lower_summary = run(&lower)?;
        let upper_summary = run(&upper)?;

        let levels = relations
            .iter()
            .zip(lower_summary.levels.iter().zip(&upper_summary.levels))
            .map(|(rel, (lo, up))| LevelReport {
                n: rel.n,
                cells: rel.cells.len(),
                lower_reach_top: lo.reach_top,
                upper_reach_top: up.reach_top,
                stabilization_stage: up.stabilization_stage.clone(),
                lower_stabilization_stage: lo.stabilization_stage.clone(),
                lower_pairs: rel.lower.matrix.count(),
                upper_pairs: rel.upper.matrix.count(),
                diagonal_pairs: (0..rel.cells.len()).filter(|&i| rel.lower.contains(i, i)).count(),
                undecided_pairs: rel.undecided.len(),
                budget_exhausted: lo.budget_exhausted || up.budget_exhausted,
            })
            .collect();

        let verdict = if upper_summary.verdict == VERDICT_NOT_TOP {
            Verdict::NotCpe
        } else if upper_summary.verdict == VERDICT_ALL_TOP && lower_summary.verdict == VERDICT_ALL_TOP {
            Verdict::CpeConsistent
        } else {
            Verdict::Indeterminate
        };
        Ok(EntropyRankReport {
            evidence: EvidenceParams {
                n_max,
                horizon,
                density,
                required_positions: relations[0].required,
                budget,
                node_budget,
                entropy_partition: "generating clopen partition (length-n cylinders)",
            },
            levels,
            verdict,
        })
    }
}

fn off_diagonal(r: &CellRelation) -> CellRelation {
    CellRelation::new(r.matrix.without_diagonal())
}

fn build_spaces(shift: &Subshift, relations: &[IeRelation]) -> Result<Vec<FinitePointSpace>, SubshiftError> {
    let mut spaces: Vec<FinitePointSpace> = Vec::with_capacity(relations.len());
    for (level, rel) in relations.iter().enumerate() {
        let names: Vec<String> = rel.cells.iter().map(|w| shift.spec.decode(w)).collect();
        let mut space = FinitePointSpace::new(names).map_err(|e| SubshiftError::Invalid(e.to_string()))?;
        if level > 0 {
            let coarse = &relations[level - 1].cells;
            let parent = rel
                .cells
                .iter()
                .map(|w| {
                    coarse
                        .binary_search_by(|c| c.as_slice().cmp(&w[..w.len() - 1]))
                        .map_err(|_| SubshiftError::Invalid("prefix of an extendable word is missing".into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            space = space
                .with_parent(parent, coarse.len())
                .map_err(|e| SubshiftError::Invalid(e.to_string()))?;
        }
        spaces.push(space);
    }
    Ok(spaces)
}
