//! Calibration grid: at a given starting mood, which (reb, frac, relevance)
//! points make an agent break the norm on its first encounter.

use serde::Serialize;

use crate::agent::RoleRegistry;
use crate::lang::Pad;
use crate::norm::{clamp_pad, compliance_utility, scalar_mood, UtilityInputs};

use super::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepGrid {
    pub reb: Vec<f64>,
    pub frac: Vec<f64>,
    pub relevance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub reb: f64,
    pub frac: f64,
    pub relevance: f64,
    pub comply: f64,
    #[serde(rename = "break")]
    pub break_score: f64,
    pub break_first: bool,
}

pub const SWEEP_HEADER: &str = "reb,frac,relevance,comply,break,break_first";

/// Every grid point, evaluated with mood `sigma` and pre-appraisal `pa`.
pub fn sweep(grid: &SweepGrid, sigma: Pad, pa: Pad) -> Vec<SweepPoint> {
    let s = scalar_mood(sigma);
    let s_new = scalar_mood(clamp_pad(Pad::new(sigma.pleasure + pa.pleasure, sigma.arousal + pa.arousal)));
    let mut out = Vec::new();
    for &reb in &grid.reb {
        for &frac in &grid.frac {
            for &relevance in &grid.relevance {
                let (comply, brk) = compliance_utility(UtilityInputs {
                    reb,
                    frac_affected: frac,
                    s,
                    s_new,
                    relevance,
                });
                out.push(SweepPoint {
                    reb,
                    frac,
                    relevance,
                    comply,
                    break_score: brk,
                    // Ties go to compliance.
                    break_first: brk > comply,
                });
            }
        }
    }
    out
}

fn push_unique(v: &mut Vec<f64>, x: f64) {
    if !v.contains(&x) {
        v.push(x);
    }
}

/// The points a scenario actually visits: the rebelliousness of each agent
/// that has plans of its own, each injected norm's affected fraction and
/// relevance.
pub fn scenario_grid(scenario: &Scenario) -> SweepGrid {
    let registry = RoleRegistry::new(scenario.roles());
    let mut grid = SweepGrid::default();
    for (spec, prog) in scenario.config.agents.iter().zip(&scenario.programs) {
        if !spec.observer && !prog.plans.is_empty() {
            push_unique(&mut grid.reb, prog.personality.rebelliousness);
        }
    }
    for decl in scenario.config.injected_norms() {
        push_unique(&mut grid.frac, registry.fraction_affected(&decl.affected));
        push_unique(&mut grid.relevance, decl.relevance);
    }
    grid
}

/// Pre-appraisal of the first injected norm, or zero.
pub fn scenario_pa(scenario: &Scenario) -> Pad {
    scenario
        .config
        .injected_norms()
        .first()
        .map(|d| d.pre_appraisal)
        .unwrap_or(Pad::ZERO)
}

pub fn write_csv<W: std::io::Write>(out: W, points: &[SweepPoint]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER.split(','))?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
