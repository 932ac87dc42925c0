//! Report assembly and rendering (markdown, CSV, JSON) plus the plot-ready
//! trends CSV.
//!
//! All renderings are deterministic for the same input logs, and the CSV and
//! JSON forms carry numerically identical values (both use the shortest
//! round-trip decimal encoding).

use serde::{Deserialize, Serialize};

use super::{
    calibration, cross_perception, observer_accuracy, per_role_stats, round_trends, type_effects,
    AccuracyRow, CalibrationRow, CrossMode, CrossPerception, GameData, PerRoleStats, TrendReport,
    TypeEffectRow,
};
use crate::game::Role;
use crate::log::BackendKind;

/// Rendered beneath the observer-accuracy table in every report.
pub const ACCURACY_FOOTNOTE: &str = "Accuracy, precision, recall, and F1 are derived from the tp/tn/fp/fn counts using the standard formulas; the counts are authoritative. Externally quoted summary figures for the same counts may disagree — when they do, recompute from the counts.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub games: u64,
    pub mode: BackendKind,
    /// Hash of the shared game settings (seed excluded).
    pub settings_hash: String,
    pub seeds: Vec<u64>,
    pub total_statements: u64,
    pub total_judgments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub per_role: Vec<PerRoleStats>,
    pub cross_smoothed: CrossPerception,
    pub cross_raw: CrossPerception,
    pub accuracy: Vec<AccuracyRow>,
    pub accuracy_footnote: String,
    pub calibration: Vec<CalibrationRow>,
    pub trends: TrendReport,
    pub types: Vec<TypeEffectRow>,
}

impl RunReport {
    pub(crate) fn assemble(games: &[GameData], mode: BackendKind, settings_hash: String) -> Self {
        RunReport {
            meta: ReportMeta {
                games: games.len() as u64,
                mode,
                settings_hash,
                seeds: games.iter().map(|g| g.seed).collect(),
                total_statements: games.iter().map(|g| g.statements.len() as u64).sum(),
                total_judgments: games.iter().map(|g| g.judgments.len() as u64).sum(),
            },
            per_role: per_role_stats(games),
            cross_smoothed: cross_perception(games, CrossMode::Smoothed),
            cross_raw: cross_perception(games, CrossMode::RawMean),
            accuracy: observer_accuracy(games),
            accuracy_footnote: ACCURACY_FOOTNOTE.to_string(),
            calibration: calibration(games),
            trends: round_trends(games),
            types: type_effects(games),
        }
    }

    /// Labels of every absent (uncomputable) value cell in the report.
    pub fn absent_cells(&self) -> Vec<String> {
        let mut absent = Vec::new();
        let mut check = |label: String, v: &Option<f64>| {
            if v.is_none() {
                absent.push(label);
            }
        };
        for row in &self.per_role {
            check(format!("per_role.{}.mean_suspicion", row.role), &row.mean_suspicion);
            check(format!("per_role.{}.suspicion_sem", row.role), &row.suspicion_sem);
            check(format!("per_role.{}.mean_flagged", row.role), &row.mean_flagged);
            check(format!("per_role.{}.flagged_sem", row.role), &row.flagged_sem);
        }
        for (name, cross) in [("smoothed", &self.cross_smoothed), ("raw", &self.cross_raw)] {
            for (observer, row) in &cross.cells {
                for (target, cell) in row {
                    if cross.not_applicable.contains(&(*observer, *target)) {
                        continue;
                    }
                    check(format!("cross_{name}.{observer}->{target}"), cell);
                }
            }
        }
        for row in &self.accuracy {
            check(format!("accuracy.{}.accuracy", row.group), &row.accuracy);
            check(format!("accuracy.{}.precision", row.group), &row.precision);
            check(format!("accuracy.{}.recall", row.group), &row.recall);
            check(format!("accuracy.{}.f1", row.group), &row.f1);
        }
        for row in &self.calibration {
            check(format!("calibration.{}.brier", row.group), &row.brier);
            check(format!("calibration.{}.roc_auc", row.group), &row.roc_auc);
            check(format!("calibration.{}.auprc", row.group), &row.auprc);
        }
        for cell in &self.trends.cells {
            check(format!("trends.r{}.{}.sem", cell.round, cell.role), &cell.sem);
        }
        for cell in &self.trends.flagged {
            check(format!("trends.flagged.r{}.sem", cell.round), &cell.sem);
        }
        for (role, slope) in &self.trends.slopes_pp_per_round {
            check(format!("trends.slope.{role}"), slope);
        }
        check("trends.flagged_slope".to_string(), &self.trends.flagged_slope_pp_per_round);
        for row in &self.types {
            check(format!("types.{}.mean_suspicion", row.dtype), &row.mean_suspicion);
            check(format!("types.{}.mean_flagged", row.dtype), &row.mean_flagged);
        }
        absent
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let m = &self.meta;
        out.push_str("# Run report\n\n");
        out.push_str(&format!(
            "- games: {}\n- mode: {}\n- settings hash: {}\n- seeds: {}\n- statements: {}\n- judgments: {}\n\n",
            m.games,
            m.mode,
            m.settings_hash,
            seed_span(&m.seeds),
            m.total_statements,
            m.total_judgments
        ));

        out.push_str("## Per-role statistics\n\n");
        out.push_str("| Role | Statements | Self-deceptions | Avg. suspicion | Avg. flagged |\n");
        out.push_str("|---|---|---|---|---|\n");
        for r in &self.per_role {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.role,
                r.statements,
                r.self_deceptions,
                with_sem(&r.mean_suspicion, &r.suspicion_sem),
                with_sem(&r.mean_flagged, &r.flagged_sem),
            ));
        }
        out.push('\n');

        for (title, cross) in [
            ("## Cross-perception matrix (final smoothed suspicion)", &self.cross_smoothed),
            ("## Cross-perception matrix (raw mean suspicion)", &self.cross_raw),
        ] {
            out.push_str(title);
            out.push_str("\n\nObserver role by target role; distinct-player same-role pairs included, self-pairs excluded.\n\n");
            out.push_str("| Observer \\ Target |");
            for role in Role::ALL {
                out.push_str(&format!(" {role} |"));
            }
            out.push_str("\n|---|---|---|---|---|\n");
            for observer in Role::ALL {
                out.push_str(&format!("| {observer} |"));
                for target in Role::ALL {
                    let cell = if cross.not_applicable.contains(&(observer, target)) {
                        "n/a".to_string()
                    } else {
                        opt(&cross.cells[&observer][&target])
                    };
                    out.push_str(&format!(" {cell} |"));
                }
                out.push('\n');
            }
            out.push('\n');
        }

        out.push_str("## Observer accuracy\n\n");
        out.push_str("| Observer | TP | TN | FP | FN | Accuracy | Precision | Recall | F1 |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.accuracy {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                r.group,
                r.counts.true_pos,
                r.counts.true_neg,
                r.counts.false_pos,
                r.counts.false_neg,
                opt(&r.accuracy),
                opt(&r.precision),
                opt(&r.recall),
                opt(&r.f1),
            ));
        }
        out.push_str(&format!("\n*{}*\n\n", self.accuracy_footnote));

        out.push_str("## Calibration and threshold metrics\n\n");
        out.push_str("| Observer | Pairs | Brier | ROC AUC | AUPRC | Note |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for r in &self.calibration {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                r.group,
                r.pairs,
                opt(&r.brier),
                opt(&r.roc_auc),
                opt(&r.auprc),
                r.note.as_deref().unwrap_or(""),
            ));
        }
        out.push('\n');

        out.push_str("## Suspicion trends by round\n\n");
        out.push_str("| Round | Target role | Mean suspicion | SEM | 95% CI ± | Games |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for c in &self.trends.cells {
            out.push_str(&format!(
                "| {} | {} | {:.4} | {} | {} | {} |\n",
                c.round,
                c.role,
                c.mean_suspicion,
                opt(&c.sem),
                opt(&c.ci95_half_width),
                c.games
            ));
        }
        out.push_str("\n| Round | Flagged fraction | SEM | Games |\n|---|---|---|---|\n");
        for c in &self.trends.flagged {
            out.push_str(&format!(
                "| {} | {:.4} | {} | {} |\n",
                c.round,
                c.flagged_fraction,
                opt(&c.sem),
                c.games
            ));
        }
        out.push_str("\nTheil–Sen slopes (percentage points per round): ");
        let slopes: Vec<String> = self
            .trends
            .slopes_pp_per_round
            .iter()
            .map(|(role, s)| format!("{role} {}", opt(s)))
            .collect();
        out.push_str(&slopes.join(", "));
        out.push_str(&format!(
            "; flagged fraction {}\n\n",
            opt(&self.trends.flagged_slope_pp_per_round)
        ));

        out.push_str("## Deception-type effects\n\n");
        out.push_str("| Type | Count | Avg. suspicion | Avg. flagged |\n|---|---|---|---|\n");
        for r in &self.types {
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                r.dtype,
                r.count,
                opt(&r.mean_suspicion),
                opt(&r.mean_flagged)
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# meta\n");
        out.push_str("games,mode,settings_hash,total_statements,total_judgments\n");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            self.meta.games, self.meta.mode, self.meta.settings_hash, self.meta.total_statements, self.meta.total_judgments
        ));

        out.push_str("# per_role\n");
        out.push_str("role,statements,self_deceptions,mean_suspicion,suspicion_sem,mean_flagged,flagged_sem\n");
        for r in &self.per_role {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.role,
                r.statements,
                r.self_deceptions,
                opt_csv(&r.mean_suspicion),
                opt_csv(&r.suspicion_sem),
                opt_csv(&r.mean_flagged),
                opt_csv(&r.flagged_sem),
            ));
        }

        for (name, cross) in [("cross_smoothed", &self.cross_smoothed), ("cross_raw", &self.cross_raw)] {
            out.push_str(&format!("# {name}\n"));
            out.push_str("observer_role,target_role,value\n");
            for (observer, row) in &cross.cells {
                for (target, cell) in row {
                    let rendered = if cross.not_applicable.contains(&(*observer, *target)) {
                        "n/a".to_string()
                    } else {
                        opt_csv(cell)
                    };
                    out.push_str(&format!("{observer},{target},{rendered}\n"));
                }
            }
        }

        out.push_str("# observer_accuracy\n");
        out.push_str("observer,tp,tn,fp,fn,accuracy,precision,recall,f1\n");
        for r in &self.accuracy {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.group,
                r.counts.true_pos,
                r.counts.true_neg,
                r.counts.false_pos,
                r.counts.false_neg,
                opt_csv(&r.accuracy),
                opt_csv(&r.precision),
                opt_csv(&r.recall),
                opt_csv(&r.f1),
            ));
        }

        out.push_str("# calibration\n");
        out.push_str("observer,pairs,brier,roc_auc,auprc\n");
        for r in &self.calibration {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.group,
                r.pairs,
                opt_csv(&r.brier),
                opt_csv(&r.roc_auc),
                opt_csv(&r.auprc),
            ));
        }

        out.push_str("# trends\n");
        out.push_str("round,role,mean_suspicion,sem,ci95_half_width,games\n");
        for c in &self.trends.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.round,
                c.role,
                fmt(c.mean_suspicion),
                opt_csv(&c.sem),
                opt_csv(&c.ci95_half_width),
                c.games
            ));
        }
        out.push_str("# trends_flagged\n");
        out.push_str("round,flagged_fraction,sem,games\n");
        for c in &self.trends.flagged {
            out.push_str(&format!(
                "{},{},{},{}\n",
                c.round,
                fmt(c.flagged_fraction),
                opt_csv(&c.sem),
                c.games
            ));
        }
        out.push_str("# trend_slopes\n");
        out.push_str("series,pp_per_round\n");
        for (role, s) in &self.trends.slopes_pp_per_round {
            out.push_str(&format!("{role},{}\n", opt_csv(s)));
        }
        out.push_str(&format!("flagged,{}\n", opt_csv(&self.trends.flagged_slope_pp_per_round)));

        out.push_str("# type_effects\n");
        out.push_str("type,count,mean_suspicion,mean_flagged\n");
        for r in &self.types {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.dtype,
                r.count,
                opt_csv(&r.mean_suspicion),
                opt_csv(&r.mean_flagged)
            ));
        }
        out
    }
}

/// Plot-ready CSV: one row per (round, target role) with the per-round
/// overall flagged fraction repeated on each row.
pub fn figure_csv(trends: &TrendReport) -> String {
    let mut out = String::from("round,role,mean_suspicion,sem,flagged_fraction\n");
    for cell in &trends.cells {
        let flagged = trends
            .flagged
            .iter()
            .find(|f| f.round == cell.round)
            .map(|f| fmt(f.flagged_fraction))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.round,
            cell.role,
            fmt(cell.mean_suspicion),
            opt_csv(&cell.sem),
            flagged
        ));
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn opt(v: &Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "—".to_string(),
    }
}

fn with_sem(value: &Option<f64>, sem: &Option<f64>) -> String {
    match (value, sem) {
        (Some(v), Some(s)) => format!("{v:.4} ±{s:.4}(sem)"),
        _ => opt(value),
    }
}

fn opt_csv(v: &Option<f64>) -> String {
    match v {
        Some(v) => fmt(*v),
        None => String::new(),
    }
}

fn seed_span(seeds: &[u64]) -> String {
    match (seeds.iter().min(), seeds.iter().max()) {
        (Some(lo), Some(hi)) if lo != hi => format!("{lo}..={hi} ({} games)", seeds.len()),
        (Some(lo), _) => format!("{lo}"),
        _ => "none".to_string(),
    }
}
