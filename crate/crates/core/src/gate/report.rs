//! Final report for a gated run. Only rendered after checkpoint C passes.

use super::audit::AuditEntry;
use super::checkpoint::IntegrityTable;
use super::funnel::FunnelRecord;
use super::plan::Phase0Plan;
use std::fmt::Write;

pub fn render_report(
    task: &str,
    plan: &Phase0Plan,
    claims: &[AuditEntry],
    funnel: &[FunnelRecord],
    table: &IntegrityTable,
) -> String {
    let mut out = String::from("# Final report\n\n");
    if !task.is_empty() {
        let _ = writeln!(out, "Task: {task}\n");
    }
    out.push_str("## Plan\n\n");
    for (field, text) in plan.summary() {
        let _ = writeln!(out, "- {}: {text}", field.as_str());
    }
    out.push_str("\n## Findings\n\n");
    if claims.is_empty() {
        out.push_str("No claims.\n");
    }
    for c in claims {
        let _ = writeln!(out, "- {}", c.render());
    }
    if !funnel.is_empty() {
        out.push_str(
            "\n## Screening funnel\n\n| tier | in | out | verified |\n|---|---|---|---|\n",
        );
        for r in funnel {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                r.tier,
                r.molecules_in,
                r.actual_out(),
                r.verified
            );
        }
    }
    out.push_str("\n## Data integrity verification\n\n");
    out.push_str(&table.render());
    out
}
