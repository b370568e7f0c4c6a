//! Report rendering: human-readable text, machine-readable JSON-compatible
//! structures (via serde), and CSV row streams.
//!
//! CSV formatting is byte-stable: identical reports print identical bytes,
//! which the reproducibility checks rely on.

use crate::brouwer::DegreeMethod;
use crate::pipeline::DegreeReport;

/// CSV header for stabilization rows.
pub const CSV_HEADER: &str = "n,deg,epsilon,tail_bound,method,seed";

fn method_label(m: DegreeMethod) -> &'static str {
    match m {
        DegreeMethod::PreimageCount => "preimage_count",
        DegreeMethod::Winding => "winding",
        DegreeMethod::SignChange => "sign_change",
        DegreeMethod::SimplicialBoundary => "simplicial_boundary",
    }
}

/// One CSV row per window member: `n,deg,epsilon,tail_bound,method,seed`.
pub fn csv_rows(report: &DegreeReport) -> Vec<String> {
    report
        .window
        .iter()
        .zip(&report.certificates)
        .zip(&report.tail_bounds)
        .map(|(((n, deg), cert), tail)| {
            format!(
                "{},{},{},{},{},{}",
                n,
                deg,
                fmt_f64(report.gap.epsilon),
                fmt_f64(*tail),
                method_label(cert.method),
                report.seed
            )
        })
        .collect()
}

/// Stable float formatting: shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Human-readable report.
pub fn render_text(report: &DegreeReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("map: {}\n", report.map_name));
    out.push_str(&format!(
        "gap: epsilon = {} (sampled boundary min {} at mesh {}, L = {}, cert dim {}, sound = {})\n",
        fmt_f64(report.gap.epsilon),
        fmt_f64(report.gap.boundary_min_sampled),
        fmt_f64(report.gap.mesh),
        fmt_f64(report.gap.lipschitz_used),
        report.gap.cert_dim,
        report.gap.sound,
    ));
    out.push_str(&format!("galerkin start: N = {}\n", report.n_start));
    out.push_str("window:\n");
    for (((n, deg), cert), tail) in report
        .window
        .iter()
        .zip(&report.certificates)
        .zip(&report.tail_bounds)
    {
        out.push_str(&format!(
            "  n = {:>3}  deg = {:>4}  tau(R,n) = {:<12}  zeros = {}  method = {}\n",
            n,
            deg,
            fmt_f64(*tail),
            cert.zeros_found.len(),
            method_label(cert.method),
        ));
    }
    out.push_str(&format!("Deg = {}\n", report.value));
    out.push_str(&format!("seed = {}\n", report.seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EngineConfig;
    use crate::hilbert::HilbertVector;
    use crate::map::{CompactMapSpec, LocalMap};
    use crate::pipeline::compute_deg;
    use crate::region::Region;

    fn sample_report() -> DegreeReport {
        let f = LocalMap::new(
            "identity",
            CompactMapSpec::finite_rank(|_| HilbertVector::zero(), 1, 0.0, |_| 0.0)
                .with_input_dim_cap(1),
            Region::ball(HilbertVector::zero(), 1.0),
        );
        compute_deg(&f, &EngineConfig::with_seed(3)).unwrap()
    }

    #[test]
    fn csv_rows_have_fixed_shape() {
        let report = sample_report();
        let rows = csv_rows(&report);
        assert_eq!(rows.len(), report.window.len());
        for row in &rows {
            assert_eq!(row.split(',').count(), 6);
        }
        assert!(rows[0].ends_with(",preimage_count,3"));
    }

    #[test]
    fn text_report_mentions_the_value() {
        let report = sample_report();
        let text = render_text(&report);
        assert!(text.contains("Deg = 1"));
        assert!(text.contains("sound = true"));
    }

    #[test]
    fn reports_serialize_to_json() {
        let report = sample_report();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"value\":1"));
    }
}
