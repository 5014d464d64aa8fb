//! Report artifacts: JSON summary, confusion CSV, per-frame decision logs,
//! sweep curves and SVG figures.
//!
//! Summary schema (`summary.json`): the serialized [`EvalReport`]. Keys are
//! `scheme` (`SixClass`/`TwoClass`), `protocol`, `threshold`, `repetitions`,
//! `mean_accuracy`/`std_accuracy` (null when nothing was decided),
//! `rep_accuracies`, `mean_confusion` (row-major, rows are true classes),
//! `decision_fraction`, `mean_decision_period_s`, `per_subject_accuracy`
//! (`subject -> [mean, std]`), `excluded_subjects`,
//! `collapsed_two_class_accuracy`, `evaluated_frames`, `decided_frames`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::eval::{EvalReport, RepetitionLog, SweepPoint};
use crate::types::RegionScheme;

/// Non-finite confidences are written as `inf`.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "undefined".into())
}

pub fn summary_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Mean confusion matrix with class names as header row and first column.
pub fn confusion_csv(report: &EvalReport) -> String {
    let n = report.scheme.n_classes();
    let names: Vec<&str> = (0..n).map(|c| report.scheme.class_name(c)).collect();
    let mut out = format!("true\\predicted,{}\n", names.join(","));
    for (t, name) in names.iter().enumerate() {
        let row: Vec<String> = (0..n).map(|p| fmt_f64(report.mean_confusion[t * n + p])).collect();
        let _ = writeln!(out, "{name},{}", row.join(","));
    }
    out
}

pub const DECISION_LOG_HEADER: &str = "subject,frame,true,predicted,confidence,decided";

/// Per-frame decision log; a `repetition` column is prepended.
pub fn write_decision_log(mut w: impl Write, logs: &[RepetitionLog], threshold: f64) -> io::Result<()> {
    writeln!(w, "repetition,{DECISION_LOG_HEADER}")?;
    for log in logs {
        for r in &log.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                log.repetition,
                r.subject,
                r.frame_index,
                r.true_class,
                r.predicted,
                fmt_f64(r.confidence),
                r.decided(threshold)
            )?;
        }
    }
    Ok(())
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("threshold,mean_accuracy,std_accuracy,mean_decision_period_s,decision_fraction\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(p.threshold),
            opt(p.mean_accuracy),
            opt(p.std_accuracy),
            opt(p.mean_decision_period_s),
            fmt_f64(p.decision_fraction)
        );
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 60.0;

fn svg_frame(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    );
    let _ = writeln!(
        s,
        "<line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>",
        b = H - M,
        r = W - M / 2.0
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>", W / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {y})\">{y_label}</text>",
        y = H / 2.0
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = H - M - v * (H - 2.0 * M);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.2}</text>", M - 6.0, y + 4.0);
    }
    s
}

/// Accuracy against decision period, with std error bars.
pub fn sweep_svg(points: &[SweepPoint]) -> String {
    let mut s = svg_frame("Accuracy vs decision period", "decision period (s)", "accuracy");
    let pts: Vec<(f64, f64, f64)> = points
        .iter()
        .filter_map(|p| Some((p.mean_decision_period_s?, p.mean_accuracy?, p.std_accuracy.unwrap_or(0.0))))
        .collect();
    if pts.is_empty() {
        return s + "</svg>\n";
    }
    let x_max = pts.iter().map(|p| p.0).fold(0.0f64, f64::max).max(1e-9);
    let sx = |x: f64| M + x / x_max * (W - 1.5 * M);
    let sy = |y: f64| H - M - y.clamp(0.0, 1.0) * (H - 2.0 * M);
    let path: Vec<String> = pts.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>", path.join(" "));
    for &(x, y, e) in &pts {
        let _ = writeln!(
            s,
            "<line x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"gray\"/><circle cx=\"{0:.2}\" cy=\"{3:.2}\" r=\"3\" fill=\"steelblue\"/>",
            sx(x),
            sy(y - e),
            sy(y + e),
            sy(y)
        );
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", W - M / 2.0, H - M + 16.0, fmt_f64(x_max));
    s + "</svg>\n"
}

/// Per-subject mean accuracy bars with std whiskers.
pub fn per_subject_svg(report: &EvalReport) -> String {
    let mut s = svg_frame("Per-subject accuracy", "subject", "accuracy");
    let n = report.per_subject_accuracy.len().max(1) as f64;
    let slot = (W - 1.5 * M) / n;
    let sy = |y: f64| H - M - y.clamp(0.0, 1.0) * (H - 2.0 * M);
    for (i, (subject, &(mean, std))) in report.per_subject_accuracy.iter().enumerate() {
        let x = M + i as f64 * slot;
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"steelblue\"/>",
            x + slot * 0.15,
            sy(mean),
            slot * 0.7,
            sy(0.0) - sy(mean)
        );
        let cx = x + slot / 2.0;
        let _ = writeln!(s, "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", sy(mean - std), sy(mean + std));
        let _ = writeln!(s, "<text x=\"{cx:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{subject}</text>", H - M + 14.0);
    }
    s + "</svg>\n"
}

/// Write `summary.json`, `confusion.csv` and `per_subject.svg` into `dir`,
/// plus `decisions.csv` when logs are given.
pub fn write_report_dir(dir: &Path, report: &EvalReport, logs: Option<&[RepetitionLog]>) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("summary.json"), summary_json(report))?;
    std::fs::write(dir.join("confusion.csv"), confusion_csv(report))?;
    std::fs::write(dir.join("per_subject.svg"), per_subject_svg(report))?;
    if report.scheme == RegionScheme::SixClass {
        if let Some(acc) = report.collapsed_two_class_accuracy {
            std::fs::write(dir.join("collapsed_two_class.txt"), format!("{}\n", fmt_f64(acc)))?;
        }
    }
    if let Some(logs) = logs {
        let mut f = io::BufWriter::new(std::fs::File::create(dir.join("decisions.csv"))?);
        write_decision_log(&mut f, logs, report.threshold)?;
        f.flush()?;
    }
    Ok(())
}
