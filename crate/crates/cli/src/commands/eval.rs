use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};

use tilemil::eval::{enrich, select_threshold, ScoredPatient};

use super::{patient_tps, prepare, ENRICHMENT_FILE, TPS_FILE};
use crate::args::{EnrichArgs, TpsArgs};
use crate::config::{absolute, require_exists};
use crate::context::load_cohort;
use crate::error::{usage, CliResult};

pub fn tps(args: &TpsArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    if let Some(c) = &args.cohort {
        cfg.paths.cohort = Some(c.clone());
    }
    let out = prepare(&mut cfg, "eval tps", false)?;
    let cohort = load_cohort(&cfg)?;
    let rows = patient_tps(&cohort, &cfg.eval.tps)?;
    cfg.write(&out)?;
    let mut w = BufWriter::new(File::create(out.join(TPS_FILE))?);
    for r in &rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    println!("TPS of {} patients written to {}", rows.len(), out.join(TPS_FILE).display());
    Ok(())
}

/// Scores one patient per line; extra fields such as those of
/// `predictions.jsonl` or `tps.jsonl` are ignored.
fn read_scores(path: &std::path::Path) -> CliResult<Vec<ScoredPatient>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn enrichment(args: &EnrichArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.apply(&mut cfg);
    cfg.command = "eval enrich".into();
    let input = absolute(cfg.paths.input.as_deref().ok_or_else(|| usage("missing --input"))?);
    require_exists(&input, "scores file")?;
    let out = absolute(cfg.out()?);
    cfg.paths.input = Some(input.clone());
    cfg.paths.out = Some(out.clone());

    let patients = read_scores(&input)?;
    let threshold = match cfg.eval.threshold {
        Some(t) => t,
        None => select_threshold(&patients, cfg.eval.policy)?,
    };
    let report = enrich(&patients, threshold, &cfg.eval.rule_name)?;
    cfg.write(&out)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out.join(ENRICHMENT_FILE), text)?;
    let p = report.precision;
    println!(
        "{}: {} of {} selected, {} responders; precision {:.3} [{:.3}, {:.3}], accuracy {:.3}",
        report.rule, report.n_selected, report.n_total, report.true_positives, p.value, p.ci_low, p.ci_high, report.accuracy.value
    );
    Ok(())
}
