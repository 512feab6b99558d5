use std::path::PathBuf;
use std::sync::Arc;

use tilemil::annotation::{export_labels, read_log, write_labels, LOG_FILE, SNAPSHOT_FILE};

use crate::args::{ExportArgs, ServeArgs};
use crate::config::{absolute, require_exists, RunConfig};
use crate::context::{load_cohort, resolve_paths, LABELS_DIR};
use crate::error::{CliError, CliResult};
use crate::service::{open_log, router, AppState};

fn labels_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    Ok(match &cfg.paths.out {
        Some(o) => absolute(o),
        None => absolute(cfg.cohort()?).join(LABELS_DIR),
    })
}

pub fn serve(args: &ServeArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.cohort.apply(&mut cfg);
    args.tiling.apply(&mut cfg);
    if let Some(h) = &args.host {
        cfg.serve.host = h.clone();
    }
    if let Some(p) = args.port {
        cfg.serve.port = p;
    }
    cfg.paths.out = Some(labels_dir(&cfg)?);
    cfg.command = "annotate serve".into();
    resolve_paths(&mut cfg, false)?;
    let out = cfg.out()?.to_path_buf();
    let cohort = load_cohort(&cfg)?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::UnwritableLabels(format!("{}: {e}", out.display())))?;
    let log = open_log(&out.join(LOG_FILE)).map_err(CliError::UnwritableLabels)?;
    cfg.write(&out)?;
    let state = Arc::new(AppState::new(&cohort.patients, cohort.slides, log));

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let addr = format!("{}:{}", cfg.serve.host, cfg.serve.port);
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| match e.kind() {
            std::io::ErrorKind::AddrInUse => CliError::PortInUse(cfg.serve.port),
            _ => e.into(),
        })?;
        eprintln!("serving {} on http://{addr}, log {}", cfg.cohort()?.display(), state.log_path().display());
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}

pub fn export(args: &ExportArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    if let Some(c) = &args.cohort {
        cfg.paths.cohort = Some(c.clone());
    }
    cfg.command = "annotate export".into();
    let out = labels_dir(&cfg)?;
    let cohort = absolute(cfg.cohort()?);
    require_exists(&cohort, "cohort directory")?;
    let log_path = match &cfg.paths.input {
        Some(p) => absolute(p),
        None => cohort.join(LABELS_DIR).join(LOG_FILE),
    };
    cfg.paths.cohort = Some(cohort);
    cfg.paths.out = Some(out.clone());
    cfg.paths.input = Some(log_path.clone());
    let entries = if log_path.exists() { read_log(&log_path)? } else { Vec::new() };
    let labels = export_labels(&entries)?;
    cfg.paths.labels = Some(out.join(SNAPSHOT_FILE));
    cfg.write(&out)?;
    write_labels(&out.join(SNAPSHOT_FILE), &labels)?;
    println!("{} tile labels written to {}", labels.len(), out.join(SNAPSHOT_FILE).display());
    Ok(())
}
