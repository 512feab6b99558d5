use tilemil::synth::generate_cohort;

use crate::args::SynthArgs;
use crate::config::absolute;
use crate::error::CliResult;

pub fn gen(args: &SynthArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.apply(&mut cfg);
    cfg.command = "synth gen".into();
    let out = absolute(cfg.out()?);
    cfg.paths.out = Some(out.clone());
    cfg.synth.validate()?;
    let (manifest, _) = generate_cohort(&cfg.synth, &out)?;
    cfg.write(&out)?;
    let r = manifest.patients.iter().filter(|p| p.response.is_responder()).count();
    println!("generated {} patients ({r} responders) in {}", manifest.patients.len(), out.display());
    Ok(())
}
