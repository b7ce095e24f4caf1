//! Builds a run configuration with overrides and prints the resulting TOML.

use nvlab::harness::RunConfig;

fn main() -> nvlab::Result<()> {
    let base = "workers = 4\n[perturb]\nk = 0.6\n";
    let cfg = RunConfig::from_toml_with_overrides(base, &["perturb.gamma=0.384".into(), "scan.nk=21".into()])?;
    cfg.validate()?;
    print!("{}", cfg.to_toml());
    Ok(())
}
