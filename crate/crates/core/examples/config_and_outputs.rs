//! Parse a config, show the preset expansion and canonical manifest, run it
//! through the same path as `nlns run`, and read a snapshot back.

use nlns::cli::execute;
use nlns::config::{parse_config, Preset};
use nlns::snapshot::Snapshot;

fn main() -> nlns::Result<()> {
    for p in Preset::ALL {
        println!("{:14} {}", p.name(), p.description());
    }

    let dir = std::env::temp_dir().join("nlns-example");
    let text = format!(
        "# two bumps under the limit dynamics\ndim=1\nn=64\nL=6\nalpha=0.5\npreset=limit\nT=0.2\ninitial=two-bumps\nsnapshot_every=100\noutput_dir={}\n",
        dir.display()
    );
    let config = parse_config(&text)?;
    print!("manifest:\n{}", config.manifest());

    let out = execute(&config)?;
    println!("wrote {} records to {}", out.records.len(), dir.display());
    let snap = Snapshot::read(&dir.join("snapshot_000000.bin"))?;
    for (name, values) in &snap.fields {
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("snapshot field {name}: {} values, max {max:.4}", values.len());
    }
    Ok(())
}
