//! Collects teacher demonstrations, writes them to disk and reads them back.
//!
//! cargo run --release --example collect_dataset -- 200 /tmp/grid.pfds

use std::path::PathBuf;

use policy_finetune::datastore::OfflineDataset;
use policy_finetune::envs::{make_teacher, CalibrationOptions, EnvConfig, TeacherTier};

fn main() -> policy_finetune::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(200, |a| a.parse().expect("episode count"));
    let path = args.get(1).map_or_else(|| std::env::temp_dir().join("grid.pfds"), PathBuf::from);

    let env = EnvConfig::grid();
    let tier = TeacherTier::Generalization;
    let teacher = make_teacher(&env, tier, tier.default_success(), &CalibrationOptions::default())?;
    let mut e = env.build()?;
    let data = OfflineDataset::collect(&mut e, &teacher, tier.name(), n, false, 0)?;
    data.save(&path)?;

    let back = OfflineDataset::load(&path)?;
    assert_eq!(back.to_bytes(), data.to_bytes());
    let lens: Vec<usize> = back.episodes().iter().map(|ep| ep.len()).collect();
    println!(
        "{} episodes, {} transitions (mean length {:.1}), success {:.3}, {} bytes at {}",
        back.len(),
        back.n_transitions(),
        lens.iter().sum::<usize>() as f64 / lens.len() as f64,
        back.success_rate(),
        std::fs::metadata(&path)?.len(),
        path.display()
    );
    println!("meta: {:?}", back.meta());
    Ok(())
}
