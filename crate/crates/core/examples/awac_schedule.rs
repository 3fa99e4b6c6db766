//! Offline fraction and temperature of the AWAC schedule over a run.

use policy_finetune::datastore::{AwacSchedule, BatchRatio};

fn main() -> policy_finetune::Result<()> {
    let total = 20_000;
    let s = AwacSchedule::from_total_steps(total)?;
    println!("{s:?}");
    println!("   step  offline  temperature  batch");
    for k in 0..=10 {
        let t = total * k / 10;
        let (fraction, temperature) = s.at(t);
        let ratio = BatchRatio::from_fraction(64, fraction);
        println!("{t:>7}  {fraction:>7.3}  {temperature:>11.3}  {ratio}");
    }
    Ok(())
}
