//! Run a catalog preset at one table time and set the scalar flux beside
//! the published column.
//!
//!     cargo run --release --example preset_vs_published -- thin-gaussian-cv 3.16228

use radtrans::presets::preset;
use radtrans::run::{preset_configs, run_configs};
use radtrans::tables::TableField;

fn main() -> radtrans::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "thin-gaussian-su".into());
    let t = args.next().unwrap_or_else(|| "1.0".into());
    let p = preset(&name)?;
    let o = vec![("eval_times".to_string(), t)];
    let run = run_configs(&p, &o, &preset_configs(&p, &o)?)?;
    let ours = run.table(TableField::Phi)?;
    let published = p.published(TableField::Phi)?;
    let t = ours.ts[0];
    let j = published.ts.iter().position(|&s| s == t).expect("t must be a table time");
    println!("{name} at t = {t}");
    println!("{:>10} {:>12} {:>12} {:>10}", "x", "solver", "published", "diff");
    for (i, &x) in ours.xs.iter().enumerate() {
        let v = ours.values[i][0].unwrap();
        match published.values[i][j] {
            Some(p) => println!("{x:>10} {v:>12.6} {p:>12.6} {:>10.1e}", v - p),
            None => println!("{x:>10} {v:>12.6} {:>12}", "-"),
        }
    }
    Ok(())
}
