//! Generate the S2 Gaussian reference table and compare it against the
//! shipped published table.
//!
//!     cargo run --release --example compare_tables

use radtrans::problem::SourceKind;
use radtrans::run::reference_tables;
use radtrans::tables::{compare, published, TableField, TableModel};

fn main() -> radtrans::error::Result<()> {
    let (phi, e) = reference_tables(SourceKind::Gaussian)?;
    for (ours, field) in [(phi, TableField::Phi), (e, TableField::E)] {
        let reference = published("thin-gaussian-su", field, TableModel::S2)?;
        println!("{field}:\n{}\n", compare(&ours, &reference, 5e-6)?);
    }
    Ok(())
}
