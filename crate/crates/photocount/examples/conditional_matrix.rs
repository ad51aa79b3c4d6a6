//! Conditional probability matrix P(m|n): build, check column mass, and
//! dump the CSV export that the CLI also produces.

use photocount::model::NoiseModel;
use photocount::povm::cond_matrix;
use photocount::DetectorConfig;

fn main() -> photocount::Result<()> {
    let detector = DetectorConfig::new(0.8, NoiseModel::FiniteModes { n_noise: 0.3, modes: 2 })?;
    let matrix = cond_matrix(&detector, 5, 12)?;

    for n in 0..=matrix.n_max {
        let mass: f64 = matrix.column(n).iter().sum();
        println!("column n = {n}: mass {mass:.12}, tail bound {:.3e}", matrix.column_tail_bounds[n]);
    }
    println!();
    print!("{}", matrix.to_csv());
    Ok(())
}
