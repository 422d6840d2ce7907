//! Budget schedules for the Besov embedding and the decay rate they achieve.

use gelfand::besov::{self, BesovParams, Variant};

fn main() -> gelfand::Result<()> {
    let params = BesovParams::sharp(2, 0.3, 1.0, 2.0);
    let schedule = besov::budget_schedule(&params, 12, None, None, Variant::Sharp)?;
    println!(
        "J = 12: L = {}, M = {}, total budget {}",
        schedule.l, schedule.m, schedule.total
    );
    for layer in schedule.per_layer.iter().step_by(4) {
        println!(
            "  mu = {:<3} m_mu = {:<8} D_mu = {}",
            layer.mu, layer.m_mu, layer.d_mu
        );
    }

    let js: Vec<usize> = (8..=18).collect();
    for row in besov::rate_table(&params, &js, None, None, Variant::Sharp)? {
        println!(
            "J = {:<3} m = {:<10} bound {:.4}",
            row.j, row.total_m, row.aggregate
        );
    }
    let fit = besov::rate_fit(&params, &js, None, None, Variant::Sharp)?;
    println!("fitted slope {:.4} (r = {})", fit.slope, params.r);
    Ok(())
}
