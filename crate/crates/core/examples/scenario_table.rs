//! Electrification scenarios from the 2012 Nordic heating inventory.
//!
//! ```text
//! cargo run --example scenario_table
//! ```

use heatrisk::scenario::{
    build_scenario, nordic_2012_inventory, render_scenario_table, scenario_table, share_label,
    DEFAULT_REPLACEMENT_FACTOR,
};

fn main() -> heatrisk::Result<()> {
    let inventory = nordic_2012_inventory();
    let rows = scenario_table(&inventory, &[0.5, 1.0], DEFAULT_REPLACEMENT_FACTOR)?;
    print!("{}", render_scenario_table(&rows));

    println!();
    println!("model adjustments (HDH multiplier, flat MWh per hour):");
    for inv in &inventory {
        for share in [0.0, 0.5, 1.0] {
            let spec = build_scenario(inv, share, DEFAULT_REPLACEMENT_FACTOR)?;
            println!(
                "  {} {:<5} x{:<8.4} +{:>8.1} MWh/h",
                inv.country,
                share_label(share),
                spec.hdh_multiplier,
                spec.baseload_mwh_per_hour()
            );
        }
    }
    Ok(())
}
